#include "distill/analysis.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "distill/text.hpp"

namespace distill {

double disadvantage(const TabularMDP& mdp, const PolicyTable& pi_e, const PolicyTable& pi_i) {
    ValueBundle expert_values = solve_values(mdp, pi_e);
    Vec d = discounted_state_distribution(mdp, pi_e);
    double acc = 0.0;
    for (int s = 0; s < mdp.n_states(); ++s)
        acc += d(s) * pi_i.probs().row(s).dot(expert_values.adv.row(s));
    return acc;
}

double policy_distance_inf(const PolicyTable& pi_a, const PolicyTable& pi_b) {
    if (pi_a.n_states() != pi_b.n_states() || pi_a.n_actions() != pi_b.n_actions())
        throw std::invalid_argument("policy shapes differ");
    return (pi_a.probs() - pi_b.probs()).cwiseAbs().rowwise().sum().maxCoeff();
}

BoundReport bound_check(const TabularMDP& mdp, const PolicyTable& pi_e, const PolicyTable& pi_i) {
    const double gamma = mdp.gamma();
    const double one_minus = 1.0 - gamma;

    BoundReport r;
    r.lhs = expected_return(mdp, pi_i) - expected_return(mdp, pi_e);
    r.adv_term = disadvantage(mdp, pi_e, pi_i) / one_minus;
    double dist = policy_distance_inf(pi_i, pi_e);
    r.penalty_term = gamma / (2.0 * one_minus * one_minus * one_minus) * dist * dist;
    r.rhs = r.adv_term - r.penalty_term;
    r.slack = r.lhs - r.rhs;
    r.holds = r.slack >= -1e-9;
    return r;
}

TabularMDP random_mdp(int n_states, int n_actions, double gamma, Rng& rng) {
    Mat p(static_cast<Eigen::Index>(n_states) * n_actions, n_states);
    for (Eigen::Index row = 0; row < p.rows(); ++row) {
        double total = 0.0;
        for (int t = 0; t < n_states; ++t) {
            double e = -std::log(1.0 - rng.uniform());  // Exp(1) draws: Dirichlet(1) rows
            p(row, t) = e;
            total += e;
        }
        p.row(row) /= total;
    }
    Mat reward(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) reward(s, a) = rng.uniform();
    Vec mu(n_states);
    double total = 0.0;
    for (int s = 0; s < n_states; ++s) {
        mu(s) = -std::log(1.0 - rng.uniform());
        total += mu(s);
    }
    mu /= total;
    return TabularMDP(n_states, n_actions, std::move(p), std::move(reward), gamma, std::move(mu));
}

PolicyTable random_policy(int n_states, int n_actions, Rng& rng) {
    Mat probs(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
        double total = 0.0;
        for (int a = 0; a < n_actions; ++a) {
            probs(s, a) = -std::log(1.0 - rng.uniform());
            total += probs(s, a);
        }
        probs.row(s) /= total;
    }
    return PolicyTable(std::move(probs));
}

std::vector<BoundSweepRow> bound_sweep(int n_instances, int max_states, int max_actions,
                                       const std::vector<double>& gammas, std::uint64_t seed) {
    if (n_instances < 1) throw std::invalid_argument("need at least one instance");
    if (max_states < 2 || max_actions < 2)
        throw std::invalid_argument("need at least two states and actions");
    if (gammas.empty()) throw std::invalid_argument("gamma list is empty");

    std::vector<BoundSweepRow> rows;
    rows.reserve(n_instances);
    for (int i = 0; i < n_instances; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        int S = 2 + rng.uniform_int(max_states - 1);
        int A = 2 + rng.uniform_int(max_actions - 1);
        double gamma = gammas[rng.uniform_int(static_cast<int>(gammas.size()))];
        TabularMDP mdp = random_mdp(S, A, gamma, rng);
        PolicyTable pi_e = random_policy(S, A, rng);
        PolicyTable pi_i = i % 10 == 0 ? pi_e : random_policy(S, A, rng);
        rows.push_back({i, gamma, bound_check(mdp, pi_e, pi_i)});
    }
    return rows;
}

void save_bound_sweep_csv(const std::string& path, const std::vector<BoundSweepRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "instance,gamma,lhs,adv_term,penalty,slack,holds\n";
    for (const BoundSweepRow& r : rows)
        out << fmt_int(r.instance) << ',' << fmt_double(r.gamma) << ',' << fmt_double(r.report.lhs)
            << ',' << fmt_double(r.report.adv_term) << ',' << fmt_double(r.report.penalty_term)
            << ',' << fmt_double(r.report.slack) << ',' << (r.report.holds ? "true" : "false")
            << "\n";
}

// ---------------------------------------------------------------------------

EvalReport evaluate_policy(const EnvConfig& env_cfg, const ActFn& act, int n_episodes,
                           const std::vector<std::uint64_t>& seeds) {
    if (n_episodes < 1) throw std::invalid_argument("n_episodes must be positive");
    if (seeds.empty()) throw std::invalid_argument("seed list is empty");

    EvalReport report;
    report.seeds = seeds;
    report.n_episodes = n_episodes;
    for (std::uint64_t seed : seeds) {
        auto env = make_env(env_cfg, seed);
        double acc = 0.0;
        for (int ep = 0; ep < n_episodes; ++ep) {
            Vec obs = env->reset();
            while (true) {
                StepResult sr = env->step(act(obs));
                acc += sr.reward;
                obs = sr.obs;
                if (sr.terminated || sr.truncated) break;
            }
        }
        report.per_seed_mean.push_back(acc / n_episodes);
    }
    double mean = 0.0;
    for (double v : report.per_seed_mean) mean += v;
    mean /= report.per_seed_mean.size();
    double var = 0.0;
    for (double v : report.per_seed_mean) var += (v - mean) * (v - mean);
    report.mean = mean;
    report.stddev = std::sqrt(var / report.per_seed_mean.size());
    return report;
}

void EvalReport::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "seed,mean_return\n";
    for (std::size_t i = 0; i < seeds.size(); ++i)
        out << fmt_int(static_cast<long long>(seeds[i])) << ',' << fmt_double(per_seed_mean[i])
            << "\n";
    out << "mean," << fmt_double(mean) << "\n";
    out << "std," << fmt_double(stddev) << "\n";
}

// ---------------------------------------------------------------------------

std::vector<CurvePoint> comparison_curve(const EnvConfig& env_cfg, const QModel& expert,
                                         const CurveConfig& cfg) {
    if (cfg.dataset_sizes.empty() || cfg.seeds.empty() || cfg.methods.empty())
        throw std::invalid_argument("comparison curve needs sizes, seeds, and methods");
    for (const std::string& m : cfg.methods)
        if (m != "adv_bc" && m != "bc_only")
            throw std::invalid_argument("unknown method: " + m);

    std::vector<CurvePoint> points;
    for (int size : cfg.dataset_sizes) {
        for (std::uint64_t seed : cfg.seeds) {
            TrajectoryDataset ds = collect_trajectories(
                env_cfg, expert, size, derive_seed(seed, static_cast<std::uint64_t>(size)));
            std::uint64_t eval_seed = derive_seed(seed, 0xEBA1);
            for (const std::string& method : cfg.methods) {
                DistillConfig dc = cfg.distill;
                dc.advantage_enabled = method == "adv_bc";
                dc.seed = seed;
                explain_train(ds, dc, [&](int iter, const SoftmaxLinearPolicy& policy) {
                    EvalReport ev = evaluate_policy(
                        env_cfg, [&](const Vec& obs) { return policy.act(obs); },
                        cfg.eval_episodes, {eval_seed});
                    points.push_back({size, method, seed, iter, ev.mean});
                });
            }
        }
    }
    return points;
}

void save_curve_csvs(const std::string& dir, const std::string& env_id,
                     const std::vector<CurvePoint>& points) {
    std::map<int, std::vector<const CurvePoint*>> by_size;
    for (const CurvePoint& p : points) by_size[p.size].push_back(&p);
    for (const auto& [size, rows] : by_size) {
        std::string path =
            (std::filesystem::path(dir) / ("curve_" + env_id + "_" + fmt_int(size) + ".csv"))
                .string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + path + " for writing");
        out << "iter,method,seed,return\n";
        for (const CurvePoint* p : rows)
            out << fmt_int(p->iter) << ',' << p->method << ','
                << fmt_int(static_cast<long long>(p->seed)) << ',' << fmt_double(p->ret) << "\n";
    }
}

// ---------------------------------------------------------------------------

WeightReport weight_report(const SoftmaxLinearPolicy& policy,
                           const std::vector<std::string>& feature_names) {
    if (static_cast<int>(feature_names.size()) != policy.obs_dim())
        throw std::invalid_argument("feature name count does not match the policy");

    WeightReport report;
    report.feature_names = feature_names;
    report.weights = policy.weights();

    int bid = -1, ask = -1;
    for (int f = 0; f < policy.obs_dim(); ++f) {
        if (feature_names[f] == "l1_bid_size") bid = f;
        if (feature_names[f] == "l1_ask_size") ask = f;
    }
    if (bid >= 0 && ask >= 0 && policy.n_actions() == 3) {
        const Mat& w = report.weights;
        const int kLong = 0, kShort = 2;
        report.checks.push_back({"long_bid_positive", w(kLong, bid) > 0.0});
        report.checks.push_back({"long_ask_negative", w(kLong, ask) < 0.0});
        report.checks.push_back({"short_bid_negative", w(kShort, bid) < 0.0});
        report.checks.push_back({"short_ask_positive", w(kShort, ask) > 0.0});
        auto symmetric = [&](int f) {
            double lo = std::abs(w(kLong, f));
            double hi = std::abs(w(kShort, f));
            double big = std::max(lo, hi);
            return big > 0.0 && std::abs(lo - hi) / big <= 0.25;
        };
        report.checks.push_back({"bid_magnitude_symmetry", symmetric(bid)});
        report.checks.push_back({"ask_magnitude_symmetry", symmetric(ask)});
    }
    return report;
}

void WeightReport::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "action,feature,weight\n";
    for (Eigen::Index a = 0; a < weights.rows(); ++a) {
        for (Eigen::Index f = 0; f < weights.cols(); ++f) {
            const std::string& name =
                f + 1 == weights.cols() ? "bias" : feature_names[static_cast<std::size_t>(f)];
            out << fmt_int(a) << ',' << name << ',' << fmt_double(weights(a, f)) << "\n";
        }
    }
    for (const WeightCheck& c : checks)
        out << "check," << c.name << ',' << (c.pass ? "PASS" : "FAIL") << "\n";
}

double imbalance_rule_agreement(const LobConfig& cfg, const ActFn& act, int n_states,
                                double min_imbalance, std::uint64_t seed) {
    if (n_states < 1) throw std::invalid_argument("n_states must be positive");
    auto env = make_env(cfg, derive_seed(seed, 0x10B));
    Rng action_rng(derive_seed(seed, 0x10C));

    int seen = 0, agreed = 0;
    Vec obs = env->reset();
    while (seen < n_states) {
        double bid = obs(0), ask = obs(1);
        double imbalance = (bid - ask) / (bid + ask);
        if (std::abs(imbalance) > min_imbalance) {
            ++seen;
            int rule = bid > ask ? 0 : 2;
            if (act(obs) == rule) ++agreed;
        }
        StepResult sr = env->step(action_rng.uniform_int(3));
        obs = sr.obs;
        if (sr.terminated || sr.truncated) obs = env->reset();
    }
    return static_cast<double>(agreed) / n_states;
}

}  // namespace distill
