#include "distill/expert.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace distill {

int QModel::greedy_action(const Vec& obs) const {
    Vec q = q_values(obs);
    Eigen::Index best;
    q.maxCoeff(&best);
    return static_cast<int>(best);
}

ValueIterationResult value_iteration(const TabularMDP& mdp, double tol) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    Mat q = Mat::Zero(S, A);
    Vec v = Vec::Zero(S);
    double delta = std::numeric_limits<double>::infinity();
    while (delta >= tol) {
        Mat next(S, A);
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
                next(s, a) = mdp.reward()(s, a) + mdp.gamma() * mdp.row(s, a).dot(v);
        delta = (next - q).cwiseAbs().maxCoeff();
        q = next;
        v = q.rowwise().maxCoeff();
    }
    return {q, PolicyTable::greedy_from_q(q)};
}

// ---------------------------------------------------------------------------

namespace {

std::string encoding_name(GridEncoding e) { return e == GridEncoding::XY ? "xy" : "onehot"; }

GridEncoding encoding_from_name(const std::string& s) {
    if (s == "xy") return GridEncoding::XY;
    if (s == "onehot") return GridEncoding::OneHot;
    throw std::invalid_argument("unknown grid encoding: " + s);
}

nlohmann::json grid_config_to_json(const GridworldConfig& c) {
    return {{"width", c.width},       {"height", c.height},
            {"gamma", c.gamma},       {"horizon", c.horizon},
            {"encoding", encoding_name(c.encoding)},
            {"start_state", c.start_state},
            {"goal_reward", c.goal_reward}};
}

GridworldConfig grid_config_from_json(const nlohmann::json& j) {
    GridworldConfig c;
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.gamma = j.at("gamma").get<double>();
    c.horizon = j.at("horizon").get<int>();
    c.encoding = encoding_from_name(j.at("encoding").get<std::string>());
    c.start_state = j.at("start_state").get<int>();
    c.goal_reward = j.at("goal_reward").get<double>();
    return c;
}

}  // namespace

TabularQModel::TabularQModel(Mat q, GridworldConfig grid_cfg)
    : q_(std::move(q)), grid_(grid_cfg) {
    if (q_.rows() != grid_.mdp().n_states() || q_.cols() != grid_.mdp().n_actions())
        throw std::invalid_argument("Q table shape does not match the grid");
}

Vec TabularQModel::q_values(const Vec& obs) const {
    return q_.row(grid_.decode(obs)).transpose();
}

nlohmann::json TabularQModel::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index s = 0; s < q_.rows(); ++s) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index a = 0; a < q_.cols(); ++a) row.push_back(q_(s, a));
        rows.push_back(std::move(row));
    }
    return {{"kind", "tabular"}, {"q", std::move(rows)}, {"grid", grid_config_to_json(grid_.config())}};
}

std::unique_ptr<TabularQModel> TabularQModel::from_json(const nlohmann::json& j) {
    const auto& rows = j.at("q");
    Mat q(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t s = 0; s < rows.size(); ++s)
        for (std::size_t a = 0; a < rows[s].size(); ++a) q(s, a) = rows[s][a].get<double>();
    return std::make_unique<TabularQModel>(std::move(q), grid_config_from_json(j.at("grid")));
}

// ---------------------------------------------------------------------------

FqiModel::FqiModel(Standardizer standardizer, std::vector<ExtraTreesRegressor> per_action,
                   std::vector<double> fallback, int iterations, double gamma)
    : standardizer_(std::move(standardizer)),
      per_action_(std::move(per_action)),
      fallback_(std::move(fallback)),
      iterations_(iterations),
      gamma_(gamma) {
    if (per_action_.size() != fallback_.size() || per_action_.empty())
        throw std::invalid_argument("per-action model lists must match and be non-empty");
}

Vec FqiModel::q_values(const Vec& obs) const {
    Vec z = standardizer_.apply(obs);
    Vec q(n_actions());
    for (int a = 0; a < n_actions(); ++a)
        q(a) = per_action_[a].fitted() ? per_action_[a].predict(z) : fallback_[a];
    return q;
}

Mat FqiModel::q_block(const Mat& std_obs) const {
    Mat q(std_obs.rows(), n_actions());
    for (int a = 0; a < n_actions(); ++a) {
        if (per_action_[a].fitted())
            q.col(a) = per_action_[a].predict_batch(std_obs);
        else
            q.col(a).setConstant(fallback_[a]);
    }
    return q;
}

nlohmann::json FqiModel::to_json() const {
    nlohmann::json actions = nlohmann::json::array();
    for (const ExtraTreesRegressor& r : per_action_)
        actions.push_back(r.fitted() ? r.to_json() : nlohmann::json(nullptr));
    nlohmann::json fb = nlohmann::json::array();
    for (double v : fallback_) fb.push_back(v);
    return {{"kind", "fqi"},
            {"fqi_iterations", iterations_},
            {"gamma", gamma_},
            {"standardizer", standardizer_.to_json()},
            {"fallback", std::move(fb)},
            {"actions", std::move(actions)}};
}

std::unique_ptr<FqiModel> FqiModel::from_json(const nlohmann::json& j) {
    Standardizer std_ = Standardizer::from_json(j.at("standardizer"));
    std::vector<ExtraTreesRegressor> per_action;
    for (const auto& a : j.at("actions"))
        per_action.push_back(a.is_null() ? ExtraTreesRegressor()
                                         : ExtraTreesRegressor::from_json(a));
    std::vector<double> fallback;
    for (const auto& v : j.at("fallback")) fallback.push_back(v.get<double>());
    return std::make_unique<FqiModel>(std::move(std_), std::move(per_action),
                                      std::move(fallback), j.at("fqi_iterations").get<int>(),
                                      j.at("gamma").get<double>());
}

std::unique_ptr<QModel> qmodel_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "tabular") return TabularQModel::from_json(j);
    if (kind == "fqi") return FqiModel::from_json(j);
    throw std::invalid_argument("unknown expert model kind: " + kind);
}

// ---------------------------------------------------------------------------

FqiModel fitted_q_iteration(const TransitionBatch& batch, int iterations, double gamma,
                            const ExtraTreesConfig& regressor_cfg, std::uint64_t seed) {
    if (batch.transitions.empty()) throw std::invalid_argument("FQI batch is empty");
    if (iterations < 1) throw std::invalid_argument("FQI needs at least one iteration");
    const int n = static_cast<int>(batch.transitions.size());
    const int A = batch.n_actions;
    const int d = batch.obs_dim;

    // standardizer over visited states only; next states share the transform
    Vec mean = Vec::Zero(d);
    for (const Transition& t : batch.transitions) mean += t.obs;
    mean /= n;
    Vec var = Vec::Zero(d);
    for (const Transition& t : batch.transitions) {
        Vec diff = t.obs - mean;
        var += diff.cwiseProduct(diff);
    }
    Standardizer std_{mean, (var / n).cwiseSqrt().cwiseMax(1e-8)};

    Mat xs(n, d), xn(n, d);
    Vec r(n);
    std::vector<std::vector<int>> groups(A);
    Vec not_terminal(n);
    for (int i = 0; i < n; ++i) {
        const Transition& t = batch.transitions[i];
        if (t.action < 0 || t.action >= A)
            throw std::invalid_argument("transition action out of range");
        xs.row(i) = std_.apply(t.obs).transpose();
        xn.row(i) = std_.apply(t.next_obs).transpose();
        r(i) = t.reward;
        not_terminal(i) = t.terminal ? 0.0 : 1.0;
        groups[t.action].push_back(i);
    }
    const double mean_reward = r.mean();

    std::vector<ExtraTreesRegressor> per_action(A, ExtraTreesRegressor(regressor_cfg));
    std::vector<double> fallback(A, mean_reward);

    // One tree seed per action, constant across iterations, so that a run
    // whose targets stop changing (gamma = 0) refits to the identical model.
    std::vector<std::uint64_t> fit_seeds(A);
    for (int a = 0; a < A; ++a) fit_seeds[a] = derive_seed(derive_seed(seed, 0x5EED), a);

    Vec y = r;
    for (int it = 1; it <= iterations; ++it) {
        if (it > 1) {
            Mat q(n, A);
            for (int a = 0; a < A; ++a) {
                if (per_action[a].fitted())
                    q.col(a) = per_action[a].predict_batch(xn);
                else
                    q.col(a).setConstant(fallback[a]);
            }
            y = r + gamma * not_terminal.cwiseProduct(q.rowwise().maxCoeff());
        }
        for (int a = 0; a < A; ++a) {
            const auto& g = groups[a];
            if (g.empty()) {
                per_action[a] = ExtraTreesRegressor(regressor_cfg);
                continue;
            }
            Mat xa(g.size(), d);
            Vec ya(g.size());
            for (std::size_t k = 0; k < g.size(); ++k) {
                xa.row(k) = xs.row(g[k]);
                ya(k) = y(g[k]);
            }
            per_action[a].fit(xa, ya, fit_seeds[a]);
        }
    }
    return FqiModel(std::move(std_), std::move(per_action), std::move(fallback), iterations,
                    gamma);
}

// ---------------------------------------------------------------------------

namespace {

// Exploration policy: fresh uniform draws, or a held action resampled with
// probability 1/mean_hold per step. Holding matters on mountain-car, where
// white-noise forces cancel and never build momentum.
class Explorer {
  public:
    Explorer(Exploration kind, int n_actions, int mean_hold, Rng& rng)
        : kind_(kind), n_actions_(n_actions), mean_hold_(std::max(1, mean_hold)), rng_(rng) {}

    void start_episode() { held_ = rng_.uniform_int(n_actions_); }

    int next() {
        if (kind_ == Exploration::Uniform) return rng_.uniform_int(n_actions_);
        if (rng_.uniform() < 1.0 / mean_hold_) held_ = rng_.uniform_int(n_actions_);
        return held_;
    }

  private:
    Exploration kind_;
    int n_actions_;
    int mean_hold_;
    Rng& rng_;
    int held_ = 0;
};

}  // namespace

std::unique_ptr<FqiModel> train_fqi_expert(const EnvConfig& env_cfg,
                                           const ExpertTrainConfig& cfg) {
    if (cfg.rounds < 1 || cfg.episodes_per_round < 1)
        throw std::invalid_argument("expert training needs at least one round and episode");
    if (cfg.epsilon < 0.0 || cfg.epsilon > 1.0)
        throw std::invalid_argument("epsilon must lie in [0, 1]");

    auto env = make_env(env_cfg, derive_seed(cfg.seed, 0xE57));
    const int A = env->spec().n_actions;
    Rng explore_rng(derive_seed(cfg.seed, 0xE47));
    Explorer explorer(cfg.exploration, A, cfg.sticky_mean_hold, explore_rng);

    TransitionBatch batch;
    batch.n_actions = A;
    batch.obs_dim = env->spec().obs_dim;
    std::unique_ptr<FqiModel> model;

    for (int round = 0; round < cfg.rounds; ++round) {
        for (int ep = 0; ep < cfg.episodes_per_round; ++ep) {
            Vec obs = env->reset();
            explorer.start_episode();
            while (true) {
                int action;
                if (!model) {
                    action = explorer.next();
                } else {
                    bool explore = explore_rng.uniform() < cfg.epsilon;
                    action = explore ? explorer.next() : model->greedy_action(obs);
                }
                StepResult sr = env->step(action);
                batch.transitions.push_back(
                    {obs, action, sr.reward, sr.obs, sr.terminated});
                obs = sr.obs;
                if (sr.terminated || sr.truncated) break;
            }
        }

        TransitionBatch fit_batch;
        fit_batch.n_actions = batch.n_actions;
        fit_batch.obs_dim = batch.obs_dim;
        const TransitionBatch* use = &batch;
        if (cfg.max_batch > 0 && static_cast<int>(batch.transitions.size()) > cfg.max_batch) {
            std::vector<int> idx(batch.transitions.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
            Rng sub_rng(derive_seed(cfg.seed, 0xA00 + static_cast<std::uint64_t>(round)));
            for (int i = 0; i < cfg.max_batch; ++i)
                std::swap(idx[i], idx[i + sub_rng.uniform_int(static_cast<int>(idx.size()) - i)]);
            idx.resize(cfg.max_batch);
            std::sort(idx.begin(), idx.end());
            for (int i : idx) fit_batch.transitions.push_back(batch.transitions[i]);
            use = &fit_batch;
        }
        model = std::make_unique<FqiModel>(
            fitted_q_iteration(*use, cfg.iterations, cfg.gamma, cfg.trees,
                               derive_seed(cfg.seed, 0xF17 + static_cast<std::uint64_t>(round))));
    }
    return model;
}

// ---------------------------------------------------------------------------

TrajectoryDataset collect_trajectories(const EnvConfig& env_cfg, const QModel& expert,
                                       int n_trajectories, std::uint64_t seed) {
    if (n_trajectories < 1) throw std::invalid_argument("n_trajectories must be positive");
    auto env = make_env(env_cfg, seed);
    if (expert.n_actions() != env->spec().n_actions)
        throw std::invalid_argument("expert action count does not match the environment");

    TrajectoryDataset ds;
    ds.env = env->spec().id;
    ds.n_actions = env->spec().n_actions;
    ds.obs_dim = env->spec().obs_dim;
    ds.n_trajectories = n_trajectories;
    ds.seed = seed;

    for (int ep = 0; ep < n_trajectories; ++ep) {
        Vec obs = env->reset();
        while (true) {
            Vec q = expert.q_values(obs);
            Eigen::Index best;
            q.maxCoeff(&best);
            ds.rows.push_back({obs, static_cast<int>(best), q, std::nullopt});
            StepResult sr = env->step(static_cast<int>(best));
            obs = sr.obs;
            if (sr.terminated || sr.truncated) break;
        }
    }
    ds.standardizer = fit_standardizer(ds);
    return ds;
}

Vec advantage_from_row(const DatasetRow& row) {
    double v;
    if (row.expert_probs) {
        if (row.expert_probs->size() != row.q_values.size())
            throw std::invalid_argument("expert probabilities do not match q_values length");
        v = row.expert_probs->dot(row.q_values);
    } else {
        v = row.q_values.maxCoeff();
    }
    return row.q_values.array() - v;
}

}  // namespace distill
