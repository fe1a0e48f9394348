#include "distill/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "distill/analysis.hpp"
#include "distill/config.hpp"
#include "distill/svg.hpp"
#include "distill/text.hpp"

namespace distill {

namespace {

namespace fs = std::filesystem;

struct GlobalFlags {
    std::string config_path;
    std::string out_override;
    std::optional<std::uint64_t> seed;
};

RunConfig load_config(const GlobalFlags& g) {
    if (g.config_path.empty()) throw ConfigError("--config is required for this subcommand");
    return RunConfig::from_file(g.config_path);
}

std::string resolve_out(const GlobalFlags& g, const RunConfig& cfg) {
    std::string dir = !g.out_override.empty() ? g.out_override : cfg.out_dir();
    fs::create_directories(dir);
    return dir;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("missing input file: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
}

std::pair<int, std::vector<std::uint64_t>> eval_settings(const GlobalFlags& g,
                                                         const RunConfig& cfg) {
    int n_episodes = 20;
    std::vector<std::uint64_t> seeds = {1};
    if (cfg.has_section("eval")) {
        n_episodes = cfg.eval_n_episodes();
        seeds = cfg.eval_seeds();
    }
    if (g.seed) seeds = {*g.seed};
    return {n_episodes, seeds};
}

int cmd_train_expert(const GlobalFlags& g) {
    RunConfig cfg = load_config(g);
    EnvConfig env_cfg = cfg.env();
    std::string out = resolve_out(g, cfg);

    std::unique_ptr<QModel> model;
    if (cfg.expert_method() == "value-iteration") {
        const auto* grid_cfg = std::get_if<GridworldConfig>(&env_cfg);
        if (!grid_cfg)
            throw ConfigError("[expert] method value-iteration needs the gridworld env");
        Gridworld grid(*grid_cfg);
        ValueIterationResult vi = value_iteration(grid.mdp(), cfg.expert_tol());
        model = std::make_unique<TabularQModel>(vi.q, *grid_cfg);
    } else {
        ExpertTrainConfig ec = cfg.expert();
        if (g.seed) ec.seed = *g.seed;
        model = train_fqi_expert(env_cfg, ec);
    }

    auto [n_episodes, seeds] = eval_settings(g, cfg);
    EvalReport report = evaluate_policy(
        env_cfg, [&](const Vec& obs) { return model->greedy_action(obs); }, n_episodes, seeds);

    nlohmann::json j = model->to_json();
    j["env"] = env_id(env_cfg);
    j["eval_mean_return"] = report.mean;
    write_text_file((fs::path(out) / "expert.json").string(), j.dump() + "\n");

    std::cout << "expert " << env_id(env_cfg) << ": mean return " << fmt_double(report.mean)
              << " over " << n_episodes << " episodes x " << seeds.size() << " seeds\n";
    std::cout << "wrote " << (fs::path(out) / "expert.json").string() << "\n";
    return 0;
}

int cmd_collect(const GlobalFlags& g) {
    RunConfig cfg = load_config(g);
    EnvConfig env_cfg = cfg.env();
    std::string out = resolve_out(g, cfg);

    std::string expert_path = (fs::path(out) / "expert.json").string();
    auto expert = qmodel_from_json(read_json_file(expert_path));

    std::uint64_t seed = g.seed ? *g.seed : cfg.collect_seed();
    TrajectoryDataset ds =
        collect_trajectories(env_cfg, *expert, cfg.collect_n_trajectories(), seed);
    ds.save_jsonl((fs::path(out) / "dataset.jsonl").string());

    std::cout << "collected " << ds.rows.size() << " rows over " << ds.n_trajectories
              << " trajectories\n";
    std::cout << "wrote " << (fs::path(out) / "dataset.jsonl").string() << "\n";
    return 0;
}

int cmd_distill(const GlobalFlags& g, bool bc_only) {
    RunConfig cfg = load_config(g);
    std::string out = resolve_out(g, cfg);

    std::string dataset_path = (fs::path(out) / "dataset.jsonl").string();
    if (!fs::exists(dataset_path)) throw ConfigError("missing input file: " + dataset_path);
    TrajectoryDataset ds = TrajectoryDataset::load_jsonl(dataset_path);

    DistillConfig dc = cfg.distill();
    if (g.seed) dc.seed = *g.seed;
    dc.advantage_enabled = !bc_only;

    TrainResult result = explain_train(ds, dc);
    write_text_file((fs::path(out) / "policy.json").string(),
                    result.policy.to_json().dump() + "\n");
    result.trace.save_csv((fs::path(out) / "trace.csv").string());

    const TracePoint& last = result.trace.points.back();
    std::cout << "distilled " << (bc_only ? "bc_only" : "adv_bc") << ": J_hat "
              << fmt_double(last.j_hat) << ", L_hat " << fmt_double(last.l_hat) << " after "
              << dc.n_iterations << " iterations\n";
    std::cout << "wrote " << (fs::path(out) / "policy.json").string() << "\n";
    return 0;
}

int cmd_eval(const GlobalFlags& g) {
    RunConfig cfg = load_config(g);
    EnvConfig env_cfg = cfg.env();
    std::string out = resolve_out(g, cfg);
    std::string target = cfg.has_section("eval") ? cfg.eval_target() : "policy";

    ActFn act;
    std::optional<SoftmaxLinearPolicy> policy;
    std::unique_ptr<QModel> expert;
    if (target == "expert") {
        expert = qmodel_from_json(read_json_file((fs::path(out) / "expert.json").string()));
        act = [&expert](const Vec& obs) { return expert->greedy_action(obs); };
    } else {
        policy =
            SoftmaxLinearPolicy::from_json(read_json_file((fs::path(out) / "policy.json").string()));
        act = [&policy](const Vec& obs) { return policy->act(obs); };
    }

    auto [n_episodes, seeds] = eval_settings(g, cfg);
    EvalReport report = evaluate_policy(env_cfg, act, n_episodes, seeds);
    report.save_csv((fs::path(out) / "eval.csv").string());

    std::cout << "eval " << target << " on " << env_id(env_cfg) << ": mean "
              << fmt_double(report.mean) << ", std " << fmt_double(report.stddev) << " over "
              << seeds.size() << " seeds x " << n_episodes << " episodes\n";
    std::cout << "wrote " << (fs::path(out) / "eval.csv").string() << "\n";
    return 0;
}

struct BoundFlags {
    int instances = 1000;
    int max_states = 6;
    int max_actions = 4;
    std::string gammas = "0.5,0.9,0.95";
    std::uint64_t seed = 0;
};

int cmd_verify_bound(const GlobalFlags& g, const BoundFlags& flags) {
    std::string out = !g.out_override.empty() ? g.out_override : "out";
    fs::create_directories(out);

    std::vector<double> gammas;
    std::stringstream ss(flags.gammas);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) gammas.push_back(std::stod(item));
    if (gammas.empty()) throw ConfigError("--gammas list is empty");
    for (double gamma : gammas)
        if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");

    std::uint64_t seed = g.seed ? *g.seed : flags.seed;
    std::vector<BoundSweepRow> rows =
        bound_sweep(flags.instances, flags.max_states, flags.max_actions, gammas, seed);
    save_bound_sweep_csv((fs::path(out) / "bound_sweep.csv").string(), rows);

    int violations = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (const BoundSweepRow& r : rows) {
        if (!r.report.holds) ++violations;
        min_slack = std::min(min_slack, r.report.slack);
    }
    std::cout << "bound sweep: " << rows.size() << " instances, " << violations
              << " violations, min slack " << fmt_double(min_slack) << "\n";
    std::cout << "wrote " << (fs::path(out) / "bound_sweep.csv").string() << "\n";
    return violations == 0 ? 0 : 4;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("missing input file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

void plot_trace(const std::string& trace_path, const std::string& svg_path,
                const std::string& env) {
    auto rows = read_csv(trace_path);
    std::vector<double> iters, j_hat, l_hat;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        iters.push_back(std::stod(rows[i][0]));
        j_hat.push_back(std::stod(rows[i][1]));
        l_hat.push_back(std::stod(rows[i][2]));
    }
    if (iters.empty()) return;
    SvgPlot plot("training trace (" + env + ")", "iteration", "objective");
    plot.add_series("J_hat", iters, j_hat);
    plot.add_series("L_hat", iters, l_hat);
    plot.save(svg_path);
}

void plot_curve(const std::string& curve_path, const std::string& svg_path,
                const std::string& title) {
    auto rows = read_csv(curve_path);
    // per-method mean across seeds for each iteration
    std::map<std::string, std::map<double, std::pair<double, int>>> agg;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        double iter = std::stod(rows[i][0]);
        const std::string& method = rows[i][1];
        double ret = std::stod(rows[i][3]);
        auto& cell = agg[method][iter];
        cell.first += ret;
        cell.second += 1;
    }
    if (agg.empty()) return;
    SvgPlot plot(title, "iteration", "mean return");
    for (const auto& [method, by_iter] : agg) {
        std::vector<double> x, y;
        for (const auto& [iter, cell] : by_iter) {
            x.push_back(iter);
            y.push_back(cell.first / cell.second);
        }
        plot.add_series(method, std::move(x), std::move(y));
    }
    plot.save(svg_path);
}

int cmd_report(const GlobalFlags& g) {
    RunConfig cfg = load_config(g);
    EnvConfig env_cfg = cfg.env();
    std::string out = resolve_out(g, cfg);
    std::string env = env_id(env_cfg);

    std::string policy_path = (fs::path(out) / "policy.json").string();
    SoftmaxLinearPolicy policy = SoftmaxLinearPolicy::from_json(read_json_file(policy_path));
    std::vector<std::string> names = make_env(env_cfg, 0)->feature_names();

    WeightReport report = weight_report(policy, names);
    std::string weights_path = (fs::path(out) / ("weights_" + env + ".csv")).string();
    report.save_csv(weights_path);
    std::cout << "wrote " << weights_path << "\n";
    for (const WeightCheck& c : report.checks)
        std::cout << "check " << c.name << ": " << (c.pass ? "PASS" : "FAIL") << "\n";

    std::string trace_path = (fs::path(out) / "trace.csv").string();
    if (fs::exists(trace_path)) {
        std::string svg = (fs::path(out) / ("trace_" + env + ".svg")).string();
        plot_trace(trace_path, svg, env);
        std::cout << "wrote " << svg << "\n";
    }
    for (const auto& entry : fs::directory_iterator(out)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("curve_", 0) == 0 && entry.path().extension() == ".csv") {
            std::string svg = (fs::path(out) / (entry.path().stem().string() + ".svg")).string();
            plot_curve(entry.path().string(), svg, entry.path().stem().string());
            std::cout << "wrote " << svg << "\n";
        }
    }
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"policy distillation pipeline"};
    app.require_subcommand(1);

    GlobalFlags g;
    app.add_option("--config", g.config_path, "path to the INI run configuration");
    app.add_option("--out", g.out_override, "output directory (overrides [out] dir)");
    std::uint64_t seed_value = 0;
    CLI::Option* seed_opt =
        app.add_option("--seed", seed_value, "seed override for the invoked stage");

    // fallthrough lets the global flags appear after the subcommand name
    CLI::App* train_expert =
        app.add_subcommand("train-expert", "train the expert Q model")->fallthrough();
    CLI::App* collect =
        app.add_subcommand("collect", "collect expert trajectories")->fallthrough();
    CLI::App* distill_cmd =
        app.add_subcommand("distill", "distill the dataset into a policy")->fallthrough();
    bool bc_only = false;
    distill_cmd->add_flag("--bc-only", bc_only, "disable the advantage term");
    CLI::App* eval =
        app.add_subcommand("eval", "evaluate a stored policy or expert")->fallthrough();
    CLI::App* verify =
        app.add_subcommand("verify-bound", "random-MDP bound sweep")->fallthrough();
    BoundFlags bf;
    verify->add_option("--instances", bf.instances, "number of random MDP instances");
    verify->add_option("--max-states", bf.max_states, "maximum state count");
    verify->add_option("--max-actions", bf.max_actions, "maximum action count");
    verify->add_option("--gammas", bf.gammas, "comma-separated discount list");
    CLI::App* report =
        app.add_subcommand("report", "emit weight tables and plots")->fallthrough();

    std::vector<std::string> argv_vec = args;
    try {
        std::vector<const char*> argv;
        argv.push_back("distill-cli");
        for (const std::string& a : argv_vec) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (seed_opt->count() > 0) g.seed = seed_value;

    try {
        if (train_expert->parsed()) return cmd_train_expert(g);
        if (collect->parsed()) return cmd_collect(g);
        if (distill_cmd->parsed()) return cmd_distill(g, bc_only);
        if (eval->parsed()) return cmd_eval(g);
        if (verify->parsed()) return cmd_verify_bound(g, bf);
        if (report->parsed()) return cmd_report(g);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: bad input file: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace distill
