#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "distill/analysis.hpp"
#include "distill/cli.hpp"
#include "distill/config.hpp"
#include "distill/dataset.hpp"
#include "distill/env.hpp"
#include "distill/expert.hpp"
#include "distill/mdp.hpp"
#include "distill/policy.hpp"
#include "distill/rng.hpp"
#include "distill/train.hpp"

namespace py = pybind11;
using namespace distill;

namespace {

TabularMDP make_mdp(int n_states, int n_actions, const Mat& transition, const Mat& reward,
                    double gamma, const Vec& start_dist) {
    return TabularMDP(n_states, n_actions, transition, reward, gamma, start_dist);
}

// Stepping facade so smoke tests can roll out episodes.
class PyEnv {
  public:
    PyEnv(const EnvConfig& cfg, std::uint64_t seed) : env_(make_env(cfg, seed)) {}

    Vec reset() { return env_->reset(); }
    py::tuple step(int action) {
        StepResult r = env_->step(action);
        return py::make_tuple(r.obs, r.reward, r.terminated, r.truncated);
    }
    int n_actions() const { return env_->spec().n_actions; }
    int obs_dim() const { return env_->spec().obs_dim; }
    int horizon() const { return env_->spec().horizon; }
    std::string id() const { return env_->spec().id; }
    std::vector<std::string> feature_names() const { return env_->feature_names(); }

  private:
    std::unique_ptr<Env> env_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "softmax-linear policy distillation core";

    py::register_exception<ConventionMismatch>(m, "ConventionMismatchError");
    py::register_exception<ConfigError>(m, "ConfigError");

    // ------------------------------------------------------------------ mdp
    py::class_<TabularMDP>(m, "TabularMDP")
        .def(py::init(&make_mdp), py::arg("n_states"), py::arg("n_actions"),
             py::arg("transition"), py::arg("reward"), py::arg("gamma"), py::arg("start_dist"))
        .def_property_readonly("n_states", &TabularMDP::n_states)
        .def_property_readonly("n_actions", &TabularMDP::n_actions)
        .def_property_readonly("gamma", &TabularMDP::gamma)
        .def_property_readonly("transition", &TabularMDP::transition)
        .def_property_readonly("reward", &TabularMDP::reward)
        .def_property_readonly("start_dist", &TabularMDP::start_dist)
        .def("to_json", [](const TabularMDP& mdp) { return mdp.to_json().dump(); })
        .def_static("from_json", [](const std::string& text) {
            return TabularMDP::from_json(nlohmann::json::parse(text));
        });

    py::class_<PolicyTable>(m, "PolicyTable")
        .def(py::init<int, int>(), py::arg("n_states"), py::arg("n_actions"))
        .def(py::init<Mat>(), py::arg("probs"))
        .def_property_readonly("probs", &PolicyTable::probs)
        .def_static("greedy_from_q", &PolicyTable::greedy_from_q);

    py::class_<ValueBundle>(m, "ValueBundle")
        .def_readonly("v", &ValueBundle::v)
        .def_readonly("q", &ValueBundle::q)
        .def_readonly("adv", &ValueBundle::adv);

    py::class_<PerformanceDifference>(m, "PerformanceDifference")
        .def_readonly("direct", &PerformanceDifference::direct)
        .def_readonly("decomposition", &PerformanceDifference::decomposition);

    m.def("solve_values", &solve_values);
    m.def("discounted_state_distribution", &discounted_state_distribution);
    m.def("expected_return", &expected_return);
    m.def("performance_difference", &performance_difference);

    // ------------------------------------------------------------------ env
    py::class_<PendulumConfig>(m, "PendulumConfig")
        .def(py::init<>())
        .def_readwrite("n_actions", &PendulumConfig::n_actions)
        .def_readwrite("horizon", &PendulumConfig::horizon)
        .def_readwrite("gamma", &PendulumConfig::gamma);

    py::class_<MountainCarConfig>(m, "MountainCarConfig")
        .def(py::init<>())
        .def_readwrite("n_actions", &MountainCarConfig::n_actions)
        .def_readwrite("horizon", &MountainCarConfig::horizon)
        .def_readwrite("gamma", &MountainCarConfig::gamma);

    py::class_<LobConfig>(m, "LobConfig")
        .def(py::init<>())
        .def_readwrite("n_features", &LobConfig::n_features)
        .def_readwrite("horizon", &LobConfig::horizon)
        .def_readwrite("gamma", &LobConfig::gamma)
        .def_readwrite("kappa", &LobConfig::kappa)
        .def_readwrite("sigma", &LobConfig::sigma)
        .def_readwrite("vol_min", &LobConfig::vol_min)
        .def_readwrite("vol_max", &LobConfig::vol_max);

    py::enum_<GridEncoding>(m, "GridEncoding")
        .value("ONE_HOT", GridEncoding::OneHot)
        .value("XY", GridEncoding::XY);

    py::class_<GridworldConfig>(m, "GridworldConfig")
        .def(py::init<>())
        .def_readwrite("width", &GridworldConfig::width)
        .def_readwrite("height", &GridworldConfig::height)
        .def_readwrite("gamma", &GridworldConfig::gamma)
        .def_readwrite("horizon", &GridworldConfig::horizon)
        .def_readwrite("encoding", &GridworldConfig::encoding)
        .def_readwrite("start_state", &GridworldConfig::start_state)
        .def_readwrite("goal_reward", &GridworldConfig::goal_reward);

    py::class_<Gridworld>(m, "Gridworld")
        .def(py::init<const GridworldConfig&>())
        .def_property_readonly("mdp", &Gridworld::mdp, py::return_value_policy::reference_internal)
        .def_property_readonly("goal_state", &Gridworld::goal_state)
        .def("encode", &Gridworld::encode)
        .def("decode", &Gridworld::decode);

    py::class_<PyEnv>(m, "Env")
        .def(py::init<const EnvConfig&, std::uint64_t>(), py::arg("config"), py::arg("seed"))
        .def("reset", &PyEnv::reset)
        .def("step", &PyEnv::step)
        .def_property_readonly("n_actions", &PyEnv::n_actions)
        .def_property_readonly("obs_dim", &PyEnv::obs_dim)
        .def_property_readonly("horizon", &PyEnv::horizon)
        .def_property_readonly("id", &PyEnv::id)
        .def("feature_names", &PyEnv::feature_names);

    py::class_<Standardizer>(m, "Standardizer")
        .def_readonly("mean", &Standardizer::mean)
        .def_readonly("stddev", &Standardizer::stddev)
        .def("apply", &Standardizer::apply)
        .def("invert", &Standardizer::invert);

    m.def("derive_seed", &derive_seed);
    m.def("pendulum_action_force", &pendulum_action_force);
    m.def("mountain_car_action_force", &mountain_car_action_force);
    m.def("lob_action_position", &lob_action_position);

    // --------------------------------------------------------------- expert
    py::class_<QModel>(m, "QModel")
        .def_property_readonly("n_actions", &QModel::n_actions)
        .def("q_values", &QModel::q_values)
        .def("greedy_action", &QModel::greedy_action)
        .def("to_json", [](const QModel& model) { return model.to_json().dump(); });

    py::class_<TabularQModel, QModel>(m, "TabularQModel")
        .def(py::init<Mat, GridworldConfig>(), py::arg("q"), py::arg("grid_config"))
        .def_property_readonly("table", &TabularQModel::table);

    py::class_<FqiModel, QModel>(m, "FqiModel")
        .def_property_readonly("iterations", &FqiModel::iterations);

    m.def("qmodel_from_json", [](const std::string& text) {
        return qmodel_from_json(nlohmann::json::parse(text));
    });

    py::class_<ValueIterationResult>(m, "ValueIterationResult")
        .def_readonly("q", &ValueIterationResult::q)
        .def_readonly("greedy", &ValueIterationResult::greedy);

    m.def("value_iteration", &value_iteration, py::arg("mdp"), py::arg("tol") = 1e-10);

    py::enum_<Exploration>(m, "Exploration")
        .value("UNIFORM", Exploration::Uniform)
        .value("STICKY", Exploration::Sticky);

    py::class_<ExtraTreesConfig>(m, "ExtraTreesConfig")
        .def(py::init<>())
        .def_readwrite("n_trees", &ExtraTreesConfig::n_trees)
        .def_readwrite("max_depth", &ExtraTreesConfig::max_depth)
        .def_readwrite("min_samples_split", &ExtraTreesConfig::min_samples_split);

    py::class_<ExpertTrainConfig>(m, "ExpertTrainConfig")
        .def(py::init<>())
        .def_readwrite("iterations", &ExpertTrainConfig::iterations)
        .def_readwrite("gamma", &ExpertTrainConfig::gamma)
        .def_readwrite("trees", &ExpertTrainConfig::trees)
        .def_readwrite("rounds", &ExpertTrainConfig::rounds)
        .def_readwrite("episodes_per_round", &ExpertTrainConfig::episodes_per_round)
        .def_readwrite("epsilon", &ExpertTrainConfig::epsilon)
        .def_readwrite("exploration", &ExpertTrainConfig::exploration)
        .def_readwrite("sticky_mean_hold", &ExpertTrainConfig::sticky_mean_hold)
        .def_readwrite("max_batch", &ExpertTrainConfig::max_batch)
        .def_readwrite("seed", &ExpertTrainConfig::seed);

    m.def("train_fqi_expert", &train_fqi_expert, py::arg("env_config"), py::arg("config"));

    py::class_<DatasetRow>(m, "DatasetRow")
        .def(py::init<>())
        .def_readwrite("features", &DatasetRow::features)
        .def_readwrite("action", &DatasetRow::action)
        .def_readwrite("q_values", &DatasetRow::q_values)
        .def_readwrite("expert_probs", &DatasetRow::expert_probs);

    py::class_<TrajectoryDataset>(m, "TrajectoryDataset")
        .def(py::init<>())
        .def_readwrite("env", &TrajectoryDataset::env)
        .def_readwrite("n_actions", &TrajectoryDataset::n_actions)
        .def_readwrite("obs_dim", &TrajectoryDataset::obs_dim)
        .def_readwrite("n_trajectories", &TrajectoryDataset::n_trajectories)
        .def_readwrite("seed", &TrajectoryDataset::seed)
        .def_readwrite("standardizer", &TrajectoryDataset::standardizer)
        .def_readwrite("rows", &TrajectoryDataset::rows)
        .def("__len__", &TrajectoryDataset::size)
        .def("save_jsonl", &TrajectoryDataset::save_jsonl)
        .def_static("load_jsonl", &TrajectoryDataset::load_jsonl);

    m.def("fit_standardizer", &fit_standardizer);
    m.def("collect_trajectories", &collect_trajectories, py::arg("env_config"), py::arg("expert"),
          py::arg("n_trajectories"), py::arg("seed"));
    m.def("advantage_from_row", &advantage_from_row);

    // -------------------------------------------------------------- distill
    py::class_<SoftmaxLinearPolicy>(m, "SoftmaxLinearPolicy")
        .def(py::init<int, int>(), py::arg("n_actions"), py::arg("obs_dim"))
        .def_property_readonly("n_actions", &SoftmaxLinearPolicy::n_actions)
        .def_property_readonly("obs_dim", &SoftmaxLinearPolicy::obs_dim)
        .def_property(
            "weights", [](const SoftmaxLinearPolicy& p) { return p.weights(); },
            [](SoftmaxLinearPolicy& p, const Mat& w) {
                if (w.rows() != p.weights().rows() || w.cols() != p.weights().cols())
                    throw std::invalid_argument("weight shape mismatch");
                p.weights() = w;
            })
        .def_readwrite("standardizer", &SoftmaxLinearPolicy::standardizer)
        .def("logits", &SoftmaxLinearPolicy::logits)
        .def("probs", &SoftmaxLinearPolicy::probs)
        .def("greedy_action", &SoftmaxLinearPolicy::greedy_action)
        .def("act", &SoftmaxLinearPolicy::act)
        .def("to_json", [](const SoftmaxLinearPolicy& p) { return p.to_json().dump(); })
        .def_static("from_json", [](const std::string& text) {
            return SoftmaxLinearPolicy::from_json(nlohmann::json::parse(text));
        });

    py::class_<DistillConfig>(m, "DistillConfig")
        .def(py::init<>())
        .def_readwrite("n_iterations", &DistillConfig::n_iterations)
        .def_readwrite("learning_rate", &DistillConfig::learning_rate)
        .def_readwrite("bc_weight", &DistillConfig::bc_weight)
        .def_readwrite("beta1", &DistillConfig::beta1)
        .def_readwrite("beta2", &DistillConfig::beta2)
        .def_readwrite("eps", &DistillConfig::eps)
        .def_readwrite("seed", &DistillConfig::seed)
        .def_readwrite("log_every", &DistillConfig::log_every)
        .def_readwrite("advantage_enabled", &DistillConfig::advantage_enabled);

    py::class_<GradResult>(m, "GradResult")
        .def_readonly("grad", &GradResult::grad)
        .def_readonly("value", &GradResult::value);

    m.def("grad_advantage", &grad_advantage);
    m.def("grad_bc", &grad_bc);

    py::class_<TracePoint>(m, "TracePoint")
        .def_readonly("iter", &TracePoint::iter)
        .def_readonly("j_hat", &TracePoint::j_hat)
        .def_readonly("l_hat", &TracePoint::l_hat)
        .def_readonly("grad_norm_adv", &TracePoint::grad_norm_adv)
        .def_readonly("grad_norm_bc", &TracePoint::grad_norm_bc);

    py::class_<TrainingTrace>(m, "TrainingTrace")
        .def_readonly("points", &TrainingTrace::points)
        .def("save_csv", &TrainingTrace::save_csv);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("policy", &TrainResult::policy)
        .def_readonly("trace", &TrainResult::trace);

    m.def(
        "explain_train",
        [](const TrajectoryDataset& ds, const DistillConfig& cfg) {
            return explain_train(ds, cfg);
        },
        py::arg("dataset"), py::arg("config"));

    // ------------------------------------------------------------- analysis
    m.def("disadvantage", &disadvantage);
    m.def("policy_distance_inf", &policy_distance_inf);

    py::class_<BoundReport>(m, "BoundReport")
        .def_readonly("lhs", &BoundReport::lhs)
        .def_readonly("adv_term", &BoundReport::adv_term)
        .def_readonly("penalty_term", &BoundReport::penalty_term)
        .def_readonly("rhs", &BoundReport::rhs)
        .def_readonly("slack", &BoundReport::slack)
        .def_readonly("holds", &BoundReport::holds);

    m.def("bound_check", &bound_check);

    py::class_<BoundSweepRow>(m, "BoundSweepRow")
        .def_readonly("instance", &BoundSweepRow::instance)
        .def_readonly("gamma", &BoundSweepRow::gamma)
        .def_readonly("report", &BoundSweepRow::report);

    m.def("bound_sweep", &bound_sweep, py::arg("n_instances"), py::arg("max_states"),
          py::arg("max_actions"), py::arg("gammas"), py::arg("seed"));

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("seeds", &EvalReport::seeds)
        .def_readonly("per_seed_mean", &EvalReport::per_seed_mean)
        .def_readonly("n_episodes", &EvalReport::n_episodes)
        .def_readonly("mean", &EvalReport::mean)
        .def_readonly("stddev", &EvalReport::stddev)
        .def("save_csv", &EvalReport::save_csv);

    m.def(
        "evaluate_policy",
        [](const EnvConfig& env_cfg, const SoftmaxLinearPolicy& policy, int n_episodes,
           const std::vector<std::uint64_t>& seeds) {
            return evaluate_policy(
                env_cfg, [&policy](const Vec& obs) { return policy.act(obs); }, n_episodes,
                seeds);
        },
        py::arg("env_config"), py::arg("policy"), py::arg("n_episodes"), py::arg("seeds"));
    m.def(
        "evaluate_expert",
        [](const EnvConfig& env_cfg, const QModel& expert, int n_episodes,
           const std::vector<std::uint64_t>& seeds) {
            return evaluate_policy(
                env_cfg, [&expert](const Vec& obs) { return expert.greedy_action(obs); },
                n_episodes, seeds);
        },
        py::arg("env_config"), py::arg("expert"), py::arg("n_episodes"), py::arg("seeds"));

    py::class_<WeightCheck>(m, "WeightCheck")
        .def_readonly("name", &WeightCheck::name)
        .def_readonly("pass_", &WeightCheck::pass)
        .def("__repr__", [](const WeightCheck& c) {
            return "WeightCheck(" + c.name + ", " + (c.pass ? "PASS" : "FAIL") + ")";
        });

    py::class_<WeightReport>(m, "WeightReport")
        .def_readonly("feature_names", &WeightReport::feature_names)
        .def_readonly("weights", &WeightReport::weights)
        .def_readonly("checks", &WeightReport::checks)
        .def("save_csv", &WeightReport::save_csv);

    m.def("weight_report", &weight_report);
    m.def(
        "imbalance_rule_agreement",
        [](const LobConfig& cfg, const SoftmaxLinearPolicy& policy, int n_states,
           double min_imbalance, std::uint64_t seed) {
            return imbalance_rule_agreement(
                cfg, [&policy](const Vec& obs) { return policy.act(obs); }, n_states,
                min_imbalance, seed);
        },
        py::arg("lob_config"), py::arg("policy"), py::arg("n_states"), py::arg("min_imbalance"),
        py::arg("seed"));

    m.def("cli_main", &cli_main, py::arg("args"));
}
