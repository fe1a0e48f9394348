#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "distill/env.hpp"
#include "distill/expert.hpp"
#include "distill/mdp.hpp"
#include "distill/policy.hpp"
#include "distill/rng.hpp"
#include "distill/train.hpp"

namespace distill {

/**
 * Expected advantage of following pi_I where it matters to the expert:
 * sum_s d^{pi_E}(s) sum_a pi_I(a|s) A^{pi_E}(s, a), with d the normalized
 * discounted state distribution. Non-positive when the expert is greedy
 * w.r.t. its own values; zero at pi_I = pi_E.
 */
double disadvantage(const TabularMDP& mdp, const PolicyTable& pi_e, const PolicyTable& pi_i);

/// max over states of the L1 distance between action distributions; in [0, 2].
double policy_distance_inf(const PolicyTable& pi_a, const PolicyTable& pi_b);

struct BoundReport {
    double lhs = 0.0;           // J(pi_I) - J(pi_E), exact
    double adv_term = 0.0;      // disadvantage rescaled by 1/(1 - gamma), see below
    double penalty_term = 0.0;  // gamma / (2 (1-gamma)^3) * distance^2
    double rhs = 0.0;           // adv_term - penalty_term
    double slack = 0.0;         // lhs - rhs
    bool holds = false;         // slack >= -1e-9
};

/**
 * Checks the surrogate performance bound
 *   J(pi_I) - J(pi_E) >= adv_term - gamma / (2 (1-gamma)^3) * dist^2.
 * Because disadvantage() uses the normalized d (which sums to one), the
 * advantage term is scaled by 1/(1 - gamma) so that it coincides with the
 * exact performance-difference identity when pi_I's own occupancy replaces
 * the expert's. With rewards in [0, 1] the bound holds on every instance.
 */
BoundReport bound_check(const TabularMDP& mdp, const PolicyTable& pi_e, const PolicyTable& pi_i);

/// Dense random MDP: Dirichlet(1) transition rows and start distribution,
/// rewards uniform on [0, 1] (the range the additive bound constants assume).
TabularMDP random_mdp(int n_states, int n_actions, double gamma, Rng& rng);

PolicyTable random_policy(int n_states, int n_actions, Rng& rng);

struct BoundSweepRow {
    int instance = 0;
    double gamma = 0.0;
    BoundReport report;
};

/// Random (MDP, pi_E, pi_I) sweep; every tenth instance sets pi_I = pi_E to
/// exercise the equality case. States range over {2..max_states}, actions
/// over {2..max_actions}.
std::vector<BoundSweepRow> bound_sweep(int n_instances, int max_states, int max_actions,
                                       const std::vector<double>& gammas, std::uint64_t seed);

void save_bound_sweep_csv(const std::string& path, const std::vector<BoundSweepRow>& rows);

// ---------------------------------------------------------------------------

using ActFn = std::function<int(const Vec&)>;

struct EvalReport {
    std::vector<std::uint64_t> seeds;
    std::vector<double> per_seed_mean;  // mean undiscounted return per seed
    int n_episodes = 0;
    double mean = 0.0;
    double stddev = 0.0;  // across seeds, population convention

    void save_csv(const std::string& path) const;
};

/// Runs n_episodes greedy episodes per seed and aggregates undiscounted returns.
EvalReport evaluate_policy(const EnvConfig& env_cfg, const ActFn& act, int n_episodes,
                           const std::vector<std::uint64_t>& seeds);

// ---------------------------------------------------------------------------

struct CurveConfig {
    std::vector<int> dataset_sizes;
    std::vector<std::string> methods = {"adv_bc", "bc_only"};
    DistillConfig distill;  // advantage_enabled is overridden per method
    int eval_episodes = 5;
    std::vector<std::uint64_t> seeds;
};

struct CurvePoint {
    int size = 0;
    std::string method;
    std::uint64_t seed = 0;
    int iter = 0;
    double ret = 0.0;
};

/**
 * For every (dataset size, seed) collects a fresh expert dataset, trains each
 * method on it, and evaluates the greedy policy at every logged iteration on
 * a fixed per-seed evaluation stream. bc_only is explain_train with the
 * advantage term disabled.
 */
std::vector<CurvePoint> comparison_curve(const EnvConfig& env_cfg, const QModel& expert,
                                         const CurveConfig& cfg);

/// One curve_<env>_<size>.csv per dataset size, header iter,method,seed,return.
void save_curve_csvs(const std::string& dir, const std::string& env_id,
                     const std::vector<CurvePoint>& points);

// ---------------------------------------------------------------------------

struct WeightCheck {
    std::string name;
    bool pass = false;
};

struct WeightReport {
    std::vector<std::string> feature_names;  // without the bias entry
    Mat weights;                             // n_actions x (obs_dim + 1)
    std::vector<WeightCheck> checks;

    void save_csv(const std::string& path) const;
};

/**
 * Tabulates the weight matrix against feature names. When the features
 * include the book volumes (l1_bid_size/l1_ask_size) and the policy has the
 * three trading actions, adds the sign checks long: +bid/-ask,
 * short: -bid/+ask and the |long| vs |short| 25% magnitude symmetry per
 * volume feature. Failed checks are reported, never thrown.
 */
WeightReport weight_report(const SoftmaxLinearPolicy& policy,
                           const std::vector<std::string>& feature_names);

/**
 * Fraction of sampled book states with relative imbalance above min_imbalance
 * where the policy's greedy action matches the imbalance rule (long when
 * bids outweigh asks, short otherwise). States are drawn by stepping the
 * environment under uniform random actions.
 */
double imbalance_rule_agreement(const LobConfig& cfg, const ActFn& act, int n_states,
                                double min_imbalance, std::uint64_t seed);

}  // namespace distill
