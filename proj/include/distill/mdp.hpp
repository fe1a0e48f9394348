#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

namespace distill {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when two ways of computing the same quantity disagree, which means
/// an indexing or sign convention is broken somewhere upstream.
class ConventionMismatch : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/**
 * Finite MDP with dense transition and reward tables.
 *
 * Layout: transition is (n_states * n_actions) x n_states with row s * A + a
 * holding P(. | s, a); reward is n_states x n_actions; start_dist is the
 * initial state distribution. The constructor validates stochasticity of
 * every transition row and of the start distribution, and requires
 * 0 <= gamma < 1.
 */
class TabularMDP {
  public:
    TabularMDP(int n_states, int n_actions, Mat transition, Mat reward, double gamma,
               Vec start_dist);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    double gamma() const { return gamma_; }
    const Mat& transition() const { return transition_; }
    const Mat& reward() const { return reward_; }
    const Vec& start_dist() const { return start_dist_; }

    // P(. | s, a) as a row expression
    auto row(int s, int a) const { return transition_.row(s * n_actions_ + a); }

    nlohmann::json to_json() const;
    static TabularMDP from_json(const nlohmann::json& j);

  private:
    int n_states_;
    int n_actions_;
    Mat transition_;
    Mat reward_;
    double gamma_;
    Vec start_dist_;
};

/// Row-stochastic policy table, one row per state.
class PolicyTable {
  public:
    PolicyTable(int n_states, int n_actions);  // uniform
    explicit PolicyTable(Mat probs);

    int n_states() const { return static_cast<int>(probs_.rows()); }
    int n_actions() const { return static_cast<int>(probs_.cols()); }
    const Mat& probs() const { return probs_; }
    double prob(int s, int a) const { return probs_(s, a); }

    static PolicyTable greedy_from_q(const Mat& q);  // lowest index wins ties

  private:
    Mat probs_;
};

struct ValueBundle {
    Vec v;    // n_states
    Mat q;    // n_states x n_actions
    Mat adv;  // q - v, per state
};

/// Exact policy evaluation: V = (I - gamma * P_pi)^{-1} R_pi, then Q and A.
ValueBundle solve_values(const TabularMDP& mdp, const PolicyTable& policy);

/// Normalized discounted state occupancy
/// d(s) = (1 - gamma) * sum_t gamma^t Pr(s_t = s); sums to one.
Vec discounted_state_distribution(const TabularMDP& mdp, const PolicyTable& policy);

/// J(pi) = E_{s0 ~ start}[V(s0)].
double expected_return(const TabularMDP& mdp, const PolicyTable& policy);

struct PerformanceDifference {
    double direct;         // J(pi_new) - J(pi_old)
    double decomposition;  // occupancy-weighted advantage form
};

/**
 * Computes J(pi_new) - J(pi_old) directly and via
 * (1/(1-gamma)) * sum_s d^{pi_new}(s) sum_a pi_new(a|s) A^{pi_old}(s, a),
 * and throws ConventionMismatch if the two disagree beyond 1e-9.
 */
PerformanceDifference performance_difference(const TabularMDP& mdp, const PolicyTable& pi_new,
                                             const PolicyTable& pi_old);

}  // namespace distill
