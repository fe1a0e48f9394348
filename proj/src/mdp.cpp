#include "distill/mdp.hpp"

#include <Eigen/LU>
#include <cmath>

namespace distill {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void check_distribution(const Eigen::Ref<const Eigen::RowVectorXd>& row, const std::string& what) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < row.size(); ++i) {
        double p = row(i);
        require(std::isfinite(p) && p >= 0.0, what + " has a negative or non-finite entry");
        total += p;
    }
    require(std::abs(total - 1.0) <= 1e-12, what + " does not sum to one");
}

}  // namespace

TabularMDP::TabularMDP(int n_states, int n_actions, Mat transition, Mat reward, double gamma,
                       Vec start_dist)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      gamma_(gamma),
      start_dist_(std::move(start_dist)) {
    require(n_states_ > 0 && n_actions_ > 0, "MDP needs at least one state and action");
    require(gamma_ >= 0.0 && gamma_ < 1.0, "gamma must lie in [0, 1)");
    require(transition_.rows() == static_cast<Eigen::Index>(n_states_) * n_actions_ &&
                transition_.cols() == n_states_,
            "transition must be (n_states * n_actions) x n_states");
    require(reward_.rows() == n_states_ && reward_.cols() == n_actions_,
            "reward must be n_states x n_actions");
    require(start_dist_.size() == n_states_, "start distribution has wrong length");
    require(reward_.allFinite(), "reward has non-finite entries");
    for (int s = 0; s < n_states_; ++s)
        for (int a = 0; a < n_actions_; ++a)
            check_distribution(transition_.row(s * n_actions_ + a),
                               "transition row (s=" + std::to_string(s) +
                                   ", a=" + std::to_string(a) + ")");
    check_distribution(start_dist_.transpose(), "start distribution");
}

nlohmann::json TabularMDP::to_json() const {
    nlohmann::json trans = nlohmann::json::array();
    for (int s = 0; s < n_states_; ++s) {
        nlohmann::json per_action = nlohmann::json::array();
        for (int a = 0; a < n_actions_; ++a) {
            nlohmann::json row = nlohmann::json::array();
            for (int t = 0; t < n_states_; ++t) row.push_back(transition_(s * n_actions_ + a, t));
            per_action.push_back(std::move(row));
        }
        trans.push_back(std::move(per_action));
    }
    nlohmann::json rew = nlohmann::json::array();
    for (int s = 0; s < n_states_; ++s) {
        nlohmann::json row = nlohmann::json::array();
        for (int a = 0; a < n_actions_; ++a) row.push_back(reward_(s, a));
        rew.push_back(std::move(row));
    }
    nlohmann::json start = nlohmann::json::array();
    for (int s = 0; s < n_states_; ++s) start.push_back(start_dist_(s));
    return {{"n_states", n_states_}, {"n_actions", n_actions_}, {"gamma", gamma_},
            {"transition", std::move(trans)}, {"reward", std::move(rew)},
            {"start_dist", std::move(start)}};
}

TabularMDP TabularMDP::from_json(const nlohmann::json& j) {
    int S = j.at("n_states").get<int>();
    int A = j.at("n_actions").get<int>();
    require(S > 0 && A > 0, "n_states and n_actions must be positive");
    const auto& trans = j.at("transition");
    const auto& rew = j.at("reward");
    const auto& start = j.at("start_dist");
    require(trans.size() == static_cast<std::size_t>(S), "transition outer size mismatch");
    require(rew.size() == static_cast<std::size_t>(S), "reward outer size mismatch");
    require(start.size() == static_cast<std::size_t>(S), "start size mismatch");
    Mat P(static_cast<Eigen::Index>(S) * A, S);
    Mat R(S, A);
    Vec mu(S);
    for (int s = 0; s < S; ++s) {
        require(trans[s].size() == static_cast<std::size_t>(A), "transition action size mismatch");
        require(rew[s].size() == static_cast<std::size_t>(A), "reward action size mismatch");
        for (int a = 0; a < A; ++a) {
            require(trans[s][a].size() == static_cast<std::size_t>(S),
                    "transition row size mismatch");
            for (int t = 0; t < S; ++t) P(s * A + a, t) = trans[s][a][t].get<double>();
            R(s, a) = rew[s][a].get<double>();
        }
        mu(s) = start[s].get<double>();
    }
    return TabularMDP(S, A, std::move(P), std::move(R), j.at("gamma").get<double>(),
                      std::move(mu));
}

PolicyTable::PolicyTable(int n_states, int n_actions)
    : probs_(Mat::Constant(n_states, n_actions, 1.0 / n_actions)) {
    require(n_states > 0 && n_actions > 0, "policy needs at least one state and action");
}

PolicyTable::PolicyTable(Mat probs) : probs_(std::move(probs)) {
    require(probs_.rows() > 0 && probs_.cols() > 0, "policy table is empty");
    for (Eigen::Index s = 0; s < probs_.rows(); ++s)
        check_distribution(probs_.row(s), "policy row (s=" + std::to_string(s) + ")");
}

PolicyTable PolicyTable::greedy_from_q(const Mat& q) {
    Mat probs = Mat::Zero(q.rows(), q.cols());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        Eigen::Index best;
        q.row(s).maxCoeff(&best);
        probs(s, best) = 1.0;
    }
    return PolicyTable(std::move(probs));
}

namespace {

// P_pi (S x S) and R_pi (S) under the given policy.
void policy_matrices(const TabularMDP& mdp, const PolicyTable& policy, Mat& p_pi, Vec& r_pi) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    require(policy.n_states() == S && policy.n_actions() == A,
            "policy shape does not match the MDP");
    p_pi.setZero(S, S);
    r_pi.setZero(S);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double p = policy.prob(s, a);
            if (p == 0.0) continue;
            p_pi.row(s) += p * mdp.row(s, a);
            r_pi(s) += p * mdp.reward()(s, a);
        }
    }
}

}  // namespace

ValueBundle solve_values(const TabularMDP& mdp, const PolicyTable& policy) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    Mat p_pi;
    Vec r_pi;
    policy_matrices(mdp, policy, p_pi, r_pi);

    Mat system = Mat::Identity(S, S) - mdp.gamma() * p_pi;
    ValueBundle out;
    out.v = system.partialPivLu().solve(r_pi);

    out.q.resize(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            out.q(s, a) = mdp.reward()(s, a) + mdp.gamma() * mdp.row(s, a).dot(out.v);
    out.adv = out.q.colwise() - out.v;
    return out;
}

Vec discounted_state_distribution(const TabularMDP& mdp, const PolicyTable& policy) {
    const int S = mdp.n_states();
    Mat p_pi;
    Vec r_pi;
    policy_matrices(mdp, policy, p_pi, r_pi);

    // d = (1 - gamma) (I - gamma P_pi^T)^{-1} mu
    Mat system = Mat::Identity(S, S) - mdp.gamma() * p_pi.transpose();
    Vec d = (1.0 - mdp.gamma()) * system.partialPivLu().solve(mdp.start_dist());
    return d;
}

double expected_return(const TabularMDP& mdp, const PolicyTable& policy) {
    return mdp.start_dist().dot(solve_values(mdp, policy).v);
}

PerformanceDifference performance_difference(const TabularMDP& mdp, const PolicyTable& pi_new,
                                             const PolicyTable& pi_old) {
    PerformanceDifference out;
    out.direct = expected_return(mdp, pi_new) - expected_return(mdp, pi_old);

    ValueBundle old_values = solve_values(mdp, pi_old);
    Vec d_new = discounted_state_distribution(mdp, pi_new);
    double acc = 0.0;
    for (int s = 0; s < mdp.n_states(); ++s)
        acc += d_new(s) * pi_new.probs().row(s).dot(old_values.adv.row(s));
    out.decomposition = acc / (1.0 - mdp.gamma());

    double tol = 1e-9 * std::max(1.0, std::abs(out.direct));
    if (std::abs(out.direct - out.decomposition) > tol)
        throw ConventionMismatch("performance difference identity violated");
    return out;
}

}  // namespace distill
