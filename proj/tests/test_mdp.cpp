#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "distill/analysis.hpp"
#include "distill/mdp.hpp"
#include "distill/rng.hpp"

using namespace distill;

namespace {

// --- independent oracles -----------------------------------------------------
// These never touch the linear solvers under test.

int sample_categorical(const Vec& p, Rng& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    for (int i = 0; i < p.size(); ++i) {
        acc += p(i);
        if (u < acc) return i;
    }
    return static_cast<int>(p.size()) - 1;
}

struct McEstimate {
    double mean;
    double stderr_;
};

// Monte-Carlo discounted return from a fixed start state.
McEstimate mc_value(const TabularMDP& mdp, const PolicyTable& policy, int start, int n_rollouts,
                    int horizon, std::uint64_t seed) {
    Rng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (int k = 0; k < n_rollouts; ++k) {
        int s = start;
        double ret = 0.0, disc = 1.0;
        for (int t = 0; t < horizon; ++t) {
            int a = sample_categorical(policy.probs().row(s).transpose(), rng);
            ret += disc * mdp.reward()(s, a);
            disc *= mdp.gamma();
            s = sample_categorical(mdp.row(s, a).transpose(), rng);
        }
        sum += ret;
        sumsq += ret * ret;
    }
    double mean = sum / n_rollouts;
    double var = sumsq / n_rollouts - mean * mean;
    return {mean, std::sqrt(std::max(var, 0.0) / n_rollouts)};
}

// State-transition matrix under a policy, built by plain loops.
Mat policy_transition(const TabularMDP& mdp, const PolicyTable& policy) {
    const int S = mdp.n_states();
    Mat p = Mat::Zero(S, S);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < mdp.n_actions(); ++a)
            p.row(s) += policy.prob(s, a) * mdp.row(s, a);
    return p;
}

// Truncated power series for the normalized discounted occupancy.
Vec series_distribution(const TabularMDP& mdp, const PolicyTable& policy, int n_terms) {
    Mat p = policy_transition(mdp, policy);
    Vec marginal = mdp.start_dist();
    Vec d = Vec::Zero(mdp.n_states());
    double disc = 1.0;
    for (int t = 0; t < n_terms; ++t) {
        d += (1.0 - mdp.gamma()) * disc * marginal;
        marginal = p.transpose() * marginal;
        disc *= mdp.gamma();
    }
    return d;
}

TabularMDP tiny_mdp(double r, double gamma) {
    Mat p(1, 1);
    p << 1.0;
    Mat rew(1, 1);
    rew << r;
    Vec mu(1);
    mu << 1.0;
    return TabularMDP(1, 1, p, rew, gamma, mu);
}

}  // namespace

TEST_CASE("one state geometric series") {
    TabularMDP mdp = tiny_mdp(1.0, 0.9);
    PolicyTable pi(1, 1);
    ValueBundle vb = solve_values(mdp, pi);
    CHECK(vb.v(0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(vb.q(0, 0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(vb.adv(0, 0) == doctest::Approx(0.0));
    CHECK(expected_return(mdp, pi) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("identical actions give zero advantage") {
    Rng rng(7);
    TabularMDP base = random_mdp(4, 1, 0.9, rng);
    // duplicate the single action three times
    Mat p(4 * 3, 4);
    Mat r(4, 3);
    for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 3; ++a) {
            p.row(s * 3 + a) = base.row(s, 0);
            r(s, a) = base.reward()(s, 0);
        }
    TabularMDP mdp(4, 3, p, r, 0.9, base.start_dist());
    PolicyTable pi = random_policy(4, 3, rng);
    ValueBundle vb = solve_values(mdp, pi);
    CHECK(vb.adv.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("values match a Monte-Carlo oracle") {
    Rng rng(42);
    TabularMDP mdp = random_mdp(5, 3, 0.9, rng);
    PolicyTable pi = random_policy(5, 3, rng);
    ValueBundle vb = solve_values(mdp, pi);
    // horizon tail below 1e-9: 0.9^200 / 0.1 ~ 7e-9 on [0,1] rewards
    McEstimate mc = mc_value(mdp, pi, 2, 100000, 200, 99);
    CHECK(std::abs(vb.v(2) - mc.mean) <= 3.0 * mc.stderr_ + 1e-7);
}

TEST_CASE("occupancy of an absorbing start state") {
    Mat p(2 * 1, 2);
    p << 1.0, 0.0,  // state 0 absorbs
        0.0, 1.0;
    Mat r = Mat::Zero(2, 1);
    Vec mu(2);
    mu << 1.0, 0.0;
    TabularMDP mdp(2, 1, p, r, 0.8, mu);
    Vec d = discounted_state_distribution(mdp, PolicyTable(2, 1));
    CHECK(d(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d(1) == doctest::Approx(0.0));
}

TEST_CASE("occupancy matches the truncated power series") {
    Mat p(2 * 1, 2);
    p << 0.0, 1.0,  // deterministic 2-cycle
        1.0, 0.0;
    Mat r = Mat::Zero(2, 1);
    Vec mu(2);
    mu << 1.0, 0.0;
    TabularMDP mdp(2, 1, p, r, 0.5, mu);
    PolicyTable pi(2, 1);
    Vec d = discounted_state_distribution(mdp, pi);
    Vec ref = series_distribution(mdp, pi, 101);
    CHECK((d - ref).cwiseAbs().maxCoeff() <= 1e-12);

    Rng rng(11);
    for (int k = 0; k < 5; ++k) {
        TabularMDP m = random_mdp(4, 2, 0.6, rng);
        PolicyTable pol = random_policy(4, 2, rng);
        Vec dd = discounted_state_distribution(m, pol);
        Vec rr = series_distribution(m, pol, 80);  // 0.6^80 ~ 2e-18
        CHECK((dd - rr).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("occupancy is a distribution") {
    Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        TabularMDP mdp = random_mdp(2 + rng.uniform_int(6), 2 + rng.uniform_int(3),
                                    0.5 + 0.45 * rng.uniform(), rng);
        PolicyTable pi = random_policy(mdp.n_states(), mdp.n_actions(), rng);
        Vec d = discounted_state_distribution(mdp, pi);
        CHECK(d.minCoeff() >= -1e-15);
        CHECK(std::abs(d.sum() - 1.0) <= 1e-12);
    }
}

TEST_CASE("expected return under identical state values") {
    // every (s, a) moves uniformly and pays the same reward, so V is constant
    const int S = 3;
    Mat p = Mat::Constant(S * 2, S, 1.0 / S);
    Mat r = Mat::Constant(S, 2, 0.4);
    Vec mu = Vec::Constant(S, 1.0 / S);
    TabularMDP mdp(S, 2, p, r, 0.9, mu);
    PolicyTable pi(S, 2);
    double c = 0.4 / (1.0 - 0.9);
    CHECK(expected_return(mdp, pi) == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("advantages are zero-mean under their own policy") {
    Rng rng(17);
    for (int k = 0; k < 20; ++k) {
        TabularMDP mdp = random_mdp(2 + rng.uniform_int(5), 2 + rng.uniform_int(3),
                                    0.3 + 0.6 * rng.uniform(), rng);
        PolicyTable pi = random_policy(mdp.n_states(), mdp.n_actions(), rng);
        ValueBundle vb = solve_values(mdp, pi);
        for (int s = 0; s < mdp.n_states(); ++s) {
            double dot = vb.adv.row(s).dot(pi.probs().row(s));
            CHECK(std::abs(dot) <= 1e-10);
        }
    }
}

TEST_CASE("performance difference identity") {
    Rng rng(23);

    SUBCASE("identical policies") {
        TabularMDP mdp = random_mdp(5, 3, 0.9, rng);
        PolicyTable pi = random_policy(5, 3, rng);
        PerformanceDifference pd = performance_difference(mdp, pi, pi);
        CHECK(std::abs(pd.direct) <= 1e-12);
        CHECK(std::abs(pd.decomposition) <= 1e-12);
    }

    SUBCASE("random policy pairs") {
        for (int k = 0; k < 50; ++k) {
            int S = 2 + rng.uniform_int(5);
            int A = 2 + rng.uniform_int(3);
            double gamma = (k % 3 == 0) ? 0.5 : (k % 3 == 1 ? 0.9 : 0.95);
            TabularMDP mdp = random_mdp(S, A, gamma, rng);
            PolicyTable pa = random_policy(S, A, rng);
            PolicyTable pb = random_policy(S, A, rng);
            PerformanceDifference pd = performance_difference(mdp, pa, pb);
            double tol = 1e-9 * std::max(1.0, std::abs(pd.direct));
            CHECK(std::abs(pd.direct - pd.decomposition) <= tol);
        }
    }

    SUBCASE("greedy improvement is non-negative") {
        for (int k = 0; k < 10; ++k) {
            TabularMDP mdp = random_mdp(5, 3, 0.9, rng);
            PolicyTable pi = random_policy(5, 3, rng);
            ValueBundle vb = solve_values(mdp, pi);
            PolicyTable greedy = PolicyTable::greedy_from_q(vb.q);
            PerformanceDifference pd = performance_difference(mdp, greedy, pi);
            CHECK(pd.direct >= -1e-12);
        }
    }
}

TEST_CASE("solver determinism") {
    Rng rng(5);
    TabularMDP mdp = random_mdp(6, 3, 0.92, rng);
    PolicyTable pi = random_policy(6, 3, rng);
    ValueBundle a = solve_values(mdp, pi);
    ValueBundle b = solve_values(mdp, pi);
    CHECK(a.v == b.v);
    CHECK(a.q == b.q);
    Vec da = discounted_state_distribution(mdp, pi);
    Vec db = discounted_state_distribution(mdp, pi);
    CHECK(da == db);
}

TEST_CASE("json round trip") {
    Rng rng(31);
    TabularMDP mdp = random_mdp(4, 2, 0.85, rng);
    TabularMDP back = TabularMDP::from_json(mdp.to_json());
    CHECK(back.n_states() == mdp.n_states());
    CHECK(back.n_actions() == mdp.n_actions());
    CHECK(back.gamma() == mdp.gamma());
    CHECK(back.transition() == mdp.transition());
    CHECK(back.reward() == mdp.reward());
    CHECK(back.start_dist() == mdp.start_dist());

    nlohmann::json j = mdp.to_json();
    CHECK(j.contains("start_dist"));
    CHECK(j.contains("transition"));
    CHECK(j.contains("reward"));
}

TEST_CASE("construction rejects invalid inputs") {
    Mat p(1, 1);
    p << 1.0;
    Mat r(1, 1);
    r << 0.0;
    Vec mu(1);
    mu << 1.0;

    CHECK_THROWS(TabularMDP(1, 1, p, r, 1.0, mu));   // gamma at 1
    CHECK_THROWS(TabularMDP(1, 1, p, r, -0.1, mu));  // negative gamma

    Mat bad = p;
    bad(0, 0) = 0.9;  // row no longer sums to 1
    CHECK_THROWS(TabularMDP(1, 1, bad, r, 0.9, mu));

    Vec bad_mu(1);
    bad_mu << 0.5;
    CHECK_THROWS(TabularMDP(1, 1, p, r, 0.9, bad_mu));

    Mat neg(2, 2);
    neg << 1.5, -0.5, 0.5, 0.5;
    Mat r2(2, 1);
    r2 << 0.0, 0.0;
    Vec mu2(2);
    mu2 << 1.0, 0.0;
    CHECK_THROWS(TabularMDP(2, 1, neg, r2, 0.9, mu2));

    Mat pol(1, 2);
    pol << 0.7, 0.6;
    CHECK_THROWS(PolicyTable(pol));
}
