#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "distill/dataset.hpp"
#include "distill/env.hpp"
#include "distill/mdp.hpp"

using namespace distill;

TEST_CASE("pendulum force map endpoints and extrema") {
    CHECK(pendulum_action_force(0, 100) == 0.0);
    CHECK(std::abs(pendulum_action_force(99, 100)) <= 1e-12);  // 3 sin(4 pi)

    const int K = 100;
    std::vector<double> f(K);
    for (int i = 0; i < K; ++i) f[i] = pendulum_action_force(i, K);

    double peak = 0.0;
    for (double v : f) peak = std::max(peak, std::abs(v));
    double grid_err = 3.0 * (1.0 - std::cos(2.0 * M_PI / (K - 1)));
    CHECK(peak <= 3.0 + 1e-15);
    CHECK(peak >= 3.0 - grid_err - 1e-12);

    // two full sine periods: exactly four interior extrema at |force| near 3
    int extrema = 0;
    for (int i = 1; i + 1 < K; ++i) {
        bool local_max = f[i] > f[i - 1] && f[i] > f[i + 1];
        bool local_min = f[i] < f[i - 1] && f[i] < f[i + 1];
        if ((local_max || local_min) && std::abs(f[i]) >= 3.0 - grid_err - 1e-12) ++extrema;
    }
    CHECK(extrema == 4);

    CHECK_THROWS(lob_action_position(3));
}

TEST_CASE("mountain car force map endpoints") {
    CHECK(mountain_car_action_force(0, 50) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(mountain_car_action_force(49, 50) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mountain_car_action_force(25, 51) == 0.0);
}

TEST_CASE("pendulum episodes") {
    PendulumConfig cfg;

    SUBCASE("reset starts inside the initialization box") {
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 99ULL}) {
            auto env = make_env(cfg, seed);
            Vec obs = env->reset();
            REQUIRE(obs.size() == 4);
            for (int i = 0; i < 4; ++i) CHECK(std::abs(obs(i)) <= 0.05);
        }
    }

    SUBCASE("zero force lets the pole fall before the horizon") {
        for (std::uint64_t seed : {1ULL, 7ULL, 13ULL}) {
            auto env = make_env(cfg, seed);
            env->reset();
            int steps = 0;
            while (true) {
                StepResult r = env->step(0);  // force 0
                ++steps;
                CHECK(r.reward == 1.0);
                if (r.terminated || r.truncated) {
                    CHECK(r.terminated);
                    break;
                }
            }
            CHECK(steps < cfg.horizon);
        }
    }

    SUBCASE("stepping out of order is rejected") {
        auto env = make_env(cfg, 5);
        CHECK_THROWS(env->step(0));
        env->reset();
        CHECK_THROWS(env->step(-1));
        CHECK_THROWS(env->step(cfg.n_actions));
        while (true) {
            StepResult r = env->step(0);
            if (r.terminated || r.truncated) break;
        }
        CHECK_THROWS(env->step(0));
        env->reset();  // reset rearms
        CHECK_NOTHROW(env->step(0));
    }
}

TEST_CASE("environments replay bit-identically under one seed") {
    std::vector<EnvConfig> cfgs = {PendulumConfig{}, MountainCarConfig{}, LobConfig{},
                                   GridworldConfig{}};
    for (const EnvConfig& cfg : cfgs) {
        auto a = make_env(cfg, 1234);
        auto b = make_env(cfg, 1234);
        Vec oa = a->reset();
        Vec ob = b->reset();
        REQUIRE(oa == ob);
        for (int t = 0; t < 50; ++t) {
            int action = t % a->spec().n_actions;
            StepResult ra = a->step(action);
            StepResult rb = b->step(action);
            CHECK(ra.obs == rb.obs);
            CHECK(ra.reward == rb.reward);
            CHECK(ra.terminated == rb.terminated);
            CHECK(ra.truncated == rb.truncated);
            CHECK(ra.obs.allFinite());
            CHECK(std::isfinite(ra.reward));
            if (ra.terminated || ra.truncated) {
                a->reset();
                b->reset();
            }
        }
    }
}

TEST_CASE("mountain car dynamics") {
    SUBCASE("zero force never escapes the valley") {
        MountainCarConfig cfg;
        cfg.n_actions = 51;  // odd grid puts force 0 on the middle action
        auto env = make_env(cfg, 3);
        env->reset();
        double ret = 0.0;
        int steps = 0;
        while (true) {
            StepResult r = env->step(25);
            ret += r.reward;
            ++steps;
            if (r.terminated || r.truncated) {
                CHECK(r.truncated);
                CHECK_FALSE(r.terminated);
                break;
            }
        }
        CHECK(steps == cfg.horizon);
        CHECK(ret == 0.0);
    }

    SUBCASE("pushing along the velocity builds momentum to the goal") {
        // Pump at full force while the mechanical energy is below what the
        // goal crest needs, then coast on the near-zero actions.
        MountainCarConfig cfg;
        const double potential = 0.0025 / 3.0;
        const double goal_energy = potential * std::sin(3.0 * 0.45);
        for (std::uint64_t seed : {2ULL, 8ULL}) {
            auto env = make_env(cfg, seed);
            Vec obs = env->reset();
            double ret = 0.0;
            int steps = 0;
            bool reached = false;
            while (true) {
                double energy = 0.5 * obs(1) * obs(1) + potential * std::sin(3.0 * obs(0));
                int action;
                if (energy < goal_energy)
                    action = obs(1) >= 0.0 ? cfg.n_actions - 1 : 0;
                else
                    action = obs(1) >= 0.0 ? cfg.n_actions / 2 : cfg.n_actions / 2 - 1;
                StepResult r = env->step(action);
                ret += r.reward;
                ++steps;
                obs = r.obs;
                if (r.terminated) {
                    reached = true;
                    break;
                }
                if (r.truncated) break;
            }
            CHECK(reached);
            CHECK(ret > 90.0);
            CHECK(steps < cfg.horizon);
        }
    }
}

TEST_CASE("lob rewards follow position times price move") {
    LobConfig cfg;
    cfg.sigma = 0.0;
    auto env = make_env(cfg, 21);
    Vec obs = env->reset();
    REQUIRE(obs.size() == 15);

    auto names = env->feature_names();
    REQUIRE(names.size() == 15);
    CHECK(names[0] == "l1_bid_size");
    CHECK(names[1] == "l1_ask_size");
    CHECK(names[2] == "price");

    bool saw_gain_on_fall = false;
    for (int t = 0; t < 100; ++t) {
        double bid = obs(0), ask = obs(1), price = obs(2);
        double dp = cfg.kappa * (bid - ask) / (bid + ask);

        // brute force over the three actions: the imbalance rule wins the step
        int rule = bid > ask ? 0 : 2;
        double best = std::abs(dp);

        int action = t % 3;
        StepResult r = env->step(action);
        double realized = r.obs(2) - price;
        CHECK(std::abs(realized - dp) <= 1e-12);
        CHECK(std::abs(r.reward - lob_action_position(action) * dp) <= 1e-15);
        CHECK(lob_action_position(rule) * dp == doctest::Approx(best).epsilon(1e-12));
        if (action == 1) CHECK(r.reward == 0.0);
        if (action == 2 && dp < 0 && r.reward > 0) saw_gain_on_fall = true;

        obs = r.obs;
        if (r.terminated || r.truncated) obs = env->reset();
    }
    CHECK(saw_gain_on_fall);

    LobConfig bad;
    bad.n_features = 1;
    CHECK_THROWS(make_env(bad, 0));
    LobConfig bad_vol;
    bad_vol.vol_min = 0.0;
    CHECK_THROWS(make_env(bad_vol, 0));
}

TEST_CASE("gridworld corridor shortest path value") {
    GridworldConfig cfg;
    cfg.width = 4;
    cfg.height = 1;
    cfg.start_state = 0;
    cfg.gamma = 0.9;
    Gridworld grid(cfg);
    const TabularMDP& mdp = grid.mdp();

    // greedy-right policy: reward lands after 3 steps, discounted twice
    Mat probs = Mat::Zero(4, 4);
    probs.col(3).setOnes();
    PolicyTable right(probs);
    ValueBundle vb = solve_values(mdp, right);
    CHECK(vb.v(0) == doctest::Approx(0.9 * 0.9 * cfg.goal_reward).epsilon(1e-12));
    CHECK(vb.v(2) == doctest::Approx(cfg.goal_reward).epsilon(1e-12));
    CHECK(vb.v(3) == doctest::Approx(0.0));  // absorbing goal pays nothing
}

TEST_CASE("gridworld episodic returns match the exact solver") {
    GridworldConfig cfg;
    cfg.gamma = 0.9;
    Gridworld grid(cfg);
    PolicyTable uniform(grid.mdp().n_states(), 4);
    double exact = expected_return(grid.mdp(), uniform);

    auto env = grid.make_env(404);
    Rng action_rng(77);
    const int episodes = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
        env->reset();
        double ret = 0.0, disc = 1.0;
        while (true) {
            StepResult r = env->step(action_rng.uniform_int(4));
            ret += disc * r.reward;
            disc *= cfg.gamma;
            if (r.terminated || r.truncated) break;
        }
        sum += ret;
        sumsq += ret * ret;
    }
    double mean = sum / episodes;
    double se = std::sqrt(std::max(sumsq / episodes - mean * mean, 0.0) / episodes);
    CHECK(std::abs(mean - exact) <= 3.0 * se + 1e-4);
}

TEST_CASE("gridworld empirical visitation matches the exact occupancy") {
    GridworldConfig cfg;
    Gridworld grid(cfg);
    const TabularMDP& mdp = grid.mdp();
    PolicyTable uniform(mdp.n_states(), 4);
    Vec exact = discounted_state_distribution(mdp, uniform);

    auto env = grid.make_env(505);
    Rng action_rng(78);
    const int episodes = 100000;
    Vec emp = Vec::Zero(mdp.n_states());
    for (int ep = 0; ep < episodes; ++ep) {
        Vec obs = env->reset();
        double w = 1.0;  // gamma^t
        while (true) {
            emp(grid.decode(obs)) += (1.0 - cfg.gamma) * w;
            StepResult r = env->step(action_rng.uniform_int(4));
            w *= cfg.gamma;
            obs = r.obs;
            if (r.terminated) {
                emp(grid.decode(obs)) += w;  // absorbed: the tail stays at the goal
                break;
            }
            if (r.truncated) break;
        }
    }
    emp /= episodes;
    CHECK((emp - exact).cwiseAbs().maxCoeff() <= 1e-2);
}

TEST_CASE("gridworld encodings") {
    GridworldConfig cfg;
    cfg.encoding = GridEncoding::XY;
    Gridworld grid(cfg);
    for (int s = 0; s < 16; ++s) CHECK(grid.decode(grid.encode(s)) == s);
    Vec xy = grid.encode(7);
    CHECK(xy(0) == 3.0);
    CHECK(xy(1) == 1.0);

    GridworldConfig oh;
    Gridworld grid_oh(oh);
    for (int s = 0; s < 16; ++s) {
        Vec e = grid_oh.encode(s);
        CHECK(e.sum() == 1.0);
        CHECK(grid_oh.decode(e) == s);
    }

    GridworldConfig bad;
    bad.start_state = 15;  // the goal cell
    CHECK_THROWS(Gridworld(bad));
}

TEST_CASE("standardizer") {
    TrajectoryDataset ds;
    ds.env = "test";
    ds.n_actions = 2;
    ds.obs_dim = 3;
    ds.n_trajectories = 1;
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        Vec f(3);
        f << rng.normal(2.0, 3.0), 5.0, rng.uniform(-1.0, 1.0);  // middle column constant
        Vec q(2);
        q << 1.0, 0.0;
        ds.rows.push_back({f, 0, q, std::nullopt});
    }
    Standardizer st = fit_standardizer(ds);

    Vec mean_after = Vec::Zero(3);
    for (const auto& row : ds.rows) mean_after += st.apply(row.features);
    mean_after /= static_cast<double>(ds.rows.size());
    Vec var_after = Vec::Zero(3);
    for (const auto& row : ds.rows) {
        Vec z = st.apply(row.features);
        var_after += (z - mean_after).cwiseProduct(z - mean_after);
    }
    var_after /= static_cast<double>(ds.rows.size());

    for (int j : {0, 2}) {
        CHECK(std::abs(mean_after(j)) <= 1e-10);
        CHECK(std::abs(var_after(j) - 1.0) <= 1e-10);
    }
    // constant column: clamped stddev maps it to exactly zero
    CHECK(std::abs(mean_after(1)) == 0.0);
    CHECK(var_after(1) == 0.0);

    for (const auto& row : ds.rows) {
        Vec back = st.invert(st.apply(row.features));
        CHECK((back - row.features).cwiseAbs().maxCoeff() <= 1e-12);
    }

    Standardizer round = Standardizer::from_json(st.to_json());
    CHECK(round.mean == st.mean);
    CHECK(round.stddev == st.stddev);
}
