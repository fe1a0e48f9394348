#pragma once

#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "distill/mdp.hpp"
#include "distill/rng.hpp"

namespace distill {

struct EnvSpec {
    std::string id;
    int n_actions = 0;
    int obs_dim = 0;
    int horizon = 0;   // truncation limit per episode
    double gamma = 0.99;  // discount used by expert training on this env
};

struct StepResult {
    Vec obs;
    double reward = 0.0;
    bool terminated = false;  // reached a terminal state
    bool truncated = false;   // cut off by the horizon
};

/**
 * Episodic environment. The base class enforces reset-then-step ordering and
 * horizon truncation; concrete environments only implement the dynamics.
 * Stepping before reset, or after a terminated/truncated step, throws.
 */
class Env {
  public:
    virtual ~Env() = default;

    const EnvSpec& spec() const { return spec_; }
    virtual std::vector<std::string> feature_names() const = 0;

    Vec reset();
    StepResult step(int action);

  protected:
    Env(EnvSpec spec, std::uint64_t seed) : spec_(std::move(spec)), rng_(seed) {}

    virtual Vec do_reset() = 0;
    virtual StepResult do_step(int action) = 0;  // fills obs/reward/terminated

    EnvSpec spec_;
    Rng rng_;

  private:
    bool ready_ = false;
    int steps_ = 0;
};

// ---------------------------------------------------------------------------
// Configs. One struct per environment; the variant is what the CLI and the
// factory traffic in.

struct PendulumConfig {
    int n_actions = 100;  // discretization of the sine-warped force
    int horizon = 500;
    double gamma = 0.99;
};

struct MountainCarConfig {
    int n_actions = 50;  // evenly spaced engine forces in [-1, 1]
    int horizon = 999;
    double gamma = 0.99;
};

struct LobConfig {
    int n_features = 15;   // bid size, ask size, then distractors
    int horizon = 200;
    double gamma = 0.99;
    double kappa = 1.0;    // imbalance-to-price-move coefficient
    double sigma = 0.0;    // noise on the price move
    double vol_min = 0.1;  // book volume range
    double vol_max = 1.0;
};

enum class GridEncoding { OneHot, XY };

struct GridworldConfig {
    int width = 4;
    int height = 4;
    double gamma = 0.95;
    int horizon = 200;
    GridEncoding encoding = GridEncoding::OneHot;
    int start_state = -1;  // -1: uniform over non-goal states
    double goal_reward = 1.0;
};

using EnvConfig = std::variant<PendulumConfig, MountainCarConfig, LobConfig, GridworldConfig>;

std::string env_id(const EnvConfig& cfg);
double env_gamma(const EnvConfig& cfg);

std::unique_ptr<Env> make_env(const EnvConfig& cfg, std::uint64_t seed);

// Force applied to the cart for each discrete action: 3 * sin(u) with u
// sweeping [0, 4 * pi] evenly, so distinct actions can share an effect.
double pendulum_action_force(int action, int n_actions);

// Engine force for the discretized continuous mountain car: even grid on [-1, 1].
double mountain_car_action_force(int action, int n_actions);

// Trading position for the three-action book environment: +1, 0, -1.
int lob_action_position(int action);

/// Gridworld as an exact tabular MDP plus the episodic wrapper built on it.
/// Actions: 0 up, 1 down, 2 left, 3 right; moves off the edge stay put.
/// The goal (last state) is absorbing with zero reward once inside; entering
/// it pays goal_reward.
class Gridworld {
  public:
    explicit Gridworld(const GridworldConfig& cfg);

    const TabularMDP& mdp() const { return *mdp_; }
    const GridworldConfig& config() const { return cfg_; }
    int goal_state() const { return goal_state_; }

    Vec encode(int state) const;
    int decode(const Vec& obs) const;
    std::unique_ptr<Env> make_env(std::uint64_t seed) const;

  private:
    GridworldConfig cfg_;
    int goal_state_;
    std::optional<TabularMDP> mdp_;
};

// ---------------------------------------------------------------------------

/// Per-feature affine map to zero mean and unit variance. Stddevs below 1e-8
/// are clamped so constant features pass through unscaled.
struct Standardizer {
    Vec mean;
    Vec stddev;

    Vec apply(const Vec& x) const;
    Vec invert(const Vec& z) const;

    nlohmann::json to_json() const;
    static Standardizer from_json(const nlohmann::json& j);
};

}  // namespace distill
