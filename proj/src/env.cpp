#include "distill/env.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace distill {

Vec Env::reset() {
    ready_ = true;
    steps_ = 0;
    return do_reset();
}

StepResult Env::step(int action) {
    if (!ready_)
        throw std::logic_error("step called before reset or after the episode ended");
    if (action < 0 || action >= spec_.n_actions)
        throw std::invalid_argument("action out of range");
    StepResult r = do_step(action);
    ++steps_;
    if (!r.terminated && steps_ >= spec_.horizon) r.truncated = true;
    if (r.terminated || r.truncated) ready_ = false;
    return r;
}

double pendulum_action_force(int action, int n_actions) {
    double u = n_actions > 1 ? 4.0 * M_PI * action / (n_actions - 1) : 0.0;
    return 3.0 * std::sin(u);
}

double mountain_car_action_force(int action, int n_actions) {
    return n_actions > 1 ? -1.0 + 2.0 * action / (n_actions - 1) : 0.0;
}

int lob_action_position(int action) {
    switch (action) {
        case 0: return 1;
        case 1: return 0;
        case 2: return -1;
        default: throw std::invalid_argument("lob action out of range");
    }
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// --------------------------------------------------------------------------
// Cart-pole with the sine-warped force map. Physics follows the classic
// control setup: Euler integration at 20 ms, episode ends when the pole tips
// past 12 degrees or the cart leaves [-2.4, 2.4].

class PendulumEnv final : public Env {
  public:
    PendulumEnv(const PendulumConfig& cfg, std::uint64_t seed)
        : Env({"pendulum-sine", cfg.n_actions, 4, cfg.horizon, cfg.gamma}, seed) {
        require(cfg.n_actions >= 2, "pendulum-sine needs at least two actions");
        require(cfg.horizon >= 1, "horizon must be positive");
    }

    std::vector<std::string> feature_names() const override {
        return {"cart_pos", "cart_vel", "pole_angle", "pole_vel"};
    }

  private:
    static constexpr double kGravity = 9.8;
    static constexpr double kMassCart = 1.0;
    static constexpr double kMassPole = 0.1;
    static constexpr double kTotalMass = kMassCart + kMassPole;
    static constexpr double kLength = 0.5;  // half the pole
    static constexpr double kPoleMassLength = kMassPole * kLength;
    static constexpr double kTau = 0.02;
    static constexpr double kAngleLimit = 12.0 * 2.0 * M_PI / 360.0;
    static constexpr double kPosLimit = 2.4;

    Vec do_reset() override {
        for (double& v : state_) v = rng_.uniform(-0.05, 0.05);
        return obs();
    }

    StepResult do_step(int action) override {
        double force = pendulum_action_force(action, spec_.n_actions);
        auto& [x, x_dot, theta, theta_dot] = state_;

        double cos_t = std::cos(theta);
        double sin_t = std::sin(theta);
        double temp = (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
        double theta_acc = (kGravity * sin_t - cos_t * temp) /
                           (kLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
        double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

        x += kTau * x_dot;
        x_dot += kTau * x_acc;
        theta += kTau * theta_dot;
        theta_dot += kTau * theta_acc;

        StepResult r;
        r.obs = obs();
        r.reward = 1.0;
        r.terminated = std::abs(x) > kPosLimit || std::abs(theta) > kAngleLimit;
        return r;
    }

    Vec obs() const {
        Vec o(4);
        o << state_[0], state_[1], state_[2], state_[3];
        return o;
    }

    std::array<double, 4> state_{};
};

// --------------------------------------------------------------------------
// Continuous mountain car with the engine force discretized on an even grid.
// Reward is -0.1 * force^2 per step plus 100 on reaching the goal position.

class MountainCarEnv final : public Env {
  public:
    MountainCarEnv(const MountainCarConfig& cfg, std::uint64_t seed)
        : Env({"mountain-car-disc", cfg.n_actions, 2, cfg.horizon, cfg.gamma}, seed) {
        require(cfg.n_actions >= 2, "mountain-car-disc needs at least two actions");
        require(cfg.horizon >= 1, "horizon must be positive");
    }

    std::vector<std::string> feature_names() const override { return {"position", "velocity"}; }

  private:
    static constexpr double kMinPos = -1.2;
    static constexpr double kMaxPos = 0.6;
    static constexpr double kMaxSpeed = 0.07;
    static constexpr double kGoalPos = 0.45;
    static constexpr double kPower = 0.0015;

    Vec do_reset() override {
        position_ = rng_.uniform(-0.6, -0.4);
        velocity_ = 0.0;
        return obs();
    }

    StepResult do_step(int action) override {
        double force = mountain_car_action_force(action, spec_.n_actions);
        velocity_ += force * kPower - 0.0025 * std::cos(3.0 * position_);
        velocity_ = std::clamp(velocity_, -kMaxSpeed, kMaxSpeed);
        position_ += velocity_;
        position_ = std::clamp(position_, kMinPos, kMaxPos);
        if (position_ <= kMinPos && velocity_ < 0.0) velocity_ = 0.0;

        StepResult r;
        r.obs = obs();
        r.terminated = position_ >= kGoalPos;
        r.reward = -0.1 * force * force + (r.terminated ? 100.0 : 0.0);
        return r;
    }

    Vec obs() const {
        Vec o(2);
        o << position_, velocity_;
        return o;
    }

    double position_ = 0.0;
    double velocity_ = 0.0;
};

// --------------------------------------------------------------------------
// Synthetic limit-order-book game. The price move over the next step is
// kappa * imbalance + sigma * noise where imbalance reads the top-of-book
// volumes; the agent's position (long, flat, short) earns position * move.
// Everything past the two volume features is a distractor: the price level,
// lagged price moves, and white noise channels.

class LobEnv final : public Env {
  public:
    LobEnv(const LobConfig& cfg, std::uint64_t seed)
        : Env({"lob-synth", 3, cfg.n_features, cfg.horizon, cfg.gamma}, seed), cfg_(cfg) {
        require(cfg.n_features >= 2, "lob-synth needs the two volume features");
        require(cfg.horizon >= 1, "horizon must be positive");
        require(cfg.vol_min > 0.0 && cfg.vol_max >= cfg.vol_min,
                "book volume range must be positive");
        require(cfg.sigma >= 0.0, "sigma must be non-negative");
        int distractors = cfg.n_features - 2;
        has_price_ = distractors >= 1;
        n_lags_ = std::max(0, std::min(6, distractors - 1));
        n_noise_ = std::max(0, distractors - 1 - n_lags_);
    }

    std::vector<std::string> feature_names() const override {
        std::vector<std::string> names = {"l1_bid_size", "l1_ask_size"};
        if (has_price_) names.push_back("price");
        for (int i = 1; i <= n_lags_; ++i) names.push_back("lag_dp_" + std::to_string(i));
        for (int i = 1; i <= n_noise_; ++i) names.push_back("noise_" + std::to_string(i));
        return names;
    }

  private:
    Vec do_reset() override {
        price_ = 100.0;
        lags_.assign(n_lags_, 0.0);
        draw_book();
        return obs();
    }

    StepResult do_step(int action) override {
        int position = lob_action_position(action);
        double imbalance = (bid_ - ask_) / (bid_ + ask_);
        double dp = cfg_.kappa * imbalance + cfg_.sigma * rng_.normal();

        StepResult r;
        r.reward = position * dp;
        price_ += dp;
        if (n_lags_ > 0) {
            lags_.insert(lags_.begin(), dp);
            lags_.pop_back();
        }
        draw_book();
        r.obs = obs();
        return r;
    }

    void draw_book() {
        bid_ = rng_.uniform(cfg_.vol_min, cfg_.vol_max);
        ask_ = rng_.uniform(cfg_.vol_min, cfg_.vol_max);
        noise_.assign(n_noise_, 0.0);
        for (double& n : noise_) n = rng_.normal();
    }

    Vec obs() const {
        Vec o(spec_.obs_dim);
        int k = 0;
        o(k++) = bid_;
        o(k++) = ask_;
        if (has_price_) o(k++) = price_;
        for (double v : lags_) o(k++) = v;
        for (double v : noise_) o(k++) = v;
        return o;
    }

    LobConfig cfg_;
    bool has_price_ = false;
    int n_lags_ = 0;
    int n_noise_ = 0;
    double price_ = 0.0;
    double bid_ = 0.0;
    double ask_ = 0.0;
    std::vector<double> lags_;
    std::vector<double> noise_;
};

// --------------------------------------------------------------------------

class GridworldEnv final : public Env {
  public:
    GridworldEnv(Gridworld grid, std::uint64_t seed)
        : Env({"gridworld", grid.mdp().n_actions(), 0, grid.config().horizon,
               grid.config().gamma},
              seed),
          grid_(std::move(grid)) {
        spec_.obs_dim = static_cast<int>(grid_.encode(0).size());
    }

    std::vector<std::string> feature_names() const override {
        std::vector<std::string> names;
        if (grid_.config().encoding == GridEncoding::XY) {
            names = {"x", "y"};
        } else {
            for (int s = 0; s < grid_.mdp().n_states(); ++s)
                names.push_back("cell_" + std::to_string(s));
        }
        return names;
    }

  private:
    Vec do_reset() override {
        state_ = sample_categorical(grid_.mdp().start_dist());
        return grid_.encode(state_);
    }

    StepResult do_step(int action) override {
        const TabularMDP& mdp = grid_.mdp();
        StepResult r;
        r.reward = mdp.reward()(state_, action);
        state_ = sample_categorical(mdp.row(state_, action).transpose());
        r.obs = grid_.encode(state_);
        r.terminated = state_ == grid_.goal_state();
        return r;
    }

    int sample_categorical(const Vec& probs) {
        double u = rng_.uniform();
        double acc = 0.0;
        for (int i = 0; i < probs.size(); ++i) {
            acc += probs(i);
            if (u < acc) return i;
        }
        return static_cast<int>(probs.size()) - 1;
    }

    Gridworld grid_;
    int state_ = 0;
};

}  // namespace

Gridworld::Gridworld(const GridworldConfig& cfg) : cfg_(cfg) {
    require(cfg.width >= 1 && cfg.height >= 1, "grid must be at least 1x1");
    const int S = cfg.width * cfg.height;
    require(S >= 2, "grid needs at least two cells");
    require(cfg.horizon >= 1, "horizon must be positive");
    goal_state_ = S - 1;
    require(cfg.start_state >= -1 && cfg.start_state < S && cfg.start_state != goal_state_,
            "start_state must be -1 or a non-goal cell");

    const int A = 4;
    Mat P = Mat::Zero(static_cast<Eigen::Index>(S) * A, S);
    Mat R = Mat::Zero(S, A);
    for (int s = 0; s < S; ++s) {
        int x = s % cfg.width;
        int y = s / cfg.width;
        for (int a = 0; a < A; ++a) {
            int nx = x, ny = y;
            if (a == 0) ny = std::max(0, y - 1);
            if (a == 1) ny = std::min(cfg.height - 1, y + 1);
            if (a == 2) nx = std::max(0, x - 1);
            if (a == 3) nx = std::min(cfg.width - 1, x + 1);
            int next = s == goal_state_ ? goal_state_ : ny * cfg.width + nx;
            P(s * A + a, next) = 1.0;
            if (s != goal_state_ && next == goal_state_) R(s, a) = cfg.goal_reward;
        }
    }
    Vec mu = Vec::Zero(S);
    if (cfg.start_state >= 0) {
        mu(cfg.start_state) = 1.0;
    } else {
        mu.head(S - 1).setConstant(1.0 / (S - 1));
    }
    mdp_.emplace(S, A, std::move(P), std::move(R), cfg.gamma, std::move(mu));
}

Vec Gridworld::encode(int state) const {
    if (cfg_.encoding == GridEncoding::XY) {
        Vec o(2);
        o << static_cast<double>(state % cfg_.width), static_cast<double>(state / cfg_.width);
        return o;
    }
    Vec o = Vec::Zero(mdp_->n_states());
    o(state) = 1.0;
    return o;
}

int Gridworld::decode(const Vec& obs) const {
    if (cfg_.encoding == GridEncoding::XY) {
        int x = static_cast<int>(std::lround(obs(0)));
        int y = static_cast<int>(std::lround(obs(1)));
        require(x >= 0 && x < cfg_.width && y >= 0 && y < cfg_.height,
                "observation is outside the grid");
        return y * cfg_.width + x;
    }
    Eigen::Index best;
    obs.maxCoeff(&best);
    return static_cast<int>(best);
}

std::unique_ptr<Env> Gridworld::make_env(std::uint64_t seed) const {
    return std::make_unique<GridworldEnv>(*this, seed);
}

std::string env_id(const EnvConfig& cfg) {
    return std::visit(
        [](const auto& c) -> std::string {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, PendulumConfig>) return "pendulum-sine";
            if constexpr (std::is_same_v<T, MountainCarConfig>) return "mountain-car-disc";
            if constexpr (std::is_same_v<T, LobConfig>) return "lob-synth";
            if constexpr (std::is_same_v<T, GridworldConfig>) return "gridworld";
        },
        cfg);
}

double env_gamma(const EnvConfig& cfg) {
    return std::visit([](const auto& c) { return c.gamma; }, cfg);
}

std::unique_ptr<Env> make_env(const EnvConfig& cfg, std::uint64_t seed) {
    return std::visit(
        [seed](const auto& c) -> std::unique_ptr<Env> {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, PendulumConfig>)
                return std::make_unique<PendulumEnv>(c, seed);
            else if constexpr (std::is_same_v<T, MountainCarConfig>)
                return std::make_unique<MountainCarEnv>(c, seed);
            else if constexpr (std::is_same_v<T, LobConfig>)
                return std::make_unique<LobEnv>(c, seed);
            else
                return Gridworld(c).make_env(seed);
        },
        cfg);
}

Vec Standardizer::apply(const Vec& x) const {
    return (x - mean).cwiseQuotient(stddev);
}

Vec Standardizer::invert(const Vec& z) const {
    return z.cwiseProduct(stddev) + mean;
}

nlohmann::json Standardizer::to_json() const {
    nlohmann::json m = nlohmann::json::array();
    nlohmann::json s = nlohmann::json::array();
    for (int i = 0; i < mean.size(); ++i) {
        m.push_back(mean(i));
        s.push_back(stddev(i));
    }
    return {{"mean", std::move(m)}, {"stddev", std::move(s)}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
    const auto& m = j.at("mean");
    const auto& s = j.at("stddev");
    Standardizer out;
    out.mean.resize(m.size());
    out.stddev.resize(s.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        out.mean(i) = m[i].get<double>();
        out.stddev(i) = s[i].get<double>();
    }
    return out;
}

}  // namespace distill
