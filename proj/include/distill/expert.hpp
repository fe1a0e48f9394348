#pragma once

#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "distill/dataset.hpp"
#include "distill/env.hpp"
#include "distill/mdp.hpp"
#include "distill/trees.hpp"

namespace distill {

/// Action-value model backing an expert policy. Observations are raw
/// (unstandardized); implementations handle their own feature scaling.
class QModel {
  public:
    virtual ~QModel() = default;

    virtual int n_actions() const = 0;
    virtual Vec q_values(const Vec& obs) const = 0;
    virtual nlohmann::json to_json() const = 0;

    // lowest index wins ties
    int greedy_action(const Vec& obs) const;
};

std::unique_ptr<QModel> qmodel_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------

struct ValueIterationResult {
    Mat q;               // n_states x n_actions
    PolicyTable greedy;  // one-hot rows, lowest-index ties
};

/// Exact tabular value iteration to Bellman residual below tol.
ValueIterationResult value_iteration(const TabularMDP& mdp, double tol = 1e-10);

/// Q table over a gridworld, addressed through its state encoding.
class TabularQModel final : public QModel {
  public:
    TabularQModel(Mat q, GridworldConfig grid_cfg);

    int n_actions() const override { return static_cast<int>(q_.cols()); }
    Vec q_values(const Vec& obs) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<TabularQModel> from_json(const nlohmann::json& j);

    const Mat& table() const { return q_; }

  private:
    Mat q_;
    Gridworld grid_;
};

// ---------------------------------------------------------------------------

struct Transition {
    Vec obs;
    int action = 0;
    double reward = 0.0;
    Vec next_obs;
    bool terminal = false;  // true only for genuine termination, not truncation
};

struct TransitionBatch {
    int n_actions = 0;
    int obs_dim = 0;
    std::vector<Transition> transitions;
};

/// Tree-ensemble FQI model: one regressor per action over standardized
/// features, a constant fallback for actions the batch never took.
class FqiModel final : public QModel {
  public:
    FqiModel(Standardizer standardizer, std::vector<ExtraTreesRegressor> per_action,
             std::vector<double> fallback, int iterations, double gamma);

    int n_actions() const override { return static_cast<int>(per_action_.size()); }
    Vec q_values(const Vec& obs) const override;
    nlohmann::json to_json() const override;
    static std::unique_ptr<FqiModel> from_json(const nlohmann::json& j);

    int iterations() const { return iterations_; }

    // Q for a pre-standardized block of observations, one row per sample.
    Mat q_block(const Mat& std_obs) const;
    const Standardizer& standardizer() const { return standardizer_; }

  private:
    Standardizer standardizer_;
    std::vector<ExtraTreesRegressor> per_action_;
    std::vector<double> fallback_;
    int iterations_ = 1;
    double gamma_ = 0.99;
};

/**
 * Batch fitted Q-iteration. Iteration 1 regresses immediate rewards onto
 * features per action; iteration k+1 regresses r + gamma * max_a' Q_k(s', a').
 * With iterations=1 the model is a pure reward predictor. Deterministic given
 * (batch order, seed, regressor_cfg).
 */
FqiModel fitted_q_iteration(const TransitionBatch& batch, int iterations, double gamma,
                            const ExtraTreesConfig& regressor_cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------

enum class Exploration { Uniform, Sticky };

struct ExpertTrainConfig {
    int iterations = 30;           // FQI sweeps per refit
    double gamma = 0.99;           // FQI discount
    ExtraTreesConfig trees;
    int rounds = 1;                // collect/refit rounds; round 0 explores blindly
    int episodes_per_round = 100;
    double epsilon = 0.2;          // exploration rate in greedy rounds
    Exploration exploration = Exploration::Uniform;
    int sticky_mean_hold = 40;     // mean action-hold length for sticky exploration
    int max_batch = 0;             // 0 = no subsampling before each refit
    std::uint64_t seed = 0;
};

/// Grows a transition batch over rounds (blind exploration first, then
/// epsilon-greedy on the current model) and refits FQI after each round.
std::unique_ptr<FqiModel> train_fqi_expert(const EnvConfig& env_cfg,
                                           const ExpertTrainConfig& cfg);

/**
 * Runs the greedy expert for n_trajectories episodes. Every visited state
 * contributes one row holding the chosen action and the full Q vector;
 * features stay raw and the standardizer is fit afterward into metadata.
 */
TrajectoryDataset collect_trajectories(const EnvConfig& env_cfg, const QModel& expert,
                                       int n_trajectories, std::uint64_t seed);

/// A(s, .) = Q(s, .) - V(s) with V from the row's expert distribution
/// (one-hot greedy unless the row carries explicit probabilities).
Vec advantage_from_row(const DatasetRow& row);

}  // namespace distill
