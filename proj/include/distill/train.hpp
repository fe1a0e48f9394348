#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "distill/dataset.hpp"
#include "distill/policy.hpp"

namespace distill {

struct DistillConfig {
    int n_iterations = 20000;
    double learning_rate = 0.01;  // Adam initial rate (lambda)
    double bc_weight = 0.01;      // eta, scale of the cloning term
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    int log_every = 100;
    bool advantage_enabled = true;  // false: cloning-only baseline
};

struct GradResult {
    Mat grad;      // same shape as the weight matrix
    double value;  // J_hat for the advantage objective, L_hat for the BC loss
};

/**
 * Gradient of the dataset advantage objective
 * J_hat = mean_rows sum_a pi(a|s) A(s, a), with the action expectation taken
 * in closed form. Ascending it pushes probability toward high-advantage
 * actions.
 */
GradResult grad_advantage(const SoftmaxLinearPolicy& policy, const TrajectoryDataset& dataset);

/// Gradient of L_hat = mean_rows sum_a (pi(a|s) - pi_E(a|s))^2, the exact
/// derivative including its factor 2.
GradResult grad_bc(const SoftmaxLinearPolicy& policy, const TrajectoryDataset& dataset);

struct AdamState {
    Mat m;
    Mat v;
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState(Eigen::Index rows, Eigen::Index cols, double beta1 = 0.9, double beta2 = 0.999,
              double eps = 1e-8);
};

/// One bias-corrected Adam step. Ascent convention: parameters move along the
/// supplied gradient.
void adam_update(AdamState& state, Mat& params, const Mat& grad, double learning_rate);

struct TracePoint {
    int iter = 0;
    double j_hat = 0.0;
    double l_hat = 0.0;
    double grad_norm_adv = 0.0;
    double grad_norm_bc = 0.0;
};

struct TrainingTrace {
    std::vector<TracePoint> points;
    void save_csv(const std::string& path) const;
};

struct TrainResult {
    SoftmaxLinearPolicy policy;
    TrainingTrace trace;
};

using SnapshotFn = std::function<void(int iteration, const SoftmaxLinearPolicy&)>;

/**
 * Distills the dataset into a softmax-linear policy: starts from zero
 * weights, runs n_iterations full-batch Adam steps along
 * grad_advantage - bc_weight * grad_bc (advantage term dropped when
 * disabled), and logs every log_every iterations plus the final state.
 * on_log, when set, receives the policy at every logged iteration.
 */
TrainResult explain_train(const TrajectoryDataset& dataset, const DistillConfig& config,
                          const SnapshotFn& on_log = {});

}  // namespace distill
