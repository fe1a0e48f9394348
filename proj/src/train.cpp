#include "distill/train.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "distill/expert.hpp"
#include "distill/text.hpp"

namespace distill {

namespace {

// Dataset unpacked into dense blocks: standardized features with the bias
// column appended, advantages, and the expert's action distribution per row.
struct DatasetTensors {
    Mat x;    // n x (obs_dim + 1)
    Mat adv;  // n x n_actions
    Mat tgt;  // n x n_actions
};

DatasetTensors build_tensors(const TrajectoryDataset& ds) {
    if (ds.rows.empty()) throw std::invalid_argument("dataset is empty");
    const int n = static_cast<int>(ds.rows.size());
    const int d = ds.obs_dim;
    const int A = ds.n_actions;

    DatasetTensors t;
    t.x.resize(n, d + 1);
    t.adv.resize(n, A);
    t.tgt.setZero(n, A);
    for (int i = 0; i < n; ++i) {
        const DatasetRow& row = ds.rows[i];
        if (row.features.size() != d || row.q_values.size() != A)
            throw std::invalid_argument("dataset row shape mismatch");
        Vec f = ds.standardizer ? ds.standardizer->apply(row.features) : row.features;
        t.x.row(i).head(d) = f.transpose();
        t.x(i, d) = 1.0;
        t.adv.row(i) = advantage_from_row(row).transpose();
        if (row.expert_probs)
            t.tgt.row(i) = row.expert_probs->transpose();
        else
            t.tgt(i, row.action) = 1.0;
    }
    return t;
}

Mat softmax_rows(const Mat& z) {
    Mat p = (z.colwise() - z.rowwise().maxCoeff()).array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    return p;
}

struct Gradients {
    Mat g_adv;
    Mat g_bc;
    double j_hat = 0.0;
    double l_hat = 0.0;
};

// Both objectives share the softmax probabilities, so the training loop
// computes them together. Logit-space derivatives:
//   advantage:  dJ/dz_b = pi_b (A_b - sum_a pi_a A_a)
//   cloning:    dL/dz_b = 2 pi_b ((pi_b - e_b) - sum_a pi_a (pi_a - e_a))
// then chain through z = W [s; 1] and average over rows.
Gradients compute_gradients(const Mat& w, const DatasetTensors& t) {
    const double n = static_cast<double>(t.x.rows());
    Mat p = softmax_rows(t.x * w.transpose());

    Gradients out;
    Vec abar = (p.array() * t.adv.array()).rowwise().sum();
    out.j_hat = abar.mean();
    Mat dz = (p.array() * (t.adv.array().colwise() - abar.array())) / n;
    out.g_adv = dz.transpose() * t.x;

    Mat diff = p - t.tgt;
    Vec c = (p.array() * diff.array()).rowwise().sum();
    out.l_hat = diff.array().square().rowwise().sum().mean();
    dz = (2.0 * p.array() * (diff.array().colwise() - c.array())) / n;
    out.g_bc = dz.transpose() * t.x;
    return out;
}

}  // namespace

GradResult grad_advantage(const SoftmaxLinearPolicy& policy, const TrajectoryDataset& dataset) {
    Gradients g = compute_gradients(policy.weights(), build_tensors(dataset));
    return {std::move(g.g_adv), g.j_hat};
}

GradResult grad_bc(const SoftmaxLinearPolicy& policy, const TrajectoryDataset& dataset) {
    Gradients g = compute_gradients(policy.weights(), build_tensors(dataset));
    return {std::move(g.g_bc), g.l_hat};
}

AdamState::AdamState(Eigen::Index rows, Eigen::Index cols, double beta1, double beta2, double eps)
    : m(Mat::Zero(rows, cols)), v(Mat::Zero(rows, cols)), beta1(beta1), beta2(beta2), eps(eps) {}

void adam_update(AdamState& state, Mat& params, const Mat& grad, double learning_rate) {
    if (params.rows() != grad.rows() || params.cols() != grad.cols() ||
        params.rows() != state.m.rows() || params.cols() != state.m.cols())
        throw std::invalid_argument("adam_update shape mismatch");
    ++state.t;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    Mat m_hat = state.m / bc1;
    Mat v_hat = state.v / bc2;
    params += learning_rate * (m_hat.array() / (v_hat.array().sqrt() + state.eps)).matrix();
}

void TrainingTrace::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "iter,J_hat,L_hat,grad_norm_adv,grad_norm_bc\n";
    for (const TracePoint& p : points)
        out << fmt_int(p.iter) << ',' << fmt_double(p.j_hat) << ',' << fmt_double(p.l_hat) << ','
            << fmt_double(p.grad_norm_adv) << ',' << fmt_double(p.grad_norm_bc) << "\n";
}

TrainResult explain_train(const TrajectoryDataset& dataset, const DistillConfig& config,
                          const SnapshotFn& on_log) {
    if (config.n_iterations < 1) throw std::invalid_argument("n_iterations must be >= 1");
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (config.bc_weight < 0.0) throw std::invalid_argument("bc_weight must be >= 0");
    if (config.log_every < 1) throw std::invalid_argument("log_every must be >= 1");

    DatasetTensors tensors = build_tensors(dataset);
    TrainResult result{SoftmaxLinearPolicy(dataset.n_actions, dataset.obs_dim), {}};
    result.policy.standardizer = dataset.standardizer;

    AdamState adam(dataset.n_actions, dataset.obs_dim + 1, config.beta1, config.beta2,
                   config.eps);
    for (int iter = 0; iter < config.n_iterations; ++iter) {
        Gradients g = compute_gradients(result.policy.weights(), tensors);
        if (iter % config.log_every == 0) {
            result.trace.points.push_back(
                {iter, g.j_hat, g.l_hat, g.g_adv.norm(), g.g_bc.norm()});
            if (on_log) on_log(iter, result.policy);
        }
        Mat combined = -config.bc_weight * g.g_bc;
        if (config.advantage_enabled) combined += g.g_adv;
        if (!combined.allFinite())
            throw std::runtime_error("non-finite gradient at iteration " + std::to_string(iter));
        adam_update(adam, result.policy.weights(), combined, config.learning_rate);
    }

    Gradients g = compute_gradients(result.policy.weights(), tensors);
    result.trace.points.push_back(
        {config.n_iterations, g.j_hat, g.l_hat, g.g_adv.norm(), g.g_bc.norm()});
    if (on_log) on_log(config.n_iterations, result.policy);
    return result;
}

}  // namespace distill
