#pragma once

#include <nlohmann/json.hpp>
#include <optional>

#include "distill/env.hpp"
#include "distill/mdp.hpp"

namespace distill {

/**
 * Softmax over a linear map of the features: pi(a|s) = softmax(W [s; 1])_a,
 * with the bias folded into the last weight column. probs()/logits() expect
 * features in the space the policy was trained in (standardized when the
 * stored standardizer is set); act() takes raw observations and applies the
 * standardizer itself.
 */
class SoftmaxLinearPolicy {
  public:
    SoftmaxLinearPolicy(int n_actions, int obs_dim);  // zero weights, uniform policy

    int n_actions() const { return static_cast<int>(weights_.rows()); }
    int obs_dim() const { return static_cast<int>(weights_.cols()) - 1; }

    Mat& weights() { return weights_; }
    const Mat& weights() const { return weights_; }

    Vec logits(const Vec& features) const;
    Vec probs(const Vec& features) const;  // stable softmax, rejects non-finite input
    int greedy_action(const Vec& features) const;  // lowest index wins ties

    int act(const Vec& raw_obs) const;

    std::optional<Standardizer> standardizer;

    nlohmann::json to_json() const;
    static SoftmaxLinearPolicy from_json(const nlohmann::json& j);

  private:
    Mat weights_;  // n_actions x (obs_dim + 1)
};

}  // namespace distill
