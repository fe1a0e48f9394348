#include "distill/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace distill {

SoftmaxLinearPolicy::SoftmaxLinearPolicy(int n_actions, int obs_dim) {
    if (n_actions < 2 || obs_dim < 1)
        throw std::invalid_argument("policy needs at least two actions and one feature");
    weights_ = Mat::Zero(n_actions, obs_dim + 1);
}

Vec SoftmaxLinearPolicy::logits(const Vec& features) const {
    if (features.size() != obs_dim())
        throw std::invalid_argument("feature length does not match the policy");
    if (!features.allFinite()) throw std::invalid_argument("non-finite features");
    return weights_.leftCols(obs_dim()) * features + weights_.col(obs_dim());
}

Vec SoftmaxLinearPolicy::probs(const Vec& features) const {
    Vec z = logits(features);
    Vec e = (z.array() - z.maxCoeff()).exp();
    return e / e.sum();
}

int SoftmaxLinearPolicy::greedy_action(const Vec& features) const {
    Vec z = logits(features);
    Eigen::Index best;
    z.maxCoeff(&best);
    return static_cast<int>(best);
}

int SoftmaxLinearPolicy::act(const Vec& raw_obs) const {
    return greedy_action(standardizer ? standardizer->apply(raw_obs) : raw_obs);
}

nlohmann::json SoftmaxLinearPolicy::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (int a = 0; a < n_actions(); ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k <= obs_dim(); ++k) row.push_back(weights_(a, k));
        rows.push_back(std::move(row));
    }
    nlohmann::json j = {{"n_actions", n_actions()},
                        {"obs_dim", obs_dim()},
                        {"weights", std::move(rows)}};
    j["standardizer"] = standardizer ? standardizer->to_json() : nlohmann::json(nullptr);
    return j;
}

SoftmaxLinearPolicy SoftmaxLinearPolicy::from_json(const nlohmann::json& j) {
    SoftmaxLinearPolicy p(j.at("n_actions").get<int>(), j.at("obs_dim").get<int>());
    const auto& rows = j.at("weights");
    if (rows.size() != static_cast<std::size_t>(p.n_actions()))
        throw std::invalid_argument("weight row count mismatch");
    for (int a = 0; a < p.n_actions(); ++a) {
        if (rows[a].size() != static_cast<std::size_t>(p.obs_dim() + 1))
            throw std::invalid_argument("weight column count mismatch");
        for (int k = 0; k <= p.obs_dim(); ++k) p.weights()(a, k) = rows[a][k].get<double>();
    }
    if (j.contains("standardizer") && !j["standardizer"].is_null())
        p.standardizer = Standardizer::from_json(j["standardizer"]);
    return p;
}

}  // namespace distill
