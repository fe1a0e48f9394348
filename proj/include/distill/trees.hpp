#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "distill/mdp.hpp"
#include "distill/rng.hpp"

namespace distill {

struct ExtraTreesConfig {
    int n_trees = 50;
    int max_depth = 6;
    int min_samples_split = 8;
};

/**
 * Extremely randomized regression trees: at each node one uniform-random cut
 * point is drawn per feature and the lowest-SSE cut wins. Fitting and
 * prediction are deterministic given (data order, seed).
 */
class ExtraTreesRegressor {
  public:
    ExtraTreesRegressor() = default;
    explicit ExtraTreesRegressor(ExtraTreesConfig cfg) : cfg_(cfg) {}

    void fit(const Mat& x, const Vec& y, std::uint64_t seed);
    double predict(const Vec& x) const;
    Vec predict_batch(const Mat& x) const;

    bool fitted() const { return !trees_.empty(); }
    const ExtraTreesConfig& config() const { return cfg_; }

    nlohmann::json to_json() const;
    static ExtraTreesRegressor from_json(const nlohmann::json& j);

  private:
    // feature < 0 marks a leaf; value holds the leaf mean.
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        double value = 0.0;
        int left = -1;
        int right = -1;
    };
    using Tree = std::vector<Node>;

    int build_node(Tree& tree, const Mat& x, const Vec& y, std::vector<int>& idx, int begin,
                   int end, int depth, Rng& rng) const;
    static double traverse(const Tree& tree, const Vec& x);

    ExtraTreesConfig cfg_;
    std::vector<Tree> trees_;
};

}  // namespace distill
