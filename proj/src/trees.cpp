#include "distill/trees.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace distill {

void ExtraTreesRegressor::fit(const Mat& x, const Vec& y, std::uint64_t seed) {
    if (x.rows() == 0 || x.rows() != y.size())
        throw std::invalid_argument("regressor needs matching non-empty x and y");
    if (cfg_.n_trees < 1 || cfg_.max_depth < 0 || cfg_.min_samples_split < 2)
        throw std::invalid_argument("bad tree ensemble configuration");

    trees_.clear();
    trees_.reserve(cfg_.n_trees);
    const int n = static_cast<int>(x.rows());
    for (int t = 0; t < cfg_.n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        Tree tree;
        build_node(tree, x, y, idx, 0, n, 0, rng);
        trees_.push_back(std::move(tree));
    }
}

int ExtraTreesRegressor::build_node(Tree& tree, const Mat& x, const Vec& y, std::vector<int>& idx,
                                    int begin, int end, int depth, Rng& rng) const {
    const int n = end - begin;
    double sum = 0.0, sumsq = 0.0;
    for (int i = begin; i < end; ++i) {
        sum += y(idx[i]);
        sumsq += y(idx[i]) * y(idx[i]);
    }
    const double mean = sum / n;
    const double sse = sumsq - sum * sum / n;

    const int node = static_cast<int>(tree.size());
    tree.push_back(Node{});
    tree[node].value = mean;
    if (depth >= cfg_.max_depth || n < cfg_.min_samples_split || sse <= 1e-12) return node;

    const int d = static_cast<int>(x.cols());
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int f = 0; f < d; ++f) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int i = begin; i < end; ++i) {
            double v = x(idx[i], f);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(lo < hi)) continue;
        double t = rng.uniform(lo, hi);
        double sum_l = 0.0, sumsq_l = 0.0;
        int n_l = 0;
        for (int i = begin; i < end; ++i) {
            double v = y(idx[i]);
            if (x(idx[i], f) <= t) {
                sum_l += v;
                sumsq_l += v * v;
                ++n_l;
            }
        }
        int n_r = n - n_l;
        if (n_l == 0 || n_r == 0) continue;
        double sum_r = sum - sum_l;
        double sumsq_r = sumsq - sumsq_l;
        double score = (sumsq_l - sum_l * sum_l / n_l) + (sumsq_r - sum_r * sum_r / n_r);
        if (score < best_score) {
            best_score = score;
            best_feature = f;
            best_threshold = t;
        }
    }
    if (best_feature < 0) return node;

    // in-place partition of the index span
    int mid = begin;
    for (int i = begin; i < end; ++i)
        if (x(idx[i], best_feature) <= best_threshold) std::swap(idx[i], idx[mid++]);

    tree[node].feature = best_feature;
    tree[node].threshold = best_threshold;
    int left = build_node(tree, x, y, idx, begin, mid, depth + 1, rng);
    int right = build_node(tree, x, y, idx, mid, end, depth + 1, rng);
    tree[node].left = left;
    tree[node].right = right;
    return node;
}

double ExtraTreesRegressor::traverse(const Tree& tree, const Vec& x) {
    int node = 0;
    while (tree[node].feature >= 0)
        node = x(tree[node].feature) <= tree[node].threshold ? tree[node].left : tree[node].right;
    return tree[node].value;
}

double ExtraTreesRegressor::predict(const Vec& x) const {
    if (trees_.empty()) throw std::logic_error("predict called before fit");
    double acc = 0.0;
    for (const Tree& tree : trees_) acc += traverse(tree, x);
    return acc / trees_.size();
}

Vec ExtraTreesRegressor::predict_batch(const Mat& x) const {
    Vec out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict(x.row(i).transpose());
    return out;
}

nlohmann::json ExtraTreesRegressor::to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& tree : trees_) {
        nlohmann::json f = nlohmann::json::array(), t = nlohmann::json::array(),
                       v = nlohmann::json::array(), l = nlohmann::json::array(),
                       r = nlohmann::json::array();
        for (const Node& node : tree) {
            f.push_back(node.feature);
            t.push_back(node.threshold);
            v.push_back(node.value);
            l.push_back(node.left);
            r.push_back(node.right);
        }
        trees.push_back({{"feature", std::move(f)},
                         {"threshold", std::move(t)},
                         {"value", std::move(v)},
                         {"left", std::move(l)},
                         {"right", std::move(r)}});
    }
    return {{"n_trees", cfg_.n_trees},
            {"max_depth", cfg_.max_depth},
            {"min_samples_split", cfg_.min_samples_split},
            {"trees", std::move(trees)}};
}

ExtraTreesRegressor ExtraTreesRegressor::from_json(const nlohmann::json& j) {
    ExtraTreesConfig cfg;
    cfg.n_trees = j.at("n_trees").get<int>();
    cfg.max_depth = j.at("max_depth").get<int>();
    cfg.min_samples_split = j.at("min_samples_split").get<int>();
    ExtraTreesRegressor out(cfg);
    for (const auto& tj : j.at("trees")) {
        Tree tree;
        const auto& f = tj.at("feature");
        const auto& t = tj.at("threshold");
        const auto& v = tj.at("value");
        const auto& l = tj.at("left");
        const auto& r = tj.at("right");
        for (std::size_t i = 0; i < f.size(); ++i)
            tree.push_back(Node{f[i].get<int>(), t[i].get<double>(), v[i].get<double>(),
                                l[i].get<int>(), r[i].get<int>()});
        out.trees_.push_back(std::move(tree));
    }
    return out;
}

}  // namespace distill
