#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "distill/env.hpp"
#include "distill/mdp.hpp"

namespace distill {

/**
 * One visited state. Features are stored raw (unstandardized); q_values holds
 * the expert's Q(s, a) for every action. expert_probs is only set for
 * synthetic stochastic experts; when absent the expert is the one-hot greedy
 * action.
 */
struct DatasetRow {
    Vec features;
    int action = 0;
    Vec q_values;
    std::optional<Vec> expert_probs;
};

struct TrajectoryDataset {
    std::string env;
    int n_actions = 0;
    int obs_dim = 0;
    int n_trajectories = 0;
    std::uint64_t seed = 0;
    std::optional<Standardizer> standardizer;
    std::vector<DatasetRow> rows;

    std::size_t size() const { return rows.size(); }

    void save_jsonl(const std::string& path) const;
    static TrajectoryDataset load_jsonl(const std::string& path);
};

/// Per-feature mean and stddev over all rows (population convention).
Standardizer fit_standardizer(const TrajectoryDataset& dataset);

}  // namespace distill
