#include "distill/dataset.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace distill {

namespace {

nlohmann::json vec_to_json(const Vec& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vec vec_from_json(const nlohmann::json& arr) {
    Vec v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
    return v;
}

}  // namespace

void TrajectoryDataset::save_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");

    nlohmann::json meta = {{"env", env},
                           {"n_actions", n_actions},
                           {"obs_dim", obs_dim},
                           {"n_trajectories", n_trajectories},
                           {"seed", seed}};
    meta["standardizer"] = standardizer ? standardizer->to_json() : nlohmann::json(nullptr);
    out << meta.dump() << "\n";

    for (const DatasetRow& row : rows) {
        nlohmann::json line = {{"s", vec_to_json(row.features)},
                               {"a", row.action},
                               {"q", vec_to_json(row.q_values)}};
        if (row.expert_probs) line["pi"] = vec_to_json(*row.expert_probs);
        out << line.dump() << "\n";
    }
}

TrajectoryDataset TrajectoryDataset::load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset file is empty: " + path);
    nlohmann::json meta = nlohmann::json::parse(line);

    TrajectoryDataset ds;
    ds.env = meta.at("env").get<std::string>();
    ds.n_actions = meta.at("n_actions").get<int>();
    ds.obs_dim = meta.at("obs_dim").get<int>();
    ds.n_trajectories = meta.at("n_trajectories").get<int>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    if (meta.contains("standardizer") && !meta["standardizer"].is_null())
        ds.standardizer = Standardizer::from_json(meta["standardizer"]);

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        DatasetRow row;
        row.features = vec_from_json(j.at("s"));
        row.action = j.at("a").get<int>();
        row.q_values = vec_from_json(j.at("q"));
        if (j.contains("pi")) row.expert_probs = vec_from_json(j["pi"]);
        if (row.features.size() != ds.obs_dim || row.q_values.size() != ds.n_actions ||
            row.action < 0 || row.action >= ds.n_actions)
            throw std::runtime_error("dataset row does not match metadata shapes");
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

Standardizer fit_standardizer(const TrajectoryDataset& dataset) {
    if (dataset.rows.empty()) throw std::invalid_argument("cannot standardize an empty dataset");
    const int d = static_cast<int>(dataset.rows.front().features.size());
    Vec mean = Vec::Zero(d);
    for (const DatasetRow& row : dataset.rows) mean += row.features;
    mean /= static_cast<double>(dataset.rows.size());

    Vec var = Vec::Zero(d);
    for (const DatasetRow& row : dataset.rows) {
        Vec diff = row.features - mean;
        var += diff.cwiseProduct(diff);
    }
    var /= static_cast<double>(dataset.rows.size());

    Standardizer s;
    s.mean = std::move(mean);
    s.stddev = var.cwiseSqrt().cwiseMax(1e-8);
    return s;
}

}  // namespace distill
