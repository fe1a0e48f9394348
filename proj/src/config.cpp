#include "distill/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace distill {

namespace {

const std::set<std::string> kSections = {"env", "expert", "collect", "distill", "eval", "out"};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int to_int(const std::string& v, const std::string& ctx) {
    int out;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("expected an integer for " + ctx + ", got '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& v, const std::string& ctx) {
    std::uint64_t out;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("expected a non-negative integer for " + ctx + ", got '" + v + "'");
    return out;
}

double to_double(const std::string& v, const std::string& ctx) {
    try {
        std::size_t used = 0;
        double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw ConfigError("expected a number for " + ctx + ", got '" + v + "'");
    }
}

std::vector<std::uint64_t> to_u64_list(const std::string& v, const std::string& ctx) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_u64(item, ctx));
    }
    if (out.empty()) throw ConfigError("empty list for " + ctx);
    return out;
}

// accessor over one section's raw map
class Keys {
  public:
    Keys(const std::map<std::string, std::string>& kv, std::string section)
        : kv_(kv), section_(std::move(section)) {}

    std::string require(const std::string& key) const {
        auto it = kv_.find(key);
        if (it == kv_.end())
            throw ConfigError("missing key '" + key + "' in [" + section_ + "]");
        return it->second;
    }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    int get(const std::string& key, int fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : to_int(it->second, context(key));
    }

    double get(const std::string& key, double fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : to_double(it->second, context(key));
    }

    std::uint64_t get(const std::string& key, std::uint64_t fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : to_u64(it->second, context(key));
    }

    std::string context(const std::string& key) const { return "[" + section_ + "] " + key; }

  private:
    const std::map<std::string, std::string>& kv_;
    std::string section_;
};

}  // namespace

IniFile IniFile::parse_string(const std::string& text) {
    IniFile ini;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
            current = trim(t.substr(1, t.size() - 2));
            if (!kSections.count(current))
                throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" +
                                  current + "]");
            if (ini.sections.count(current))
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate section [" +
                                  current + "]");
            ini.sections[current];
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        if (current.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        auto& sec = ini.sections[current];
        if (sec.count(key))
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key +
                              "' in [" + current + "]");
        sec[key] = value;
    }
    return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

RunConfig RunConfig::from_file(const std::string& path) {
    return RunConfig(IniFile::parse_file(path));
}

RunConfig RunConfig::from_string(const std::string& text) {
    return RunConfig(IniFile::parse_string(text));
}

bool RunConfig::has_section(const std::string& name) const {
    return ini_.sections.count(name) > 0;
}

const std::map<std::string, std::string>& RunConfig::section(const std::string& name) const {
    auto it = ini_.sections.find(name);
    if (it == ini_.sections.end()) throw ConfigError("missing section [" + name + "]");
    return it->second;
}

void RunConfig::reject_unknown(const std::string& section_name,
                               const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : section(section_name))
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in [" + section_name + "]");
}

EnvConfig RunConfig::env() const {
    Keys keys(section("env"), "env");
    std::string id = keys.require("id");
    if (id == "pendulum-sine") {
        reject_unknown("env", {"id", "actions", "horizon", "gamma"});
        PendulumConfig c;
        c.n_actions = keys.get("actions", c.n_actions);
        c.horizon = keys.get("horizon", c.horizon);
        c.gamma = keys.get("gamma", c.gamma);
        return c;
    }
    if (id == "mountain-car-disc") {
        reject_unknown("env", {"id", "actions", "horizon", "gamma"});
        MountainCarConfig c;
        c.n_actions = keys.get("actions", c.n_actions);
        c.horizon = keys.get("horizon", c.horizon);
        c.gamma = keys.get("gamma", c.gamma);
        return c;
    }
    if (id == "lob-synth") {
        reject_unknown("env", {"id", "features", "horizon", "gamma", "kappa", "sigma", "vol_min",
                               "vol_max"});
        LobConfig c;
        c.n_features = keys.get("features", c.n_features);
        c.horizon = keys.get("horizon", c.horizon);
        c.gamma = keys.get("gamma", c.gamma);
        c.kappa = keys.get("kappa", c.kappa);
        c.sigma = keys.get("sigma", c.sigma);
        c.vol_min = keys.get("vol_min", c.vol_min);
        c.vol_max = keys.get("vol_max", c.vol_max);
        return c;
    }
    if (id == "gridworld") {
        reject_unknown("env", {"id", "width", "height", "gamma", "horizon", "encoding",
                               "start_state", "goal_reward"});
        GridworldConfig c;
        c.width = keys.get("width", c.width);
        c.height = keys.get("height", c.height);
        c.gamma = keys.get("gamma", c.gamma);
        c.horizon = keys.get("horizon", c.horizon);
        std::string enc = keys.get("encoding", std::string("onehot"));
        if (enc == "onehot")
            c.encoding = GridEncoding::OneHot;
        else if (enc == "xy")
            c.encoding = GridEncoding::XY;
        else
            throw ConfigError("unknown [env] encoding '" + enc + "'");
        c.start_state = keys.get("start_state", c.start_state);
        c.goal_reward = keys.get("goal_reward", c.goal_reward);
        return c;
    }
    throw ConfigError("unknown [env] id '" + id + "'");
}

namespace {

const std::set<std::string> kExpertKeys = {
    "method", "gamma",       "iterations", "rounds",    "episodes_per_round",
    "epsilon", "exploration", "sticky_hold", "trees",    "depth",
    "min_split", "max_batch", "seed",       "tol"};

}  // namespace

std::string RunConfig::expert_method() const {
    reject_unknown("expert", kExpertKeys);
    Keys keys(section("expert"), "expert");
    std::string method = keys.get("method", std::string("fqi"));
    if (method != "fqi" && method != "value-iteration")
        throw ConfigError("unknown [expert] method '" + method + "'");
    return method;
}

ExpertTrainConfig RunConfig::expert() const {
    reject_unknown("expert", kExpertKeys);
    Keys keys(section("expert"), "expert");
    ExpertTrainConfig c;
    c.gamma = keys.get("gamma", c.gamma);
    c.iterations = keys.get("iterations", c.iterations);
    c.rounds = keys.get("rounds", c.rounds);
    c.episodes_per_round = keys.get("episodes_per_round", c.episodes_per_round);
    c.epsilon = keys.get("epsilon", c.epsilon);
    std::string expl = keys.get("exploration", std::string("uniform"));
    if (expl == "uniform")
        c.exploration = Exploration::Uniform;
    else if (expl == "sticky")
        c.exploration = Exploration::Sticky;
    else
        throw ConfigError("unknown [expert] exploration '" + expl + "'");
    c.sticky_mean_hold = keys.get("sticky_hold", c.sticky_mean_hold);
    c.trees.n_trees = keys.get("trees", c.trees.n_trees);
    c.trees.max_depth = keys.get("depth", c.trees.max_depth);
    c.trees.min_samples_split = keys.get("min_split", c.trees.min_samples_split);
    c.max_batch = keys.get("max_batch", c.max_batch);
    c.seed = keys.get("seed", c.seed);
    return c;
}

double RunConfig::expert_tol() const {
    Keys keys(section("expert"), "expert");
    return keys.get("tol", 1e-10);
}

std::uint64_t RunConfig::expert_seed() const {
    Keys keys(section("expert"), "expert");
    return keys.get("seed", std::uint64_t{0});
}

int RunConfig::collect_n_trajectories() const {
    reject_unknown("collect", {"n_trajectories", "seed"});
    Keys keys(section("collect"), "collect");
    return to_int(keys.require("n_trajectories"), "[collect] n_trajectories");
}

std::uint64_t RunConfig::collect_seed() const {
    Keys keys(section("collect"), "collect");
    return keys.get("seed", std::uint64_t{0});
}

DistillConfig RunConfig::distill() const {
    reject_unknown("distill", {"iterations", "lambda", "eta", "seed", "log_every"});
    Keys keys(section("distill"), "distill");
    DistillConfig c;
    c.n_iterations = keys.get("iterations", c.n_iterations);
    c.learning_rate = keys.get("lambda", c.learning_rate);
    c.bc_weight = keys.get("eta", c.bc_weight);
    c.seed = keys.get("seed", c.seed);
    c.log_every = keys.get("log_every", c.log_every);
    return c;
}

int RunConfig::eval_n_episodes() const {
    reject_unknown("eval", {"n_episodes", "seeds", "target"});
    Keys keys(section("eval"), "eval");
    return keys.get("n_episodes", 10);
}

std::vector<std::uint64_t> RunConfig::eval_seeds() const {
    Keys keys(section("eval"), "eval");
    return to_u64_list(keys.get("seeds", std::string("0")), "[eval] seeds");
}

std::string RunConfig::eval_target() const {
    Keys keys(section("eval"), "eval");
    std::string target = keys.get("target", std::string("policy"));
    if (target != "policy" && target != "expert")
        throw ConfigError("unknown [eval] target '" + target + "'");
    return target;
}

std::string RunConfig::out_dir() const {
    reject_unknown("out", {"dir"});
    Keys keys(section("out"), "out");
    return keys.require("dir");
}

}  // namespace distill
