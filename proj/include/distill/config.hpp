#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "distill/env.hpp"
#include "distill/expert.hpp"
#include "distill/train.hpp"

namespace distill {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Flat INI: [section] headers, key = value lines, # or ; comments. Duplicate
/// keys and sections outside the known set are rejected at parse time.
struct IniFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static IniFile parse_file(const std::string& path);
    static IniFile parse_string(const std::string& text);
};

/// Typed view of one pipeline configuration. Sections are validated lazily:
/// each accessor checks presence and rejects unknown keys, so a config may
/// carry only the sections its subcommand needs.
class RunConfig {
  public:
    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text);

    bool has_section(const std::string& name) const;

    EnvConfig env() const;                       // [env]
    std::string expert_method() const;           // [expert] method, fqi | value-iteration
    ExpertTrainConfig expert() const;            // [expert] (fqi)
    double expert_tol() const;                   // [expert] tol (value-iteration)
    std::uint64_t expert_seed() const;
    int collect_n_trajectories() const;          // [collect]
    std::uint64_t collect_seed() const;
    DistillConfig distill() const;               // [distill]
    int eval_n_episodes() const;                 // [eval]
    std::vector<std::uint64_t> eval_seeds() const;
    std::string eval_target() const;             // policy | expert
    std::string out_dir() const;                 // [out]

  private:
    explicit RunConfig(IniFile ini) : ini_(std::move(ini)) {}

    const std::map<std::string, std::string>& section(const std::string& name) const;
    void reject_unknown(const std::string& section_name,
                        const std::set<std::string>& allowed) const;

    IniFile ini_;
};

}  // namespace distill
