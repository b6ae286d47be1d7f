#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uql/agent.hpp"
#include "uql/baselines.hpp"
#include "uql/gridworld.hpp"

namespace uql {

// Sectioned key/value text:
//   [section]
//   key = value   # comment
// Sections and keys keep file order; '#' starts a comment; duplicate
// sections or keys are errors. Values are stored raw and parsed on access,
// so parse -> serialize -> parse is the identity.
class ConfigDoc {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };

  static ConfigDoc parse(const std::string& text);
  static ConfigDoc load(const std::string& path);
  std::string serialize() const;

  bool has(const std::string& section, const std::string& key) const;
  const std::string& raw(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key,
           const std::string& value);

  // Typed accessors throw std::invalid_argument naming section.key on
  // missing keys or malformed values. "inf" is a legal double token.
  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::vector<std::string> get_list(const std::string& section,
                                    const std::string& key) const;

  const std::vector<Section>& sections() const { return sections_; }

  bool operator==(const ConfigDoc& other) const {
    if (sections_.size() != other.sections_.size()) return false;
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      if (sections_[i].name != other.sections_[i].name ||
          sections_[i].entries != other.sections_[i].entries)
        return false;
    }
    return true;
  }

 private:
  const Section* find(const std::string& section) const;
  std::vector<Section> sections_;
};

enum class EnvKind { gridworld, random_mdp };
enum class PhaseKind { uniform, online };

struct EnvironmentConfig {
  EnvKind kind = EnvKind::gridworld;
  GridworldSpec grid;         // rows resolved from `map`
  std::string map_ref = "default";
  int rm_states = 5;
  int rm_actions = 3;
  double rm_reward_scale = 1.0;
  std::uint64_t rm_seed = 0;
  double discount = 0.95;
  double reward_noise_std = 0.0;
};

struct RunSettings {
  PhaseKind phase = PhaseKind::uniform;
  long num_updates = 0;
  std::vector<std::uint64_t> seeds;
  int record_interval = 50;
  std::vector<std::pair<int, int>> probe_cells;  // gridworld probes
  std::vector<int> probe_states;                 // state-id probes
  int eval_rollouts = 0;
  int eval_horizon = 400;
  long replay_capacity = 500000;
  int episode_horizon = 1000;
  std::string output_dir;
  bool dump_final_values = true;
  bool record_median_beta = true;
};

struct RunConfig {
  EnvironmentConfig env;
  std::string algorithm = "uql";  // uql | q-learning | double-q |
                                  // sql-fixed-beta | ensemble-mean
  AgentConfig agent;
  BaselineConfig baseline;
  RunSettings run;
};

// Validates the document against the known schema (unknown keys are errors
// naming the field) and resolves the map reference relative to config_dir.
RunConfig parse_run_config(const ConfigDoc& doc, const std::string& config_dir);

// Sections of the known schema that define key (bare sweep-parameter lookup).
std::vector<std::string> schema_sections_with_key(const std::string& key);

// Builds the environment and resolves probe labels/state ids.
struct BuiltEnvironment {
  TabularMdp mdp;
  bool has_grid = false;
  GridGeometry geom;
  std::vector<int> probe_states;
  std::vector<std::string> probe_labels;
};

BuiltEnvironment build_environment(const RunConfig& cfg);

}  // namespace uql
