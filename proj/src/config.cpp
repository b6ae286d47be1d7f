#include "uql/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace uql {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

}  // namespace

ConfigDoc ConfigDoc::parse(const std::string& text) {
  ConfigDoc doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  Section* current = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail("line " + std::to_string(lineno) + ": unterminated section header");
      std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail("line " + std::to_string(lineno) + ": empty section name");
      for (const Section& s : doc.sections_)
        if (s.name == name)
          fail("line " + std::to_string(lineno) + ": duplicate section [" + name + "]");
      doc.sections_.push_back({name, {}});
      current = &doc.sections_.back();
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail("line " + std::to_string(lineno) + ": expected key = value");
    if (current == nullptr)
      fail("line " + std::to_string(lineno) + ": key outside any section");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail("line " + std::to_string(lineno) + ": empty key");
    for (const auto& [k, v] : current->entries)
      if (k == key)
        fail("line " + std::to_string(lineno) + ": duplicate key " + current->name +
             "." + key);
    current->entries.emplace_back(key, value);
  }
  return doc;
}

ConfigDoc ConfigDoc::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ConfigDoc::serialize() const {
  std::ostringstream out;
  bool first = true;
  for (const Section& s : sections_) {
    if (!first) out << '\n';
    first = false;
    out << '[' << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
  }
  return out.str();
}

const ConfigDoc::Section* ConfigDoc::find(const std::string& section) const {
  for (const Section& s : sections_)
    if (s.name == section) return &s;
  return nullptr;
}

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
  const Section* s = find(section);
  if (!s) return false;
  for (const auto& [k, v] : s->entries)
    if (k == key) return true;
  return false;
}

const std::string& ConfigDoc::raw(const std::string& section,
                                  const std::string& key) const {
  const Section* s = find(section);
  if (s)
    for (const auto& [k, v] : s->entries)
      if (k == key) return v;
  fail("missing required key " + section + "." + key);
}

void ConfigDoc::set(const std::string& section, const std::string& key,
                    const std::string& value) {
  for (Section& s : sections_) {
    if (s.name != section) continue;
    for (auto& [k, v] : s.entries) {
      if (k == key) {
        v = value;
        return;
      }
    }
    s.entries.emplace_back(key, value);
    return;
  }
  sections_.push_back({section, {{key, value}}});
}

std::int64_t ConfigDoc::get_int(const std::string& section,
                                const std::string& key) const {
  const std::string& v = raw(section, key);
  char* end = nullptr;
  long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    fail(section + "." + key + ": expected integer, got '" + v + "'");
  return x;
}

std::int64_t ConfigDoc::get_int(const std::string& section,
                                const std::string& key,
                                std::int64_t fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

double ConfigDoc::get_double(const std::string& section,
                             const std::string& key) const {
  const std::string& v = raw(section, key);
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    fail(section + "." + key + ": expected number, got '" + v + "'");
  return x;
}

double ConfigDoc::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

bool ConfigDoc::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& v = raw(section, key);
  if (v == "true") return true;
  if (v == "false") return false;
  fail(section + "." + key + ": expected true/false, got '" + v + "'");
}

std::string ConfigDoc::get_string(const std::string& section,
                                  const std::string& key) const {
  return raw(section, key);
}

std::string ConfigDoc::get_string(const std::string& section,
                                  const std::string& key,
                                  const std::string& fallback) const {
  return has(section, key) ? raw(section, key) : fallback;
}

std::vector<std::string> ConfigDoc::get_list(const std::string& section,
                                             const std::string& key) const {
  const std::string& v = raw(section, key);
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) fail(section + "." + key + ": empty list");
  return out;
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"environment",
       {"type", "map", "slip_prob", "goal_reward", "step_reward", "discount",
        "reward_noise_std", "num_states", "num_actions", "reward_scale",
        "mdp_seed"}},
      {"agent",
       {"algorithm", "ensemble_size", "kappa", "operator", "learning_rate",
        "alpha", "poly_a", "poly_b", "poly_p", "init", "init_value", "init_low",
        "init_high", "exploration", "epsilon", "ucb_lambda",
        "target_sync_interval", "batch_size", "shared_minibatch", "sql_beta",
        "sql_beta_end", "sql_beta_updates"}},
      {"solver", {"beta_min", "beta_max", "max_iterations", "residual_tol"}},
      {"run",
       {"phase", "num_updates", "seeds", "record_interval", "probe_cells",
        "probe_states", "eval_rollouts", "eval_horizon", "replay_capacity",
        "episode_horizon", "output_dir", "dump_final_values",
        "record_median_beta"}},
  };
  return k;
}

void check_schema(const ConfigDoc& doc) {
  const auto& known = known_keys();
  for (const auto& section : doc.sections()) {
    auto it = known.find(section.name);
    if (it == known.end()) fail("unknown section [" + section.name + "]");
    for (const auto& [key, value] : section.entries)
      if (!it->second.count(key))
        fail("unknown key " + section.name + "." + key);
  }
}

std::pair<int, int> parse_cell(const std::string& token) {
  std::size_t colon = token.find(':');
  if (colon == std::string::npos)
    fail("run.probe_cells: expected row:col, got '" + token + "'");
  try {
    return {std::stoi(token.substr(0, colon)), std::stoi(token.substr(colon + 1))};
  } catch (const std::exception&) {
    fail("run.probe_cells: expected row:col, got '" + token + "'");
  }
}

}  // namespace

std::vector<std::string> schema_sections_with_key(const std::string& key) {
  std::vector<std::string> hits;
  for (const auto& [section, keys] : known_keys())
    if (keys.count(key)) hits.push_back(section);
  return hits;
}

RunConfig parse_run_config(const ConfigDoc& doc, const std::string& config_dir) {
  check_schema(doc);
  RunConfig cfg;

  std::string env_type = doc.get_string("environment", "type");
  if (env_type == "gridworld") {
    cfg.env.kind = EnvKind::gridworld;
  } else if (env_type == "random-mdp") {
    cfg.env.kind = EnvKind::random_mdp;
  } else {
    fail("environment.type: expected gridworld or random-mdp, got '" + env_type + "'");
  }
  cfg.env.discount = doc.get_double("environment", "discount", cfg.env.discount);
  cfg.env.reward_noise_std =
      doc.get_double("environment", "reward_noise_std", cfg.env.reward_noise_std);
  if (cfg.env.kind == EnvKind::gridworld) {
    cfg.env.map_ref = doc.get_string("environment", "map", "default");
    GridworldSpec spec = GridworldSpec::defaults();
    if (cfg.env.map_ref != "default") {
      std::string path = cfg.env.map_ref;
      if (!path.empty() && path.front() != '/' && !config_dir.empty())
        path = config_dir + "/" + path;
      spec.rows = load_map_file(path);
    }
    spec.slip_prob = doc.get_double("environment", "slip_prob", spec.slip_prob);
    spec.goal_reward = doc.get_double("environment", "goal_reward", spec.goal_reward);
    spec.step_reward = doc.get_double("environment", "step_reward", spec.step_reward);
    spec.discount = doc.get_double("environment", "discount", spec.discount);
    spec.reward_noise_std = cfg.env.reward_noise_std;
    cfg.env.grid = spec;
    cfg.env.discount = spec.discount;
  } else {
    cfg.env.rm_states = static_cast<int>(doc.get_int("environment", "num_states"));
    cfg.env.rm_actions = static_cast<int>(doc.get_int("environment", "num_actions"));
    cfg.env.rm_reward_scale =
        doc.get_double("environment", "reward_scale", cfg.env.rm_reward_scale);
    cfg.env.rm_seed = static_cast<std::uint64_t>(doc.get_int("environment", "mdp_seed", 0));
  }

  cfg.algorithm = doc.get_string("agent", "algorithm");
  if (cfg.algorithm != "uql") parse_baseline(cfg.algorithm);  // validates name

  AgentConfig& a = cfg.agent;
  a.ensemble_size = static_cast<int>(doc.get_int("agent", "ensemble_size", 5));
  a.kappa = doc.get_double("agent", "kappa", 1.0);
  a.reduce_op = parse_reduce_op(doc.get_string("agent", "operator", "mellowmax"));
  std::string lr_kind = doc.get_string("agent", "learning_rate", "constant");
  if (lr_kind == "constant") {
    a.learning_rate.kind = LearningRateKind::constant;
  } else if (lr_kind == "polynomial") {
    a.learning_rate.kind = LearningRateKind::polynomial;
  } else {
    fail("agent.learning_rate: expected constant or polynomial, got '" + lr_kind + "'");
  }
  a.learning_rate.alpha = doc.get_double("agent", "alpha", a.learning_rate.alpha);
  a.learning_rate.a = doc.get_double("agent", "poly_a", a.learning_rate.a);
  a.learning_rate.b = doc.get_double("agent", "poly_b", a.learning_rate.b);
  a.learning_rate.p = doc.get_double("agent", "poly_p", a.learning_rate.p);
  std::string init_kind = doc.get_string("agent", "init", "constant");
  if (init_kind == "constant") {
    a.init.kind = QInitKind::constant;
  } else if (init_kind == "random-uniform") {
    a.init.kind = QInitKind::random_uniform;
  } else {
    fail("agent.init: expected constant or random-uniform, got '" + init_kind + "'");
  }
  a.init.value = doc.get_double("agent", "init_value", a.init.value);
  a.init.low = doc.get_double("agent", "init_low", a.init.low);
  a.init.high = doc.get_double("agent", "init_high", a.init.high);
  std::string expl = doc.get_string("agent", "exploration", "epsilon-greedy");
  if (expl == "epsilon-greedy") {
    a.exploration.kind = ExplorationKind::epsilon_greedy;
  } else if (expl == "ucb") {
    a.exploration.kind = ExplorationKind::ucb;
  } else if (expl == "uniform") {
    a.exploration.kind = ExplorationKind::uniform;
  } else {
    fail("agent.exploration: expected epsilon-greedy, ucb, or uniform, got '" +
         expl + "'");
  }
  a.exploration.epsilon = doc.get_double("agent", "epsilon", a.exploration.epsilon);
  a.exploration.ucb_lambda =
      doc.get_double("agent", "ucb_lambda", a.exploration.ucb_lambda);
  a.target_sync_interval =
      static_cast<int>(doc.get_int("agent", "target_sync_interval", 1));
  a.batch_size = static_cast<int>(doc.get_int("agent", "batch_size", 32));
  a.shared_minibatch = doc.get_bool("agent", "shared_minibatch", false);

  a.solver.beta_min = doc.get_double("solver", "beta_min", a.solver.beta_min);
  a.solver.beta_max = doc.get_double("solver", "beta_max", a.solver.beta_max);
  a.solver.max_iterations =
      static_cast<int>(doc.get_int("solver", "max_iterations", a.solver.max_iterations));
  a.solver.residual_tol =
      doc.get_double("solver", "residual_tol", a.solver.residual_tol);

  BaselineConfig& b = cfg.baseline;
  if (cfg.algorithm != "uql") b.kind = parse_baseline(cfg.algorithm);
  b.num_tables = a.ensemble_size;
  b.learning_rate = a.learning_rate;
  b.init = a.init;
  b.exploration = a.exploration;
  b.sql_beta = doc.get_double("agent", "sql_beta", b.sql_beta);
  b.sql_beta_end = doc.get_double("agent", "sql_beta_end", b.sql_beta);
  b.sql_beta_updates = doc.get_int("agent", "sql_beta_updates", 0);
  b.batch_size = a.batch_size;
  b.shared_minibatch = a.shared_minibatch;

  RunSettings& r = cfg.run;
  std::string phase = doc.get_string("run", "phase");
  if (phase == "uniform") {
    r.phase = PhaseKind::uniform;
  } else if (phase == "online") {
    r.phase = PhaseKind::online;
  } else {
    fail("run.phase: expected uniform or online, got '" + phase + "'");
  }
  r.num_updates = doc.get_int("run", "num_updates");
  if (r.num_updates < 0) fail("run.num_updates: must be >= 0");
  for (const std::string& tok : doc.get_list("run", "seeds")) {
    char* end = nullptr;
    unsigned long long s = std::strtoull(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0')
      fail("run.seeds: expected integer, got '" + tok + "'");
    r.seeds.push_back(s);
  }
  r.record_interval =
      static_cast<int>(doc.get_int("run", "record_interval", r.record_interval));
  if (r.record_interval < 1) fail("run.record_interval: must be >= 1");
  if (doc.has("run", "probe_cells")) {
    if (cfg.env.kind != EnvKind::gridworld)
      fail("run.probe_cells: only valid for gridworld environments");
    for (const std::string& tok : doc.get_list("run", "probe_cells"))
      r.probe_cells.push_back(parse_cell(tok));
  }
  if (doc.has("run", "probe_states")) {
    for (const std::string& tok : doc.get_list("run", "probe_states")) {
      try {
        r.probe_states.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        fail("run.probe_states: expected integer, got '" + tok + "'");
      }
    }
  }
  r.eval_rollouts = static_cast<int>(doc.get_int("run", "eval_rollouts", 0));
  r.eval_horizon = static_cast<int>(doc.get_int("run", "eval_horizon", 400));
  r.replay_capacity = doc.get_int("run", "replay_capacity", r.replay_capacity);
  r.episode_horizon =
      static_cast<int>(doc.get_int("run", "episode_horizon", r.episode_horizon));
  r.output_dir = doc.get_string("run", "output_dir", "");
  r.dump_final_values = doc.get_bool("run", "dump_final_values", true);
  r.record_median_beta = doc.get_bool("run", "record_median_beta", true);
  return cfg;
}

BuiltEnvironment build_environment(const RunConfig& cfg) {
  BuiltEnvironment env;
  if (cfg.env.kind == EnvKind::gridworld) {
    Gridworld world = build_gridworld(cfg.env.grid);
    env.mdp = std::move(world.mdp);
    env.geom = std::move(world.geom);
    env.has_grid = true;
    std::vector<std::pair<int, int>> cells = cfg.run.probe_cells;
    if (cells.empty() && cfg.run.probe_states.empty()) {
      // Default probe: cell (0, 2) when walkable, else the first free cell.
      if (env.geom.cell_state.size() > 2 && env.geom.cell_state[2] >= 0 &&
          env.geom.cell_state[2] != env.geom.terminal_state)
        cells.emplace_back(0, 2);
      else
        cells.emplace_back(env.geom.state_cell[0].first,
                           env.geom.state_cell[0].second);
    }
    for (auto [r, c] : cells) {
      int s = env.geom.state_at(r, c);
      if (s == env.geom.terminal_state)
        throw std::invalid_argument("config: probe cell is the goal cell");
      env.probe_states.push_back(s);
      env.probe_labels.push_back(std::to_string(r) + "_" + std::to_string(c));
    }
    for (int s : cfg.run.probe_states) {
      if (s < 0 || s >= env.mdp.num_states)
        throw std::invalid_argument("config: probe state out of range");
      env.probe_states.push_back(s);
      env.probe_labels.push_back("s" + std::to_string(s));
    }
  } else {
    env.mdp = build_random_mdp(cfg.env.rm_states, cfg.env.rm_actions,
                               cfg.env.discount, cfg.env.rm_seed,
                               cfg.env.rm_reward_scale);
    env.mdp.reward_noise_std = cfg.env.reward_noise_std;
    std::vector<int> probes = cfg.run.probe_states;
    if (probes.empty()) probes.push_back(0);
    for (int s : probes) {
      if (s < 0 || s >= env.mdp.num_states)
        throw std::invalid_argument("config: probe state out of range");
      env.probe_states.push_back(s);
      env.probe_labels.push_back("s" + std::to_string(s));
    }
  }
  return env;
}

}  // namespace uql
