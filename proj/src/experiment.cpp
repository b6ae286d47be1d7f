#include "uql/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "uql/agent.hpp"
#include "uql/baselines.hpp"

namespace uql {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kSeedDerivation =
    "xoshiro256++ state seeded by splitmix64(seed xor "
    "0x9E3779B97F4A7C15 * (stream + 1))";

std::string file_stem(const std::string& path) {
  return fs::path(path).stem().string();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Metric rows of one record, in the fixed column order used everywhere.
std::vector<std::pair<std::string, double>> metric_rows(
    const RunRecord& rec, const std::vector<std::string>& probe_labels) {
  std::vector<std::pair<std::string, double>> rows;
  for (std::size_t i = 0; i < rec.probe_values.size(); ++i)
    rows.emplace_back("probe_value_" + probe_labels[i], rec.probe_values[i]);
  for (std::size_t i = 0; i < rec.probe_biases.size(); ++i)
    rows.emplace_back("probe_bias_" + probe_labels[i], rec.probe_biases[i]);
  rows.emplace_back("policy_agreement", rec.policy_agreement);
  rows.emplace_back("ensemble_spread", rec.ensemble_spread);
  if (rec.median_beta) rows.emplace_back("median_beta", *rec.median_beta);
  if (rec.greedy_return_mc)
    rows.emplace_back("greedy_return_mc", *rec.greedy_return_mc);
  return rows;
}

std::string seed_csv(std::uint64_t seed, const std::vector<RunRecord>& records,
                     const std::vector<std::string>& probe_labels) {
  std::ostringstream out;
  out << "seed,step,metric,value\n";
  for (const RunRecord& rec : records)
    for (const auto& [metric, value] : metric_rows(rec, probe_labels))
      out << seed << ',' << rec.step << ',' << metric << ','
          << format_double(value) << '\n';
  return out.str();
}

std::string final_values_csv(const BuiltEnvironment& env,
                             const GroundTruth& truth,
                             const std::vector<QTable>& tables) {
  std::ostringstream out;
  out << "state,row,col,action,q_mean,q_star\n";
  for (int s = 0; s < env.mdp.num_states; ++s) {
    int row = -1, col = -1;
    if (env.has_grid) {
      row = env.geom.state_cell[s].first;
      col = env.geom.state_cell[s].second;
    }
    std::vector<double> mean = mean_action_values(tables, s);
    for (int a = 0; a < env.mdp.num_actions; ++a)
      out << s << ',' << row << ',' << col << ',' << a << ','
          << format_double(mean[a]) << ',' << format_double(truth.q_star.at(s, a))
          << '\n';
  }
  return out.str();
}

std::string aggregate_csv(const std::vector<SeedOutcome>& outcomes,
                          const std::vector<std::vector<RunRecord>>& records,
                          const std::vector<std::string>& probe_labels) {
  std::vector<std::pair<long, std::string>> order;
  std::map<std::pair<long, std::string>, std::vector<double>> values;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].ok) continue;
    for (const RunRecord& rec : records[i]) {
      for (const auto& [metric, value] : metric_rows(rec, probe_labels)) {
        auto key = std::make_pair(rec.step, metric);
        auto [it, inserted] = values.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(value);
      }
    }
  }
  std::ostringstream out;
  out << "step,metric,mean,std,n\n";
  for (const auto& key : order) {
    const std::vector<double>& xs = values[key];
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    if (xs.size() > 1) {
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= static_cast<double>(xs.size() - 1);
    }
    out << key.first << ',' << key.second << ',' << format_double(mean) << ','
        << format_double(std::sqrt(var)) << ',' << xs.size() << '\n';
  }
  return out.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell_double(const std::string& cell, const std::string& path) {
  char* end = nullptr;
  double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0')
    throw std::invalid_argument(path + ": malformed numeric cell '" + cell + "'");
  return v;
}

long parse_cell_long(const std::string& cell, const std::string& path) {
  char* end = nullptr;
  long v = std::strtol(cell.c_str(), &end, 10);
  if (end == cell.c_str() || *end != '\0')
    throw std::invalid_argument(path + ": malformed integer cell '" + cell + "'");
  return v;
}

// Bare sweep keys resolve against the template document first, then the
// schema; either way the key must name exactly one section.
std::pair<std::string, std::string> resolve_sweep_param(const ConfigDoc& doc,
                                                        const std::string& param) {
  std::size_t dot = param.find('.');
  if (dot != std::string::npos)
    return {param.substr(0, dot), param.substr(dot + 1)};
  std::vector<std::string> hits;
  for (const auto& section : doc.sections())
    for (const auto& [key, value] : section.entries)
      if (key == param) hits.push_back(section.name);
  if (hits.empty()) hits = schema_sections_with_key(param);
  if (hits.empty())
    throw std::invalid_argument("sweep: unresolvable parameter '" + param + "'");
  if (hits.size() > 1)
    throw std::invalid_argument("sweep: parameter '" + param +
                                "' is ambiguous; qualify it as section." + param);
  return {hits[0], param};
}

std::string sanitize_component(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  return out;
}

// Env-only configs (oracle subcommand) get neutral agent/run sections so the
// shared parser can validate the environment fields.
RunConfig parse_env_or_run_config(ConfigDoc doc, const std::string& config_dir) {
  if (!doc.has("agent", "algorithm")) doc.set("agent", "algorithm", "uql");
  if (!doc.has("run", "phase")) doc.set("run", "phase", "uniform");
  if (!doc.has("run", "num_updates")) doc.set("run", "num_updates", "0");
  if (!doc.has("run", "seeds")) doc.set("run", "seeds", "0");
  return parse_run_config(doc, config_dir);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool ExperimentResult::all_ok() const {
  for (const SeedOutcome& s : seeds)
    if (!s.ok) return false;
  return true;
}

bool SweepResult::all_ok() const {
  for (const SweepOutcome& r : runs)
    if (!r.ok) return false;
  return true;
}

std::string resolve_output_dir(const RunConfig& cfg, const RunOptions& options,
                               const std::string& stem) {
  if (!options.output_dir.empty()) return options.output_dir;
  if (!cfg.run.output_dir.empty()) return cfg.run.output_dir;
  const char* root = std::getenv("UQL_OUTPUT_ROOT");
  if (root != nullptr && *root != '\0') return std::string(root) + "/" + stem;
  return "results/" + stem;
}

SeedRunOutput execute_seed(const RunConfig& cfg, const BuiltEnvironment& env,
                           const GroundTruth& truth, std::uint64_t seed) {
  Rng train_rng(seed, 0);
  Rng eval_rng(seed, 1);
  Rng init_rng(seed, 2);
  std::unique_ptr<Learner> learner;
  if (cfg.algorithm == "uql") {
    learner = std::make_unique<UqlAgent>(env.mdp.num_states, env.mdp.num_actions,
                                         cfg.agent, init_rng);
  } else {
    learner = std::make_unique<BaselineEnsemble>(
        env.mdp.num_states, env.mdp.num_actions, cfg.baseline, init_rng);
  }

  PhaseMetricsConfig metrics;
  metrics.truth = &truth;
  metrics.probe_states = env.probe_states;
  metrics.record_interval = cfg.run.record_interval;
  metrics.record_median_beta = cfg.run.record_median_beta;
  metrics.eval_rollouts = cfg.run.eval_rollouts;
  metrics.eval_horizon = cfg.run.eval_horizon;
  metrics.eval_rng = &eval_rng;

  SeedRunOutput out;
  if (cfg.run.phase == PhaseKind::uniform) {
    out.records = run_uniform_update_phase(env.mdp, *learner,
                                           cfg.run.num_updates, metrics,
                                           train_rng);
  } else {
    ReplayBuffer buffer(static_cast<std::size_t>(cfg.run.replay_capacity));
    out.records = run_online_phase(env.mdp, *learner, buffer,
                                   cfg.run.num_updates, cfg.run.episode_horizon,
                                   metrics, train_rng);
  }
  out.final_tables = learner->estimate_tables();
  return out;
}

ExperimentResult run_experiment(const RunConfig& cfg,
                                const std::string& output_dir,
                                const RunOptions& options) {
  if (cfg.run.seeds.empty())
    throw std::invalid_argument("config: run.seeds must be nonempty");
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s : cfg.run.seeds)
    seeds.push_back(s + static_cast<std::uint64_t>(options.seed_offset));
  {
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size())
      throw std::invalid_argument("config: run.seeds contains duplicates");
  }

  BuiltEnvironment env = build_environment(cfg);
  GroundTruth truth = value_iteration(env.mdp);

  fs::create_directories(output_dir);

  std::vector<SeedOutcome> outcomes(seeds.size());
  std::vector<std::vector<RunRecord>> all_records(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
      std::uint64_t seed = seeds[i];
      SeedOutcome& outcome = outcomes[i];
      outcome.seed = seed;
      try {
        SeedRunOutput out = execute_seed(cfg, env, truth, seed);
        std::string name = "seed_" + std::to_string(seed) + ".csv";
        write_text_file(output_dir + "/" + name,
                        seed_csv(seed, out.records, env.probe_labels));
        if (cfg.run.dump_final_values)
          write_text_file(
              output_dir + "/final_values_seed" + std::to_string(seed) + ".csv",
              final_values_csv(env, truth, out.final_tables));
        outcome.ok = true;
        outcome.result_file = name;
        all_records[i] = std::move(out.records);
      } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.error = e.what();
      }
    }
  };
  int jobs = std::max(1, std::min<int>(options.jobs,
                                       static_cast<int>(seeds.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  write_text_file(output_dir + "/aggregate.csv",
                  aggregate_csv(outcomes, all_records, env.probe_labels));

  json manifest;
  manifest["algorithm"] = cfg.algorithm;
  manifest["phase"] = cfg.run.phase == PhaseKind::uniform ? "uniform" : "online";
  manifest["num_updates"] = cfg.run.num_updates;
  manifest["record_interval"] = cfg.run.record_interval;
  manifest["seed_offset"] = options.seed_offset;
  manifest["aggregate_file"] = "aggregate.csv";
  manifest["rng"] = {{"generator", "xoshiro256++"},
                     {"seed_derivation", kSeedDerivation},
                     {"streams", {{"train", 0}, {"eval", 1}, {"init", 2}}}};
  json runs = json::array();
  for (const SeedOutcome& outcome : outcomes) {
    json entry;
    entry["seed"] = outcome.seed;
    entry["status"] = outcome.ok ? "ok" : "failed";
    if (outcome.ok)
      entry["result_file"] = outcome.result_file;
    else
      entry["error"] = outcome.error;
    runs.push_back(entry);
  }
  manifest["runs"] = runs;
  write_text_file(output_dir + "/manifest.json", manifest.dump(2) + "\n");

  ExperimentResult result;
  result.output_dir = output_dir;
  result.seeds = std::move(outcomes);
  return result;
}

ExperimentResult run_experiment_file(const std::string& config_path,
                                     const RunOptions& options) {
  ConfigDoc doc = ConfigDoc::load(config_path);
  RunConfig cfg = parse_run_config(doc, fs::path(config_path).parent_path().string());
  std::string out_dir = resolve_output_dir(cfg, options, file_stem(config_path));
  fs::create_directories(out_dir);
  write_text_file(out_dir + "/config.cfg", doc.serialize());
  return run_experiment(cfg, out_dir, options);
}

SweepResult run_sweep_file(const std::string& config_path,
                           const std::string& param,
                           const std::vector<std::string>& values,
                           const RunOptions& options) {
  if (values.empty()) throw std::invalid_argument("sweep: empty value list");
  ConfigDoc doc = ConfigDoc::load(config_path);
  auto [section, key] = resolve_sweep_param(doc, param);
  std::string config_dir = fs::path(config_path).parent_path().string();

  // Validate every expansion before running any of them.
  std::vector<RunConfig> configs;
  for (const std::string& value : values) {
    ConfigDoc expanded = doc;
    expanded.set(section, key, value);
    configs.push_back(parse_run_config(expanded, config_dir));
  }

  RunConfig base = parse_run_config(doc, config_dir);
  std::string sweep_dir =
      resolve_output_dir(base, options, file_stem(config_path) + "_sweep");
  fs::create_directories(sweep_dir);

  SweepResult result;
  result.output_dir = sweep_dir;
  result.param = section + "." + key;

  RunOptions run_options = options;
  for (std::size_t i = 0; i < values.size(); ++i) {
    SweepOutcome outcome;
    outcome.value = values[i];
    outcome.dir = key + "=" + sanitize_component(values[i]);
    configs[i].run.output_dir.clear();  // sweep root owns the layout
    run_options.output_dir = sweep_dir + "/" + outcome.dir;
    ExperimentResult run =
        run_experiment(configs[i], run_options.output_dir, run_options);
    outcome.ok = run.all_ok();
    result.runs.push_back(outcome);
  }

  std::ostringstream summary;
  summary << "param,value,step,metric,mean,std,n\n";
  for (const SweepOutcome& outcome : result.runs) {
    std::string aggregate_path = sweep_dir + "/" + outcome.dir + "/aggregate.csv";
    for (const AggregateRow& row : read_aggregate_csv(aggregate_path))
      summary << result.param << ',' << outcome.value << ',' << row.step << ','
              << row.metric << ',' << format_double(row.mean) << ','
              << format_double(row.std_dev) << ',' << row.n << '\n';
  }
  write_text_file(sweep_dir + "/sweep_summary.csv", summary.str());

  json manifest;
  manifest["param"] = result.param;
  manifest["summary_file"] = "sweep_summary.csv";
  json runs = json::array();
  for (const SweepOutcome& outcome : result.runs)
    runs.push_back({{"value", outcome.value},
                    {"dir", outcome.dir},
                    {"status", outcome.ok ? "ok" : "failed"}});
  manifest["runs"] = runs;
  write_text_file(sweep_dir + "/sweep_manifest.json", manifest.dump(2) + "\n");
  return result;
}

std::string dump_oracle_file(const std::string& config_path,
                             const RunOptions& options) {
  ConfigDoc doc = ConfigDoc::load(config_path);
  RunConfig cfg =
      parse_env_or_run_config(doc, fs::path(config_path).parent_path().string());
  BuiltEnvironment env = build_environment(cfg);
  GroundTruth truth = value_iteration(env.mdp);

  std::string out_dir = resolve_output_dir(cfg, options, file_stem(config_path));
  fs::create_directories(out_dir);

  auto cell_of = [&](int s) -> std::pair<int, int> {
    if (env.has_grid) return env.geom.state_cell[s];
    return {-1, -1};
  };

  std::ostringstream q_out;
  q_out << "state,row,col,action,value\n";
  for (int s = 0; s < env.mdp.num_states; ++s) {
    auto [row, col] = cell_of(s);
    for (int a = 0; a < env.mdp.num_actions; ++a)
      q_out << s << ',' << row << ',' << col << ',' << a << ','
            << format_double(truth.q_star.at(s, a)) << '\n';
  }
  write_text_file(out_dir + "/q_star.csv", q_out.str());

  std::ostringstream v_out;
  v_out << "state,row,col,value\n";
  for (int s = 0; s < env.mdp.num_states; ++s) {
    auto [row, col] = cell_of(s);
    v_out << s << ',' << row << ',' << col << ','
          << format_double(truth.v_star[s]) << '\n';
  }
  write_text_file(out_dir + "/v_star.csv", v_out.str());

  std::ostringstream pi_out;
  pi_out << "state,row,col,actions\n";
  for (int s = 0; s < env.mdp.num_states; ++s) {
    auto [row, col] = cell_of(s);
    pi_out << s << ',' << row << ',' << col << ',';
    for (std::size_t i = 0; i < truth.pi_star[s].size(); ++i) {
      if (i > 0) pi_out << ';';
      pi_out << truth.pi_star[s][i];
    }
    pi_out << '\n';
  }
  write_text_file(out_dir + "/pi_star.csv", pi_out.str());
  return out_dir;
}

std::vector<ResultRow> read_result_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "seed,step,metric,value")
    throw std::invalid_argument(path + ": expected header seed,step,metric,value");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != 4)
      throw std::invalid_argument(path + ": malformed row '" + line + "'");
    ResultRow row;
    row.seed = static_cast<std::uint64_t>(
        std::strtoull(cells[0].c_str(), nullptr, 10));
    row.step = parse_cell_long(cells[1], path);
    row.metric = cells[2];
    row.value = parse_cell_double(cells[3], path);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "step,metric,mean,std,n")
    throw std::invalid_argument(path + ": expected header step,metric,mean,std,n");
  std::vector<AggregateRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != 5)
      throw std::invalid_argument(path + ": malformed row '" + line + "'");
    AggregateRow row;
    row.step = parse_cell_long(cells[0], path);
    row.metric = cells[1];
    row.mean = parse_cell_double(cells[2], path);
    row.std_dev = parse_cell_double(cells[3], path);
    row.n = parse_cell_long(cells[4], path);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace uql
