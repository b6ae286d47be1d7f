// End-to-end tests for experiment orchestration: per-seed result files,
// aggregation, manifests, sweeps, oracle dumps, output-dir resolution, and
// the CSV readers.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "uql/config.hpp"
#include "uql/experiment.hpp"
#include "uql/metrics.hpp"
#include "uql/oracle.hpp"

namespace fs = std::filesystem;
using namespace uql;

namespace {

// Fresh scratch directory per use so reruns never see stale files.
std::string fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "uql_experiment_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(bool(in), "missing file: " << path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(bool(out));
  out << content;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream in(slurp(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

// Small dense-MDP experiment that runs in milliseconds.
const char* kFastRunConfig = R"(
[environment]
type = random-mdp
num_states = 5
num_actions = 3
reward_scale = 0.5
mdp_seed = 7
discount = 0.8

[agent]
algorithm = uql
ensemble_size = 3
kappa = 1
learning_rate = constant
alpha = 0.2
init = random-uniform
init_low = 0
init_high = 1

[run]
phase = uniform
num_updates = 400
seeds = 0,1,2
record_interval = 100
probe_states = 0
)";

RunConfig fast_config() {
  return parse_run_config(ConfigDoc::parse(kFastRunConfig), ".");
}

// The five metrics every record of the fast config produces, in file order.
const std::vector<std::string> kFastMetrics = {
    "probe_value_s0", "probe_bias_s0", "policy_agreement", "ensemble_spread",
    "median_beta"};

struct EnvVarGuard {
  std::string name;
  std::string old_value;
  bool had = false;
  explicit EnvVarGuard(const char* n) : name(n) {
    if (const char* v = std::getenv(n)) {
      had = true;
      old_value = v;
    }
  }
  ~EnvVarGuard() {
    if (had)
      ::setenv(name.c_str(), old_value.c_str(), 1);
    else
      ::unsetenv(name.c_str());
  }
};

}  // namespace

TEST_CASE("zero-update run writes header-only result files") {
  RunConfig cfg = fast_config();
  cfg.run.num_updates = 0;
  std::string dir = fresh_dir("zero_updates");
  ExperimentResult result = run_experiment(cfg, dir, RunOptions{});

  CHECK(result.all_ok());
  CHECK(result.output_dir == dir);
  REQUIRE(result.seeds.size() == 3);
  for (std::uint64_t s : {0, 1, 2}) {
    std::string csv = slurp(dir + "/seed_" + std::to_string(s) + ".csv");
    CHECK(csv == "seed,step,metric,value\n");
  }
  CHECK(slurp(dir + "/aggregate.csv") == "step,metric,mean,std,n\n");

  // Final tables are still dumped: one row per (state, action) plus header.
  std::vector<std::string> lines = read_lines(dir + "/final_values_seed0.csv");
  REQUIRE(lines.size() == 1 + 5 * 3);
  CHECK(lines[0] == "state,row,col,action,q_mean,q_star");
  // Non-grid environments report row = col = -1.
  std::vector<std::string> cells = split_cells(lines[1]);
  REQUIRE(cells.size() == 6);
  CHECK(cells[0] == "0");
  CHECK(cells[1] == "-1");
  CHECK(cells[2] == "-1");
  CHECK(cells[3] == "0");

  nlohmann::json manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
  CHECK(manifest["algorithm"] == "uql");
  CHECK(manifest["phase"] == "uniform");
  CHECK(manifest["num_updates"] == 0);
  CHECK(manifest["record_interval"] == 100);
  CHECK(manifest["seed_offset"] == 0);
  CHECK(manifest["aggregate_file"] == "aggregate.csv");
  CHECK(manifest["rng"]["generator"] == "xoshiro256++");
  std::string derivation = manifest["rng"]["seed_derivation"].get<std::string>();
  CHECK(derivation.find("splitmix64") != std::string::npos);
  CHECK(manifest["rng"]["streams"]["train"] == 0);
  CHECK(manifest["rng"]["streams"]["eval"] == 1);
  CHECK(manifest["rng"]["streams"]["init"] == 2);
  REQUIRE(manifest["runs"].size() == 3);
  CHECK(manifest["runs"][0]["seed"] == 0);
  CHECK(manifest["runs"][0]["status"] == "ok");
  CHECK(manifest["runs"][0]["result_file"] == "seed_0.csv");
}

TEST_CASE("reruns of the same config are byte-identical") {
  RunConfig cfg = fast_config();
  std::string a = fresh_dir("rerun_a");
  std::string b = fresh_dir("rerun_b");
  REQUIRE(run_experiment(cfg, a, RunOptions{}).all_ok());
  REQUIRE(run_experiment(cfg, b, RunOptions{}).all_ok());
  for (const char* name :
       {"seed_0.csv", "seed_1.csv", "seed_2.csv", "aggregate.csv",
        "manifest.json", "final_values_seed0.csv", "final_values_seed2.csv"}) {
    CAPTURE(name);
    CHECK(slurp(a + "/" + name) == slurp(b + "/" + name));
  }
}

TEST_CASE("aggregate rows recompute exactly from the per-seed files") {
  RunConfig cfg = fast_config();
  std::string dir = fresh_dir("aggregate_check");
  REQUIRE(run_experiment(cfg, dir, RunOptions{}).all_ok());

  std::map<std::pair<long, std::string>, std::vector<double>> grouped;
  for (std::uint64_t s : {0, 1, 2}) {
    std::vector<ResultRow> rows =
        read_result_csv(dir + "/seed_" + std::to_string(s) + ".csv");
    CHECK(rows.size() == 4 * kFastMetrics.size());  // 4 records x 5 metrics
    for (const ResultRow& row : rows) {
      CHECK(row.seed == s);
      grouped[{row.step, row.metric}].push_back(row.value);
    }
  }

  std::vector<AggregateRow> agg = read_aggregate_csv(dir + "/aggregate.csv");
  REQUIRE(agg.size() == grouped.size());
  CHECK(agg.front().step == 100);
  CHECK(agg.back().step == 400);
  for (const AggregateRow& row : agg) {
    CAPTURE(row.step);
    CAPTURE(row.metric);
    auto it = grouped.find({row.step, row.metric});
    REQUIRE(it != grouped.end());
    const std::vector<double>& xs = it->second;
    REQUIRE(row.n == static_cast<long>(xs.size()));
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    double scale = std::max(1.0, std::abs(mean));
    CHECK(std::abs(row.mean - mean) <= 1e-12 * scale);
    CHECK(std::abs(row.std_dev - std::sqrt(var)) <= 1e-12 * scale);
  }
}

TEST_CASE("result rows mirror the in-memory records of the same seed") {
  RunConfig cfg = fast_config();
  std::string dir = fresh_dir("records_vs_csv");
  REQUIRE(run_experiment(cfg, dir, RunOptions{}).all_ok());

  BuiltEnvironment env = build_environment(cfg);
  GroundTruth truth = value_iteration(env.mdp);
  SeedRunOutput out = execute_seed(cfg, env, truth, 0);
  REQUIRE(out.records.size() == 4);

  std::vector<ResultRow> rows = read_result_csv(dir + "/seed_0.csv");
  REQUIRE(rows.size() == out.records.size() * kFastMetrics.size());
  std::size_t r = 0;
  for (const RunRecord& rec : out.records) {
    std::vector<double> expected = {rec.probe_values.at(0),
                                    rec.probe_biases.at(0),
                                    rec.policy_agreement, rec.ensemble_spread,
                                    rec.median_beta.value()};
    CHECK_FALSE(rec.greedy_return_mc.has_value());  // eval_rollouts = 0
    for (std::size_t m = 0; m < kFastMetrics.size(); ++m, ++r) {
      CAPTURE(rec.step);
      CAPTURE(kFastMetrics[m]);
      CHECK(rows[r].seed == 0);
      CHECK(rows[r].step == rec.step);
      CHECK(rows[r].metric == kFastMetrics[m]);
      // %.17g output parses back to the exact double.
      CHECK(rows[r].value == expected[m]);
    }
  }

  // Final-values dump mirrors the in-memory final tables and ground truth.
  std::vector<std::string> lines = read_lines(dir + "/final_values_seed0.csv");
  REQUIRE(lines.size() == 1 + 5 * 3);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> cells = split_cells(lines[i]);
    REQUIRE(cells.size() == 6);
    int s = std::stoi(cells[0]);
    int a = std::stoi(cells[3]);
    std::vector<double> mean = mean_action_values(out.final_tables, s);
    CHECK(std::strtod(cells[4].c_str(), nullptr) == mean[a]);
    CHECK(std::strtod(cells[5].c_str(), nullptr) == truth.q_star.at(s, a));
  }
}

TEST_CASE("failed seeds are isolated and reported in the manifest") {
  // A gigantic reward-noise scale overflows some sampled rewards to infinity,
  // which the run detects (non-finite solver input or metric) and reports as
  // a per-seed failure without touching the other seeds.
  std::string text = kFastRunConfig;
  ConfigDoc doc = ConfigDoc::parse(text);
  doc.set("environment", "reward_noise_std", "1e308");
  doc.set("run", "num_updates", "10");
  doc.set("run", "seeds",
          "0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19");
  doc.set("run", "dump_final_values", "false");
  RunConfig cfg = parse_run_config(doc, ".");

  std::string dir = fresh_dir("mixed_outcomes");
  ExperimentResult result = run_experiment(cfg, dir, RunOptions{});
  REQUIRE(result.seeds.size() == 20);

  std::vector<std::uint64_t> ok_seeds;
  std::vector<std::uint64_t> failed_seeds;
  for (const SeedOutcome& outcome : result.seeds) {
    if (outcome.ok)
      ok_seeds.push_back(outcome.seed);
    else
      failed_seeds.push_back(outcome.seed);
  }
  // Both outcomes must actually occur for this test to mean anything.
  REQUIRE(ok_seeds.size() >= 3);
  REQUIRE(failed_seeds.size() >= 3);
  CHECK_FALSE(result.all_ok());

  nlohmann::json manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
  REQUIRE(manifest["runs"].size() == 20);
  for (std::size_t i = 0; i < 20; ++i) {
    const nlohmann::json& entry = manifest["runs"][i];
    const SeedOutcome& outcome = result.seeds[i];
    CHECK(entry["seed"] == outcome.seed);
    std::string file = dir + "/seed_" + std::to_string(outcome.seed) + ".csv";
    if (outcome.ok) {
      CHECK(entry["status"] == "ok");
      CHECK(entry["result_file"] ==
            "seed_" + std::to_string(outcome.seed) + ".csv");
      CHECK_FALSE(entry.contains("error"));
      CHECK(fs::exists(file));
    } else {
      CHECK(entry["status"] == "failed");
      CHECK(entry.contains("error"));
      CHECK_FALSE(entry["error"].get<std::string>().empty());
      CHECK_FALSE(entry.contains("result_file"));
      CHECK_FALSE(fs::exists(file));
    }
  }

  // The aggregate only pools surviving seeds.
  std::vector<AggregateRow> agg = read_aggregate_csv(dir + "/aggregate.csv");
  CHECK(agg.size() == kFastMetrics.size());
  for (const AggregateRow& row : agg) {
    CHECK(row.step == 10);
    CHECK(row.n == static_cast<long>(ok_seeds.size()));
  }

  // A surviving seed's file is byte-identical to running that seed alone.
  RunConfig solo = cfg;
  solo.run.seeds = {ok_seeds.front()};
  std::string solo_dir = fresh_dir("mixed_outcomes_solo");
  REQUIRE(run_experiment(solo, solo_dir, RunOptions{}).all_ok());
  std::string name = "seed_" + std::to_string(ok_seeds.front()) + ".csv";
  CHECK(slurp(dir + "/" + name) == slurp(solo_dir + "/" + name));
}

TEST_CASE("seed offset shifts which seeds run, not what they produce") {
  RunConfig cfg = fast_config();
  cfg.run.seeds = {0, 1};
  RunOptions offset_options;
  offset_options.seed_offset = 5;
  std::string a = fresh_dir("offset_a");
  ExperimentResult ra = run_experiment(cfg, a, offset_options);
  REQUIRE(ra.all_ok());
  CHECK(ra.seeds[0].seed == 5);
  CHECK(ra.seeds[1].seed == 6);

  RunConfig direct = fast_config();
  direct.run.seeds = {5, 6};
  std::string b = fresh_dir("offset_b");
  REQUIRE(run_experiment(direct, b, RunOptions{}).all_ok());

  for (const char* name : {"seed_5.csv", "seed_6.csv", "aggregate.csv"}) {
    CAPTURE(name);
    CHECK(slurp(a + "/" + name) == slurp(b + "/" + name));
  }
  nlohmann::json ma = nlohmann::json::parse(slurp(a + "/manifest.json"));
  nlohmann::json mb = nlohmann::json::parse(slurp(b + "/manifest.json"));
  CHECK(ma["seed_offset"] == 5);
  CHECK(mb["seed_offset"] == 0);
  CHECK(ma["runs"] == mb["runs"]);
}

TEST_CASE("parallel seed execution matches serial output byte for byte") {
  RunConfig cfg = fast_config();
  RunOptions serial;
  serial.jobs = 1;
  RunOptions parallel;
  parallel.jobs = 3;
  std::string a = fresh_dir("jobs_serial");
  std::string b = fresh_dir("jobs_parallel");
  REQUIRE(run_experiment(cfg, a, serial).all_ok());
  REQUIRE(run_experiment(cfg, b, parallel).all_ok());
  for (const char* name : {"seed_0.csv", "seed_1.csv", "seed_2.csv",
                           "aggregate.csv", "manifest.json"}) {
    CAPTURE(name);
    CHECK(slurp(a + "/" + name) == slurp(b + "/" + name));
  }
}

TEST_CASE("run_experiment validates the seed list") {
  RunConfig cfg = fast_config();
  std::string dir = fresh_dir("bad_seeds");
  SUBCASE("empty") {
    cfg.run.seeds.clear();
    CHECK_THROWS_WITH_AS(run_experiment(cfg, dir, RunOptions{}),
                         doctest::Contains("run.seeds must be nonempty"),
                         std::invalid_argument);
  }
  SUBCASE("duplicates") {
    cfg.run.seeds = {3, 3};
    CHECK_THROWS_WITH_AS(run_experiment(cfg, dir, RunOptions{}),
                         doctest::Contains("duplicates"),
                         std::invalid_argument);
  }
}

TEST_CASE("run_experiment_file copies the config next to the results") {
  std::string conf_dir = fresh_dir("file_run_conf");
  std::string config_path = conf_dir + "/fast_run.cfg";
  spit(config_path, kFastRunConfig);

  std::string out_dir = fresh_dir("file_run_out");
  RunOptions options;
  options.output_dir = out_dir;
  ExperimentResult result = run_experiment_file(config_path, options);
  CHECK(result.all_ok());
  CHECK(result.output_dir == out_dir);
  CHECK(fs::exists(out_dir + "/seed_0.csv"));
  CHECK(fs::exists(out_dir + "/aggregate.csv"));

  // The copy parses back to the identical document.
  ConfigDoc original = ConfigDoc::load(config_path);
  ConfigDoc copy = ConfigDoc::load(out_dir + "/config.cfg");
  CHECK(copy == original);
}

TEST_CASE("single-value sweep reproduces a plain run of the same config") {
  std::string conf_dir = fresh_dir("sweep_conf");
  std::string config_path = conf_dir + "/fast_run.cfg";
  spit(config_path, kFastRunConfig);

  std::string sweep_dir = fresh_dir("sweep_single");
  RunOptions options;
  options.output_dir = sweep_dir;
  SweepResult sweep = run_sweep_file(config_path, "kappa", {"1"}, options);
  CHECK(sweep.all_ok());
  CHECK(sweep.param == "agent.kappa");  // bare key resolved via the document
  REQUIRE(sweep.runs.size() == 1);
  CHECK(sweep.runs[0].value == "1");
  CHECK(sweep.runs[0].dir == "kappa=1");

  std::string run_dir = fresh_dir("sweep_single_direct");
  REQUIRE(run_experiment(fast_config(), run_dir, RunOptions{}).all_ok());
  for (const char* name : {"seed_0.csv", "seed_1.csv", "seed_2.csv",
                           "aggregate.csv"}) {
    CAPTURE(name);
    CHECK(slurp(sweep_dir + "/kappa=1/" + name) == slurp(run_dir + "/" + name));
  }

  // The summary is the sub-run aggregate prefixed with param and value.
  std::ostringstream expected;
  expected << "param,value,step,metric,mean,std,n\n";
  for (const AggregateRow& row :
       read_aggregate_csv(sweep_dir + "/kappa=1/aggregate.csv"))
    expected << "agent.kappa,1," << row.step << ',' << row.metric << ','
             << format_double(row.mean) << ',' << format_double(row.std_dev)
             << ',' << row.n << '\n';
  CHECK(slurp(sweep_dir + "/sweep_summary.csv") == expected.str());

  nlohmann::json manifest =
      nlohmann::json::parse(slurp(sweep_dir + "/sweep_manifest.json"));
  CHECK(manifest["param"] == "agent.kappa");
  CHECK(manifest["summary_file"] == "sweep_summary.csv");
  REQUIRE(manifest["runs"].size() == 1);
  CHECK(manifest["runs"][0]["value"] == "1");
  CHECK(manifest["runs"][0]["dir"] == "kappa=1");
  CHECK(manifest["runs"][0]["status"] == "ok");
}

TEST_CASE("sweep directory names sanitize path separators in values") {
  // Sweeping the map over an absolute path exercises both the schema-level
  // resolution of a key absent from the document and value sanitization.
  std::string conf_dir = fresh_dir("sweep_map_conf");
  std::string config_path = conf_dir + "/grid.cfg";
  spit(config_path, R"(
[environment]
type = gridworld
discount = 0.9

[agent]
algorithm = uql
ensemble_size = 2
kappa = 1
learning_rate = constant
alpha = 0.1

[run]
phase = uniform
num_updates = 0
seeds = 0
record_interval = 50
dump_final_values = false
)");

  std::string map_path =
      std::string(UQL_SOURCE_DIR) + "/configs/maps/default_8x8.map";
  std::string sanitized = map_path;
  for (char& c : sanitized)
    if (c == '/') c = '_';

  std::string sweep_dir = fresh_dir("sweep_map");
  RunOptions options;
  options.output_dir = sweep_dir;
  SweepResult sweep = run_sweep_file(config_path, "map", {map_path}, options);
  CHECK(sweep.all_ok());
  CHECK(sweep.param == "environment.map");
  REQUIRE(sweep.runs.size() == 1);
  CHECK(sweep.runs[0].dir == "map=" + sanitized);
  CHECK(fs::exists(sweep_dir + "/map=" + sanitized + "/seed_0.csv"));
  // Zero updates: the summary holds nothing but its header.
  CHECK(slurp(sweep_dir + "/sweep_summary.csv") ==
        "param,value,step,metric,mean,std,n\n");
}

TEST_CASE("sweep parameters resolve through the schema when absent") {
  std::string conf_dir = fresh_dir("sweep_schema_conf");
  std::string config_path = conf_dir + "/fast_run.cfg";
  ConfigDoc doc = ConfigDoc::parse(kFastRunConfig);
  doc.set("run", "num_updates", "0");
  doc.set("run", "seeds", "0");
  doc.set("run", "dump_final_values", "false");
  spit(config_path, doc.serialize());

  std::string sweep_dir = fresh_dir("sweep_schema");
  RunOptions options;
  options.output_dir = sweep_dir;
  // beta_max appears nowhere in the document, only in the schema.
  SweepResult sweep =
      run_sweep_file(config_path, "beta_max", {"1000000"}, options);
  CHECK(sweep.all_ok());
  CHECK(sweep.param == "solver.beta_max");
  REQUIRE(sweep.runs.size() == 1);
  CHECK(sweep.runs[0].dir == "beta_max=1000000");
}

TEST_CASE("sweep rejects bad parameters before running anything") {
  std::string conf_dir = fresh_dir("sweep_errors_conf");
  std::string config_path = conf_dir + "/fast_run.cfg";
  spit(config_path, kFastRunConfig);
  std::string never_dir =
      (fs::path(conf_dir) / "never_created").string();
  RunOptions options;
  options.output_dir = never_dir;

  SUBCASE("empty value list") {
    CHECK_THROWS_WITH_AS(run_sweep_file(config_path, "kappa", {}, options),
                         doctest::Contains("empty value list"),
                         std::invalid_argument);
  }
  SUBCASE("unresolvable bare key") {
    CHECK_THROWS_WITH_AS(
        run_sweep_file(config_path, "bogus_knob", {"1"}, options),
        doctest::Contains("unresolvable parameter 'bogus_knob'"),
        std::invalid_argument);
  }
  SUBCASE("ambiguous bare key") {
    ConfigDoc doc = ConfigDoc::parse(kFastRunConfig);
    doc.set("agent", "shared_knob", "1");
    doc.set("run", "shared_knob", "1");
    std::string ambiguous_path = conf_dir + "/ambiguous.cfg";
    spit(ambiguous_path, doc.serialize());
    CHECK_THROWS_WITH_AS(
        run_sweep_file(ambiguous_path, "shared_knob", {"1"}, options),
        doctest::Contains("ambiguous"), std::invalid_argument);
  }
  SUBCASE("qualified key unknown to the schema") {
    CHECK_THROWS_WITH_AS(
        run_sweep_file(config_path, "agent.bogus", {"1"}, options),
        doctest::Contains("unknown key agent.bogus"), std::invalid_argument);
  }
  SUBCASE("invalid expansion value fails validation up front") {
    // The first value is fine; the second fails config validation, and no
    // run output appears for either.
    CHECK_THROWS_AS(run_sweep_file(config_path, "num_updates", {"400", "-5"},
                                   options),
                    std::invalid_argument);
  }
  // Every rejection fires before any output directory is created.
  CHECK_FALSE(fs::exists(never_dir));
}

TEST_CASE("oracle dump matches direct value iteration") {
  std::string conf_dir = fresh_dir("oracle_conf");
  std::string config_path = conf_dir + "/grid_env.cfg";
  spit(config_path, "[environment]\ntype = gridworld\ndiscount = 0.9\n");

  std::string dir = fresh_dir("oracle_out");
  RunOptions options;
  options.output_dir = dir;
  std::string reported = dump_oracle_file(config_path, options);
  CHECK(reported == dir);

  // Reference solution built the same way the dump builds it.
  ConfigDoc doc = ConfigDoc::load(config_path);
  doc.set("agent", "algorithm", "uql");
  doc.set("run", "phase", "uniform");
  doc.set("run", "num_updates", "0");
  doc.set("run", "seeds", "0");
  RunConfig cfg = parse_run_config(doc, conf_dir);
  BuiltEnvironment env = build_environment(cfg);
  GroundTruth truth = value_iteration(env.mdp);
  REQUIRE(env.mdp.num_states == 52);
  REQUIRE(env.has_grid);

  std::vector<std::string> q_lines = read_lines(dir + "/q_star.csv");
  REQUIRE(q_lines.size() == 1 + 52 * 8);
  CHECK(q_lines[0] == "state,row,col,action,value");
  for (std::size_t i = 1; i < q_lines.size(); ++i) {
    std::vector<std::string> cells = split_cells(q_lines[i]);
    REQUIRE(cells.size() == 5);
    int s = std::stoi(cells[0]);
    int a = std::stoi(cells[3]);
    CHECK(std::stoi(cells[1]) == env.geom.state_cell[s].first);
    CHECK(std::stoi(cells[2]) == env.geom.state_cell[s].second);
    CHECK(std::strtod(cells[4].c_str(), nullptr) == truth.q_star.at(s, a));
  }

  std::vector<std::string> v_lines = read_lines(dir + "/v_star.csv");
  REQUIRE(v_lines.size() == 1 + 52);
  CHECK(v_lines[0] == "state,row,col,value");
  for (std::size_t i = 1; i < v_lines.size(); ++i) {
    std::vector<std::string> cells = split_cells(v_lines[i]);
    REQUIRE(cells.size() == 4);
    int s = std::stoi(cells[0]);
    CHECK(std::strtod(cells[3].c_str(), nullptr) == truth.v_star[s]);
  }
  // Terminal goal state has zero continuation value.
  CHECK(split_cells(v_lines[1 + 51])[3] == "0");

  std::vector<std::string> pi_lines = read_lines(dir + "/pi_star.csv");
  REQUIRE(pi_lines.size() == 1 + 52);
  CHECK(pi_lines[0] == "state,row,col,actions");
  for (std::size_t i = 1; i < pi_lines.size(); ++i) {
    int s = static_cast<int>(i) - 1;
    std::ostringstream expected;
    expected << s << ',' << env.geom.state_cell[s].first << ','
             << env.geom.state_cell[s].second << ',';
    for (std::size_t k = 0; k < truth.pi_star[s].size(); ++k) {
      if (k > 0) expected << ';';
      expected << truth.pi_star[s][k];
    }
    CHECK(pi_lines[i] == expected.str());
  }
}

TEST_CASE("output directory resolution honors the documented precedence") {
  EnvVarGuard guard("UQL_OUTPUT_ROOT");
  RunConfig cfg = fast_config();
  RunOptions options;

  ::setenv("UQL_OUTPUT_ROOT", "/tmp/uql_env_root", 1);
  cfg.run.output_dir = "from_config";
  options.output_dir = "from_flag";
  CHECK(resolve_output_dir(cfg, options, "stem") == "from_flag");

  options.output_dir.clear();
  CHECK(resolve_output_dir(cfg, options, "stem") == "from_config");

  cfg.run.output_dir.clear();
  CHECK(resolve_output_dir(cfg, options, "stem") == "/tmp/uql_env_root/stem");

  ::unsetenv("UQL_OUTPUT_ROOT");
  CHECK(resolve_output_dir(cfg, options, "stem") == "results/stem");
}

TEST_CASE("result csv readers reject malformed files") {
  std::string dir = fresh_dir("csv_errors");

  CHECK_THROWS_WITH_AS(read_result_csv(dir + "/absent.csv"),
                       doctest::Contains("cannot open"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(read_aggregate_csv(dir + "/absent.csv"),
                       doctest::Contains("cannot open"), std::invalid_argument);

  std::string bad_header = dir + "/bad_header.csv";
  spit(bad_header, "seed,step,metric\n0,1,x\n");
  CHECK_THROWS_WITH_AS(read_result_csv(bad_header),
                       doctest::Contains("expected header seed,step,metric,value"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(read_aggregate_csv(bad_header),
                       doctest::Contains("expected header step,metric,mean,std,n"),
                       std::invalid_argument);

  std::string short_row = dir + "/short_row.csv";
  spit(short_row, "seed,step,metric,value\n0,10,x\n");
  CHECK_THROWS_WITH_AS(read_result_csv(short_row),
                       doctest::Contains("malformed row"),
                       std::invalid_argument);

  std::string bad_step = dir + "/bad_step.csv";
  spit(bad_step, "seed,step,metric,value\n0,ten,x,1.0\n");
  CHECK_THROWS_WITH_AS(read_result_csv(bad_step),
                       doctest::Contains("malformed integer cell"),
                       std::invalid_argument);

  std::string bad_value = dir + "/bad_value.csv";
  spit(bad_value, "seed,step,metric,value\n0,10,x,abc\n");
  CHECK_THROWS_WITH_AS(read_result_csv(bad_value),
                       doctest::Contains("malformed numeric cell"),
                       std::invalid_argument);

  std::string empty_value = dir + "/empty_value.csv";
  spit(empty_value, "seed,step,metric,value\n0,10,x,\n");
  CHECK_THROWS_WITH_AS(read_result_csv(empty_value),
                       doctest::Contains("malformed numeric cell"),
                       std::invalid_argument);

  std::string agg_short = dir + "/agg_short.csv";
  spit(agg_short, "step,metric,mean,std,n\n10,x,1.0,0.5\n");
  CHECK_THROWS_WITH_AS(read_aggregate_csv(agg_short),
                       doctest::Contains("malformed row"),
                       std::invalid_argument);

  std::string agg_bad_std = dir + "/agg_bad_std.csv";
  spit(agg_bad_std, "step,metric,mean,std,n\n10,x,1.0,oops,3\n");
  CHECK_THROWS_WITH_AS(read_aggregate_csv(agg_bad_std),
                       doctest::Contains("malformed numeric cell"),
                       std::invalid_argument);

  // Blank lines are tolerated; values round-trip exactly.
  std::string tolerant = dir + "/tolerant.csv";
  spit(tolerant,
       "seed,step,metric,value\n\n7,10,policy_agreement,0.25\n\n");
  std::vector<ResultRow> rows = read_result_csv(tolerant);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].seed == 7);
  CHECK(rows[0].step == 10);
  CHECK(rows[0].metric == "policy_agreement");
  CHECK(rows[0].value == 0.25);
}
