#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uql/config.hpp"
#include "uql/oracle.hpp"

namespace uql {

struct RunOptions {
  std::string output_dir;  // overrides config and environment defaults
  long seed_offset = 0;    // added to every configured seed
  int jobs = 1;            // worker threads across seeds
};

// Run directory precedence: options.output_dir, else the config's
// run.output_dir, else $UQL_OUTPUT_ROOT/<stem>, else results/<stem>.
std::string resolve_output_dir(const RunConfig& cfg, const RunOptions& options,
                               const std::string& stem);

struct SeedOutcome {
  std::uint64_t seed = 0;  // after seed_offset
  bool ok = false;
  std::string error;
  std::string result_file;  // relative to the run directory; empty on failure
};

struct ExperimentResult {
  std::string output_dir;
  std::vector<SeedOutcome> seeds;

  bool all_ok() const;
};

// One seed's full learning run, kept in memory for tests and metrics.
struct SeedRunOutput {
  std::vector<RunRecord> records;
  std::vector<QTable> final_tables;
};

SeedRunOutput execute_seed(const RunConfig& cfg, const BuiltEnvironment& env,
                           const GroundTruth& truth, std::uint64_t seed);

// Executes every configured seed (independently, options.jobs at a time) and
// writes seed_<seed>.csv per seed, aggregate.csv (per-step mean/std across
// seeds), optional final_values_seed<seed>.csv, and manifest.json into
// output_dir. A seed that throws is recorded as failed in the manifest and
// skipped by the aggregate; the other seeds are unaffected.
ExperimentResult run_experiment(const RunConfig& cfg,
                                const std::string& output_dir,
                                const RunOptions& options);

// Loads and validates config_path, then runs it; the file stem names the
// default output directory.
ExperimentResult run_experiment_file(const std::string& config_path,
                                     const RunOptions& options);

struct SweepOutcome {
  std::string value;
  std::string dir;  // run directory relative to the sweep root
  bool ok = false;
};

struct SweepResult {
  std::string output_dir;
  std::string param;  // resolved to section.key
  std::vector<SweepOutcome> runs;

  bool all_ok() const;
};

// Expands the template config once per value (param accepts section.key or a
// bare key unique across sections), runs each expansion under
// <param>=<value>/, and writes sweep_summary.csv (all aggregates, keyed by
// value) plus sweep_manifest.json. Unresolvable parameters throw
// std::invalid_argument.
SweepResult run_sweep_file(const std::string& config_path,
                           const std::string& param,
                           const std::vector<std::string>& values,
                           const RunOptions& options);

// Solves the config's environment exactly and writes q_star.csv, v_star.csv,
// and pi_star.csv; returns the output directory.
std::string dump_oracle_file(const std::string& config_path,
                             const RunOptions& options);

// CSV readers shared by the plot renderer and tests.
struct ResultRow {
  std::uint64_t seed = 0;
  long step = 0;
  std::string metric;
  double value = 0.0;
};

struct AggregateRow {
  long step = 0;
  std::string metric;
  double mean = 0.0;
  double std_dev = 0.0;
  long n = 0;
};

std::vector<ResultRow> read_result_csv(const std::string& path);
std::vector<AggregateRow> read_aggregate_csv(const std::string& path);

// Exact formatting used for every floating-point cell (round-trips doubles).
std::string format_double(double v);

}  // namespace uql
