#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uql/experiment.hpp"
#include "uql/plot.hpp"
#include "uql/selftest.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeFailure = 2;

void add_common_flags(CLI::App* cmd, uql::RunOptions& options) {
  cmd->add_option("--seed-offset", options.seed_offset,
                  "Offset added to every configured seed");
  cmd->add_option("--output-dir", options.output_dir,
                  "Output directory (overrides the config and "
                  "$UQL_OUTPUT_ROOT)");
  cmd->add_option("--jobs", options.jobs, "Worker threads across seeds")
      ->check(CLI::PositiveNumber);
}

int report_experiment(const uql::ExperimentResult& result) {
  int failed = 0;
  for (const uql::SeedOutcome& seed : result.seeds) {
    if (seed.ok) continue;
    ++failed;
    std::cerr << "seed " << seed.seed << " failed: " << seed.error << '\n';
  }
  std::cout << "wrote " << result.output_dir << " (" << result.seeds.size()
            << " seeds, " << failed << " failed)\n";
  return failed == 0 ? kExitOk : kExitRuntimeFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular soft Q-learning laboratory"};
  app.require_subcommand(1);
  app.footer("Default output root: $UQL_OUTPUT_ROOT, else ./results");

  uql::RunOptions options;
  std::string config_path;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  std::string plot_input;
  std::string plot_kind = "value-curve";
  std::string plot_output;

  CLI::App* run_cmd =
      app.add_subcommand("run", "Run every seed of an experiment config");
  run_cmd->add_option("config", config_path, "Experiment config file")
      ->required();
  add_common_flags(run_cmd, options);

  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Expand one parameter over a value list and run each setting");
  sweep_cmd->add_option("config", config_path, "Template config file")
      ->required();
  sweep_cmd
      ->add_option("--param", sweep_param,
                   "Parameter to vary (key or section.key)")
      ->required();
  sweep_cmd
      ->add_option("--values", sweep_values,
                   "Comma-separated values (inf is accepted)")
      ->required()
      ->delimiter(',');
  add_common_flags(sweep_cmd, options);

  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle", "Solve the config's environment exactly and dump "
                "q_star/v_star/pi_star CSV files");
  oracle_cmd->add_option("config", config_path, "Environment config file")
      ->required();
  add_common_flags(oracle_cmd, options);

  CLI::App* plot_cmd =
      app.add_subcommand("plot", "Render result CSV files to SVG");
  plot_cmd->add_option("results", plot_input, "aggregate.csv for curves, a "
                                              "state-value table for maps")
      ->required();
  plot_cmd->add_option("--kind", plot_kind,
                       "value-curve | bias-curve | policy-map | value-map");
  plot_cmd->add_option("--output", plot_output, "Output SVG path");

  CLI::App* selftest_cmd =
      app.add_subcommand("selftest", "Run the fast property suites");
  (void)selftest_cmd;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (run_cmd->parsed())
      return report_experiment(uql::run_experiment_file(config_path, options));
    if (sweep_cmd->parsed()) {
      uql::SweepResult result =
          uql::run_sweep_file(config_path, sweep_param, sweep_values, options);
      int failed = 0;
      for (const uql::SweepOutcome& run : result.runs) {
        if (run.ok) continue;
        ++failed;
        std::cerr << result.param << " = " << run.value
                  << " had failed seeds (see " << result.output_dir << '/'
                  << run.dir << "/manifest.json)\n";
      }
      std::cout << "wrote " << result.output_dir << " (" << result.runs.size()
                << " settings of " << result.param << ", " << failed
                << " failed)\n";
      return failed == 0 ? kExitOk : kExitRuntimeFailure;
    }
    if (oracle_cmd->parsed()) {
      std::cout << "wrote " << uql::dump_oracle_file(config_path, options)
                << "/{q_star,v_star,pi_star}.csv\n";
      return kExitOk;
    }
    if (plot_cmd->parsed()) {
      std::cout << "wrote "
                << uql::render_plot(plot_input, uql::parse_plot_kind(plot_kind),
                                    plot_output)
                << '\n';
      return kExitOk;
    }
    if (selftest_cmd->parsed())
      return uql::run_selftest(std::cout) ? kExitOk : kExitRuntimeFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kExitRuntimeFailure;
  }
  return kExitOk;
}
