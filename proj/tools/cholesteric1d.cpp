// Command-line front end: runs experiments described by a JSON config and
// re-checks the outputs of previous runs.
//
// Exit codes: 0 success, 2 unusable config or unreadable files, 3 solver
// divergence, 4 completed run whose checks fail.  CLI11 reports its own
// usage errors with its standard codes.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ch1d/experiment.hpp"
#include "ch1d/io.hpp"
#include "ch1d/minimize.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitChecksFailed = 4;

void print_checks(const ch1d::ExperimentOutcome& outcome) {
  for (const ch1d::CheckResult& c : outcome.checks) {
    std::printf("[%s] %s  value=%.6g threshold=%.6g%s%s\n",
                c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.threshold,
                c.note.empty() ? "" : "  ", c.note.c_str());
  }
  std::printf("%s\n", outcome.all_pass ? "ALL CHECKS PASSED"
                                       : "SOME CHECKS FAILED");
}

int run_command(const std::string& config_path, const std::string& out_dir,
                int jobs, const std::vector<std::string>& overrides) {
  nlohmann::json raw = ch1d::read_json_file(config_path);
  for (const std::string& assignment : overrides) {
    ch1d::apply_override(raw, assignment);
  }
  const ch1d::ExperimentConfig config = ch1d::config_from_json(raw);
  const ch1d::ExperimentOutcome outcome =
      ch1d::run_experiment(config, out_dir, jobs);
  print_checks(outcome);
  return outcome.all_pass ? kExitOk : kExitChecksFailed;
}

int check_command(const std::string& dir) {
  const ch1d::ExperimentOutcome outcome = ch1d::check_experiment(dir);
  print_checks(outcome);
  return outcome.all_pass ? kExitOk : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete cholesteric twist fields on [0,1]: constrained "
               "minimization, phase diagrams, transition barriers."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int jobs = 1;
  std::vector<std::string> overrides;
  CLI::App* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Path to the experiment config JSON")
      ->required();
  run->add_option("--out", out_dir, "Output directory (created if needed)");
  run->add_option("--jobs", jobs, "Worker threads for sweep experiments")
      ->check(CLI::PositiveNumber);
  run->add_option("--set", overrides,
                  "Config override as dotted.path=value (repeatable)");

  std::string check_dir;
  CLI::App* check = app.add_subcommand("check", "Re-derive and verify the checks of a finished run");
  check->add_option("dir", check_dir, "Output directory of a previous run")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return run_command(config_path, out_dir, jobs, overrides);
    return check_command(check_dir);
  } catch (const ch1d::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDiverged;
  } catch (const ch1d::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const ch1d::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
