#pragma once
// Desk-scale experiments: each kind builds its outputs under a directory
// (manifest.json, CSV tables, JSON reports, summary.json with named checks),
// and each directory can later be re-checked from the stored tables alone.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "ch1d/asymptotics.hpp"
#include "ch1d/core.hpp"
#include "ch1d/minimize.hpp"
#include "ch1d/saddle.hpp"

namespace ch1d {

// Raised for malformed configs / overrides (distinct from IoError so the CLI
// can map it to its own exit code).
struct ConfigError : Error {
  using Error::Error;
};

enum class ExperimentKind {
  Minimize,
  WindingScan,
  PhaseDiagram,
  Barrier,
  Twistbend,
  GammaRecovery,
};

std::string experiment_kind_name(ExperimentKind kind);
ExperimentKind experiment_kind_from_name(const std::string& name);

struct WindingScanConfig {
  std::vector<int> classes;          // defaults to {N-1, N, N+1}
  std::vector<double> eps_ladder{0.04, 0.02, 0.01, 0.005};
};

struct PhaseDiagramConfig {
  double L_min = 0.02, L_max = 2.0;
  int L_count = 20;
  double alpha_min = 0.1, alpha_max = 6.183185307179586;  // 2*pi - 0.1
  int alpha_count = 20;
  bool recovery_check = true;
  double interior_margin = 0.2;  // boundary_distance above which a cell counts
};

struct BarrierConfig {
  std::vector<double> eps_ladder{0.02, 0.01, 0.005};
  int images = 33;
  int class_from = 1;  // winding class of the first endpoint
  int class_to = 0;    // winding class of the second endpoint
  bool refine_check = true;
  RelaxOptions relax;
  bool save_path = false;  // dump every image of every relaxed path
};

struct TwistbendConfig {
  std::vector<double> A_values{0.1, 0.5, 0.9};
  // In the rescaled regime the imposed twist sits near 2*pi*m_ref, so the
  // finite-eps cost of shedding one turn is about eps*(2*pi)^2*m_ref while
  // the limit functional's preference for the predicted class scales like
  // 4*pi^2*L*boundary_distance.  The smallest L is chosen so the latter
  // dominates at every interior cell for the eps reachable on this grid;
  // much below L ~ 0.3 the sweep would probe the preasymptotic regime.
  std::vector<double> L_values{0.3, 0.725, 1.15, 1.575, 2.0};
  std::vector<double> alpha_values{0.1, 1.6158, 3.1316, 4.6474, 6.1632};
  int m_ref = 4;                 // eps = (m_ref + A)^(-1/beta) for the sweep
  std::vector<int> ladder_m{2, 3, 4};
  double ladder_L = 0.05;
  double ladder_alpha = 0.5;
  double interior_margin = 0.1;
};

struct GammaRecoveryConfig {
  std::vector<double> eps_ladder{1e-2, 1e-3, 1e-4};
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Minimize;
  ModelParams params;
  int n = 4001;
  SolverOptions solver;
  int q = 4;  // modulus-dip depth used when reading jump structures
  std::uint64_t seed = 20260816;

  WindingScanConfig winding_scan;
  PhaseDiagramConfig phase_diagram;
  BarrierConfig barrier;
  TwistbendConfig twistbend;
  GammaRecoveryConfig gamma_recovery;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);

// Applies "dotted.path=value" to a config JSON; the value is parsed as JSON
// when possible and kept as a string otherwise.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string note;
};

struct ExperimentOutcome {
  std::vector<CheckResult> checks;
  bool all_pass = false;
};

// Runs the experiment, writing outputs under out_dir.  jobs > 1 parallelizes
// embarrassingly parallel cell work; outputs are independent of jobs.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir,
                                 int jobs = 1);

// Re-derives the summary checks from the stored tables (no solves) and
// verifies they match summary.json.
ExperimentOutcome check_experiment(const std::filesystem::path& out_dir);

}  // namespace ch1d
