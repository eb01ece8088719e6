#pragma once
// Energy minimization: a monotone-descent solver (L-BFGS directions with
// Armijo backtracking, falling back to steepest descent whenever curvature
// information is unusable), a modulus-floored variant that minimizes within a
// fixed winding class, and a deterministic multistart driver.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ch1d/core.hpp"
#include "ch1d/energy.hpp"

namespace ch1d {

// Thrown when an iterate or its energy stops being finite.  Carries the last
// finite energy and the iteration count at the failure.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double last_finite_energy,
                  int iterations)
      : Error(what),
        last_finite_energy(last_finite_energy),
        iterations(iterations) {}

  double last_finite_energy = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

struct SolverOptions {
  // Convergence threshold on the infinity norm of the (projected) gradient.
  // Non-positive means automatic: 1e-8 times the node count.
  double grad_tol = 0.0;
  int max_iters = 200000;
  // Lower bound kept on the modulus during winding-class solves.
  double rho_floor = 0.5;
  int lbfgs_memory = 8;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  // Infinity-norm bound on the displacement first tried in each line search.
  // Keeping steps short makes descent behave like a gradient flow, so a
  // solve started inside a basin stays there instead of hopping between
  // critical points.
  double step_cap = 0.1;
  // When set, the energy after every accepted step is appended here (the
  // start energy first).  Observation only; never read by the solver.
  std::vector<double>* energy_trace = nullptr;
};

struct MinimizeReport {
  EnergyBreakdown energy;
  int iterations = 0;
  double grad_norm = 0.0;  // infinity norm of the final (projected) gradient
  bool converged = false;
  // Winding-class solves only: some interior modulus node ended at the floor.
  bool constraint_active = false;
  // Winding of the final field; absent when it is not liftable.
  std::optional<int> winding;
};

struct FreeMinimizeResult {
  ComplexField field;
  MinimizeReport report;
};

struct WindingMinimizeResult {
  PolarField field;
  MinimizeReport report;
};

// Unconstrained descent on the full complex field (boundary nodes fixed).
FreeMinimizeResult minimize_free(const ComplexField& u0,
                                 const ModelParams& params,
                                 const SolverOptions& opts = {});

// Descent in polar coordinates at fixed winding class: the phase endpoints
// are pinned, and interior modulus values are clamped to opts.rho_floor so
// the class cannot change along the way.
WindingMinimizeResult minimize_winding_class(const PolarField& p0,
                                             const ModelParams& params,
                                             const SolverOptions& opts = {});

// Convenience form: descends from the constant-modulus spiral in class M
// with the modulus floor rho0.
WindingMinimizeResult minimize_winding_class(int M, double rho0,
                                             const ModelParams& params,
                                             const Grid& grid,
                                             const SolverOptions& opts = {});

// ---------------------------------------------------------------------------
// Start construction and multistart driver.

enum class StartKind {
  UniformTwist,  // constant-modulus spiral in a given winding class
  SeededDip,     // spiral with a deep modulus dip and a localized phase switch
};

struct StartSpec {
  StartKind kind = StartKind::UniformTwist;
  // Winding class of the start.  In the rescaled regime this is relative to
  // floor(eps^{-beta}).
  int M = 0;
  double x0 = 0.5;  // dip center (SeededDip only)
};

ComplexField make_start(const StartSpec& spec, const ModelParams& params,
                        const Grid& grid);

// Deterministic default battery: uniform twists in the classes nearest the
// imposed twist, plus seeded dips in the classes most likely to shed a turn.
std::vector<StartSpec> default_start_specs(const ModelParams& params);

// Jump count and winding read off a candidate minimizer.  With no jumps the
// winding is the boundary class; with jumps it is the mean off-jump twist
// rate in full turns (a descriptive label, not a homotopy invariant).
struct ObservedClass {
  int jumps = 0;
  int winding = 0;
};

ObservedClass observed_class(const ComplexField& u, const ModelParams& params,
                             int q = 4);

struct StartOutcome {
  StartSpec spec;
  double total = std::numeric_limits<double>::quiet_NaN();
  int jumps = 0;
  int winding = 0;
  bool converged = false;
};

struct MultistartResult {
  ComplexField field;
  MinimizeReport report;
  ObservedClass observed;
  int winner = -1;  // index into starts
  std::vector<StartOutcome> starts;
};

// Runs minimize_free from every start and keeps the lowest energy.  Energies
// within 1e-10 of the best are tied; ties prefer fewer jumps, then lower
// winding, then earlier start order.  Deterministic for fixed inputs.
MultistartResult multistart_global(const ModelParams& params,
                                     const Grid& grid,
                                     const std::vector<StartSpec>& specs,
                                     const SolverOptions& opts = {});

}  // namespace ch1d
