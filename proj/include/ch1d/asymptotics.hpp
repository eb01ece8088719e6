#pragma once
// Small-eps predictions and the machinery to test them: closed-form limit
// energies, classification of the expected minimizer by parameter region,
// recovery fields realizing a prescribed jump structure at finite eps,
// twist-rate profiles from the reduced first-order balance, microscale
// rescaling diagnostics, Richardson extrapolation in eps, and the phase
// diagram sweep.

#include <string>
#include <utility>
#include <vector>

#include "ch1d/core.hpp"
#include "ch1d/energy.hpp"
#include "ch1d/minimize.hpp"

namespace ch1d {

// Thrown by build_recovery_sequence when two jumps sit so close that their
// transition layers would interfere.
struct OverlapError : Error {
  using Error::Error;
};
// Thrown by build_recovery_sequence when the grid cannot resolve the layers.
struct ResolutionError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Limit energies.

// Limit energy of the jump-free profile in winding class M:
// (L/2) (2*pi*M + alpha - twist_target)^2.
double predicted_local_energy(int M, const ModelParams& params);

// Limit of the lowest barrier above the class-M profile: its limit energy
// plus the cost of one modulus zero-crossing.
double predicted_saddle_energy(int M, const ModelParams& params);

// ---------------------------------------------------------------------------
// Classification of the global minimizer in the (L, alpha) plane (integer
// imposed twist N).

enum class LimitKind { NoJumpAtN, NoJumpAtNMinusOne, OneJump, Tie };

struct Classification {
  LimitKind kind = LimitKind::NoJumpAtN;
  double predicted_energy = 0.0;
  // First-order distance from (L, alpha) to the nearest region boundary.
  double boundary_distance = 0.0;
};

Classification classify_e0(double L, double alpha);

// Classification in the rescaled regime, where the imposed twist has
// fractional part A in (0, 1): either the jump-free profile in the integer
// class nearest to the imposed twist wins, or a one-jump profile does.
enum class LimitKindRescaled { NoJumpNearest, OneJump, Tie };

struct ClassificationRescaled {
  LimitKindRescaled kind = LimitKindRescaled::NoJumpNearest;
  // Nearest-integer offset of the winning jump-free class from floor of the
  // imposed twist count; ties round to even and are flagged.
  int n_star = 0;
  bool n_star_tie = false;
  double predicted_energy = 0.0;
  double boundary_distance = 0.0;
};

ClassificationRescaled classify_e0A(double L, double alpha, double A);

// Jump map of the predicted limit state for a classified parameter point
// (pieces sampled densely enough for limit-energy quadrature).  For Tie the
// lowest-energy jump-free branch is returned.
JumpMap limit_jump_map(LimitKind kind, const ModelParams& params);

// ---------------------------------------------------------------------------
// Recovery fields.

// Builds a finite-eps field realizing the jump map: modulus tanh transition
// layers on the eps scale around each jump (a flat zero plateau wide enough
// for the grid to see it), phase following the pieces with the switch buried
// in the dead zone.  Jumps at the endpoints get their layer just inside the
// boundary.  Errors: OverlapError when consecutive jumps are closer than
// 4*sqrt(eps); ResolutionError when h > eps/4.
ComplexField build_recovery_sequence(const JumpMap& j, double eps,
                                     const Grid& grid);

// ---------------------------------------------------------------------------
// Twist-rate profile from the reduced balance.

// The quantity (d theta/dx) (L rho^4 + eps rho^2) - target L rho^2 is
// constant along stationary profiles.  Returns the constant implied by the
// modulus profile and the class boundary data (the rate it parameterizes must
// integrate to 2 pi M + alpha); this form is immune to the pointwise solver
// residual that a per-cell average of the flux would accumulate.
double fit_twist_constant(const PolarField& p, const ModelParams& params);

// Its limit value for the class-M profile: L (2*pi*M + alpha - target).
double predicted_twist_constant(int M, const ModelParams& params);

// Per-cell twist rate implied by a modulus profile and the class-M boundary
// data: rate_i = (target L rho_bar^2 + C) / (L rho_bar^4 + eps rho_bar^2)
// with C fixed by the requirement that the rates integrate to 2*pi*M + alpha.
std::vector<double> predicted_twist_rate(const std::vector<double>& rho, int M,
                                         const ModelParams& params,
                                         const Grid& grid);

// ---------------------------------------------------------------------------
// Microscale diagnostics for the rescaled regime.

// v = eps^beta * theta / (2*pi): the phase on the scale of one imposed turn.
std::vector<double> microscale_profile(const std::vector<double>& theta,
                                       const ModelParams& params);

// sqrt of the integral of (v' - 1)^2 over the cells contained in [a, b].
double h1_error_to_unit_slope(const std::vector<double>& v, const Grid& grid,
                              double a, double b);

// |integral of u conj(phi) dx| for the fixed smooth test functions
// phi_1 = e^{2 pi i x} and phi_2 = 1: a rapidly twisting field pairs to
// nearly zero against any fixed phi, so these decay along the rescaled
// eps-ladders even though |u| stays near 1.
double weak_zero_probe(const ComplexField& u, int probe);

// Removes / restores the integer part of the imposed twist:
// w = e^{-i kappa x} u with kappa = 2*pi*floor(eps^{-beta}).
ComplexField rescale_to_w(const ComplexField& u, const ModelParams& params);
ComplexField unrescale_from_w(const ComplexField& w, const ModelParams& params);

// ---------------------------------------------------------------------------
// Extrapolation in eps.

struct Extrapolation {
  double limit = 0.0;
  double order = 0.0;
  bool ok = false;
};

// Richardson extrapolation from (eps, value) pairs with eps strictly
// decreasing (at least three).  The convergence order is fitted from the
// successive differences; when they change sign, vanish, or imply an
// unusable order, ok is false and the last value is reported as the limit.
Extrapolation extrapolate_eps(const std::vector<std::pair<double, double>>& data);

// ---------------------------------------------------------------------------
// Phase-diagram sweep.

struct SweepCell {
  double L = 0.0;
  double alpha = 0.0;
  double energy = 0.0;
  int jumps = 0;
  int winding = 0;
  LimitKind predicted = LimitKind::NoJumpAtN;
  double predicted_energy = 0.0;
  double boundary_distance = 0.0;
  bool agree = false;
  std::string status;  // "ok", "max_iters", "recovery_bound_violated", "error: ..."
};

struct SweepOptions {
  ModelParams base;  // eps and N are used; L and alpha come from the axes
  std::vector<double> L_values;
  std::vector<double> alpha_values;
  int n = 4001;
  SolverOptions solver;
  int jobs = 1;
  bool recovery_check = true;
};

// Multistart minimization over the (L, alpha) grid; cell order in the result
// is row-major in (L, alpha) and independent of the number of worker threads.
std::vector<SweepCell> phase_diagram_sweep(const SweepOptions& opts);

// The four starts used per sweep cell.
std::vector<StartSpec> sweep_start_specs(const ModelParams& params);

}  // namespace ch1d
