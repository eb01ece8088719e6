#pragma once
// Discretized twist energies on the uniform grid.
//
// All integrals use one cell rule: on each cell [x_i, x_{i+1}], derivatives
// are forward differences (u' ~ (u_{i+1}-u_i)/h) and field values are the
// endpoint average (u~ = (u_i+u_{i+1})/2).  The twist density on a cell is
//   T = u1~ u2' - u2~ u1' = (u1_i u2_{i+1} - u2_i u1_{i+1}) / h,
// and the cell integrand is eps/2 |u'|^2 + (|u~|^2-1)^2/(4 eps)
// + L/2 (T - tau)^2, summed with weight h.  The rule is second order.
//
// The polar evaluator computes the *same* discrete sum expressed in polar
// variables (|du|^2 = (drho)^2 + 4 rho_i rho_{i+1} sin^2(dtheta/2), etc.), so
// the two representations agree to rounding, not merely to O(h^2).  The
// rescaled evaluator likewise expands the product w e^{i kappa x} cell-wise
// through the exact phase factor e^{i kappa h}, so it reproduces the direct
// evaluation of the unrescaled field to rounding.

#include <vector>

#include "ch1d/core.hpp"

namespace ch1d {

// Cost of one modulus dip in the Gamma-limit: 2*sqrt(2)/3.
double jump_cost();

struct EnergyBreakdown {
  double gradient_term = 0.0;
  double potential_term = 0.0;
  double twist_term = 0.0;
  double total = 0.0;  // gradient_term + potential_term + twist_term, summed once
};

struct FieldGrad {
  std::vector<double> g1, g2;  // per-node derivatives; boundary entries zero
};

struct PolarGrad {
  std::vector<double> g_rho, g_theta;  // boundary entries zero
};

// Relaxed twist energy of a complex field.  The twist target is
// params.twist_target() (2*pi*N, or 2*pi*eps^{-beta} in the rescaled regime).
EnergyBreakdown energy_eps(const ComplexField& u, const ModelParams& params);

// Exact derivative of energy_eps with respect to the node values; entries for
// the two boundary nodes are zero (boundary data is fixed by construction).
FieldGrad grad_energy_eps(const ComplexField& u, const ModelParams& params);

// Same discrete energy evaluated in polar variables (see header comment).
EnergyBreakdown energy_eps_polar(const PolarField& p, const ModelParams& params);

// Exact derivative of energy_eps_polar in (rho, theta); boundary entries zero.
PolarGrad grad_energy_eps_polar(const PolarField& p, const ModelParams& params);

// Unbounded-twist energy in the rescaled frame: F(w) = E_eps(w e^{i kappa x})
// with kappa = 2*pi*floor(eps^{-beta}) (snapped floor) and twist target
// 2*pi*eps^{-beta}.  Requires params.beta; throws InvalidParameterError
// otherwise.
EnergyBreakdown energy_rescaled(const ComplexField& w, const ModelParams& params);

// Limit energy of a jump map: (L/2) * sum over pieces of int (theta'-target)^2
// plus jump_cost() per jump point (boundary jumps counted).  The H^1 part is
// integrated piecewise with the cell rule; pieces spanning less than two
// sample cells are below resolution and contribute no twist energy.  The jump
// cost is reported half in gradient_term and half in potential_term (the two
// terms the transition layers of the relaxation split it between); the twist
// integral is twist_term.  Throws InvalidJumpMapError if a piece has fewer
// than 2 samples.
EnergyBreakdown energy_gamma(const JumpMap& j, double L, double target);

// ---------------------------------------------------------------------------
// Fused evaluators for solvers (no breakdown, gradient accumulated in place).
// Boundary entries of the gradient arrays are set to zero.  `target` is the
// twist target tau.  Returns the total energy.
// ---------------------------------------------------------------------------

double energy_and_grad_cartesian(const std::vector<double>& u1,
                                 const std::vector<double>& u2, const Grid& g,
                                 double eps, double L, double target,
                                 std::vector<double>& g1,
                                 std::vector<double>& g2);

double energy_cartesian(const std::vector<double>& u1,
                        const std::vector<double>& u2, const Grid& g,
                        double eps, double L, double target);

double energy_and_grad_polar(const std::vector<double>& rho,
                             const std::vector<double>& theta, const Grid& g,
                             double eps, double L, double target,
                             std::vector<double>& g_rho,
                             std::vector<double>& g_theta);

double energy_polar(const std::vector<double>& rho,
                    const std::vector<double>& theta, const Grid& g,
                    double eps, double L, double target);

}  // namespace ch1d
