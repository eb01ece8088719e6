#pragma once
// Phase lifting and vanishing-set analysis for complex fields on [0,1].
//
// A field with modulus bounded away from zero lifts to a continuous phase by
// accumulating principal-value increments node to node.  Regions where the
// modulus dips toward zero ("bad intervals") carry no reliable phase; jump
// maps are extracted by lifting on the complement and testing the phase
// mismatch across each bad interval modulo 2*pi.

#include <vector>

#include "ch1d/core.hpp"

namespace ch1d {

// Per-step increments at or beyond this size are treated as unresolved
// (aliasing): the sampled rotation is too fast for the grid.
inline constexpr double kAliasingGuard = 3.14159265358979323846 - 0.1;

// Lifts u = rho e^{i theta} with theta(0) in [0, 2*pi) and per-step increments
// in (-pi, pi).  Errors: any node with |u_i| < min_modulus ->
// VanishingModulusError; any increment with |d theta| >= pi - 0.1 ->
// AliasingError.  The winding class M is recovered from the lifted phase via
// M = round((theta_end - theta_0 - alpha) / 2*pi).
PolarField unwrap_phase(const ComplexField& u, double min_modulus = 1e-12);

// Winding number of the de-phased field e^{-i alpha x} u: the net phase
// increment divided by 2*pi, rounded.  Pre: min |u| > 0 and no aliasing.
int winding_number(const ComplexField& u);

// Maximal index range of nodes where rho <= 1 - 2^{-q} that contains a node
// with rho <= 2^{-q}.
struct BadInterval {
  int first = 0;
  int last = 0;  // inclusive
};

struct BadIntervalReport {
  int q = 0;
  std::vector<BadInterval> intervals;
  int count = 0;
};

// Scans the modulus for dips from 1 - 2^{-q} down to 2^{-q}.  Pre: q >= 2
// (throws InvalidParameterError).  An empty report is valid.
BadIntervalReport detect_bad_intervals(const ComplexField& u, int q);

// Upper bound on the number of bad intervals for a field with total energy
// at most `energy_bound`: energy_bound / (sqrt(2) * int_{2^-q}^{1-2^-q}
// (1 - z^2) dz), the integral in closed form z - z^3/3.
double bad_interval_count_bound(double energy_bound, int q);

// Extracts the jump structure of a field: candidate jumps at bad-interval
// midpoints, phase pieces lifted on the complement, removable candidates
// merged (gap below kJumpTolerance mod 2*pi), endpoints 0/1 included iff the
// lifted traces violate the boundary conditions.  The stored twist_count is
// N, or the fractional part of eps^{-beta} in the rescaled regime.
JumpMap extract_jump_map(const ComplexField& u, const ModelParams& params,
                         int q = 4);

}  // namespace ch1d
