#pragma once
// Core value types for a 1D cholesteric relaxation toolkit: uniform grids,
// model parameters, complex/polar order-parameter fields on [0,1], and
// piecewise phase maps with jump points.  All objects are plain value types;
// functions never mutate their inputs.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ch1d {

inline constexpr const char* kVersion = "0.1.0";

// Fixed tolerance deciding whether a phase discontinuity is real: an interior
// jump is kept only if the phase gap across it exceeds this, modulo 2*pi.
inline constexpr double kJumpTolerance = 1e-6;

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidGridError : Error { using Error::Error; };
struct InvalidParameterError : Error { using Error::Error; };
struct VanishingModulusError : Error { using Error::Error; };
struct AliasingError : Error { using Error::Error; };
struct InvalidJumpMapError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// ----------------------------------------------------------------------------
// Grid
// ----------------------------------------------------------------------------

// Uniform grid on [0,1] with n nodes and spacing h = 1/(n-1).
struct Grid {
  int n = 0;
  double h = 0.0;

  int cells() const { return n - 1; }
  // Node coordinate; the last node is exactly 1 so boundary data is exact.
  double x(int i) const { return i == n - 1 ? 1.0 : i * h; }
  // Midpoint of cell i (between nodes i and i+1).
  double cell_mid(int i) const { return (x(i) + x(i + 1)) / 2.0; }
};

Grid make_grid(int n);  // throws InvalidGridError if n < 3

// ----------------------------------------------------------------------------
// Model parameters
// ----------------------------------------------------------------------------

// Parameters of the relaxed twist energy
//   E_eps(u) = \int_0^1 eps/2 |u'|^2 + 1/(4 eps) (|u|^2-1)^2
//            + L/2 (u1 u2' - u2 u1' - tau)^2 dx
// with boundary conditions u(0) = 1, u(1) = e^{i alpha}.  In the standard
// regime the twist target is tau = 2*pi*N with integer N.  When `beta` is set
// the model runs in the unbounded-twist regime with tau = 2*pi*eps^{-beta}.
struct ModelParams {
  double eps = 0.01;
  double L = 1.0;
  int N = 1;
  double alpha = 0.0;
  std::optional<double> beta;

  bool rescaled() const { return beta.has_value(); }
  // eps^{-beta}; only meaningful in the rescaled regime.
  double twist_count() const;
  // Twist target tau: 2*pi*N, or 2*pi*eps^{-beta} in the rescaled regime.
  double twist_target() const;
  // floor(eps^{-beta}), snapped to the nearest integer when eps^{-beta} is
  // within 1e-12 of one (guards floating-point floor at integer values).
  double floor_twist_count() const;
};

void validate(const ModelParams& p);  // throws InvalidParameterError

// ----------------------------------------------------------------------------
// Fields
// ----------------------------------------------------------------------------

// Complex order parameter sampled at grid nodes, stored as two real arrays.
// `boundary_enforced` records whether the construction pinned u(0) = (1,0)
// and u(1) = (cos alpha, sin alpha) exactly.
struct ComplexField {
  Grid grid;
  std::vector<double> u1, u2;
  double alpha = 0.0;
  bool boundary_enforced = false;
};

// Polar representation u = rho e^{i theta}.  For a boundary-enforced field,
// rho(0) = rho(1) = 1, theta(0) = 0 and theta(1) = 2*pi*M + alpha, where M is
// the winding class index.
struct PolarField {
  Grid grid;
  std::vector<double> rho, theta;
  int M = 0;
  double alpha = 0.0;
  bool boundary_enforced = false;
};

// Constructors validate array sizes and (optionally) pin the boundary nodes.
ComplexField make_complex_field(const Grid& g, std::vector<double> u1,
                                std::vector<double> u2, double alpha,
                                bool enforce_boundary);
PolarField make_polar_field(const Grid& g, std::vector<double> rho,
                            std::vector<double> theta, int M, double alpha,
                            bool enforce_boundary);

// rho_i = 0 yields the value (0,0) regardless of theta_i.  Boundary flags are
// preserved; for an enforced field the end nodes are written exactly.
ComplexField to_cartesian(const PolarField& p);

// The uniform twist map e^{i(2*pi*M + alpha) x}; boundary-enforced.
ComplexField uniform_twist_field(int M, const ModelParams& p, const Grid& g);

// ----------------------------------------------------------------------------
// Jump maps (piecewise-H^1 circle-valued limit objects)
// ----------------------------------------------------------------------------

// One maximal subinterval between consecutive interior jumps: phase samples
// on the grid nodes it contains.  x is strictly increasing.
struct JumpPiece {
  std::vector<double> x;
  std::vector<double> theta;
};

// A finite jump set J in [0,1] plus per-piece phase samples.  Endpoints 0/1
// appear in `jumps` exactly when the phase traces violate the boundary
// conditions (theta(0+) != 0 or theta(1-) != alpha, modulo 2*pi, beyond
// kJumpTolerance).  Interior jumps are minimal: the phase gap across each one
// exceeds kJumpTolerance modulo 2*pi.
struct JumpMap {
  std::vector<double> jumps;
  std::vector<JumpPiece> pieces;
  double alpha = 0.0;
  // Limit twist parameter (N in the standard regime, A in the rescaled one).
  double twist_count = 0.0;
};

// Builds a JumpMap from candidate interior jump locations and their pieces.
// Removable candidates (phase gap below tolerance mod 2*pi) are merged away,
// shifting the right piece by an exact multiple of 2*pi; boundary membership
// of 0/1 is derived from the piece traces.  Throws InvalidJumpMapError on
// malformed input (pieces/jumps mismatch, unsorted samples, empty pieces).
JumpMap make_jump_map(std::vector<double> interior_jumps,
                      std::vector<JumpPiece> pieces, double alpha,
                      double twist_count);

// Phase trace of a piece at x: linear interpolation inside the sampled range,
// linear extrapolation with the edge-cell slope outside (constant if the
// piece has a single sample).
double piece_value_at(const JumpPiece& piece, double x);

// Wrap an angle to (-pi, pi].
double wrap_to_pi(double a);

// ----------------------------------------------------------------------------
// Deterministic seeding
// ----------------------------------------------------------------------------

// SplitMix64: tiny deterministic generator used for randomized initial data.
struct SplitMix64 {
  std::uint64_t state = 0x9e3779b97f4a7c15ull;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}
  std::uint64_t next();
  double uniform01();                     // in [0,1)
  double uniform(double a, double b);     // in [a,b)
};

// Named-stream seed derivation: every consumer derives its own stream from
// (root seed, stream kind, cell index), so results are reproducible and
// independent of evaluation order.
std::uint64_t stream_seed(std::uint64_t root, std::string_view kind,
                          std::uint64_t index);

// ----------------------------------------------------------------------------
// Numeric formatting (locale-independent, full double precision)
// ----------------------------------------------------------------------------

// Formats with 17 significant digits (round-trip exact for IEEE doubles).
std::string fmt_full(double v);

}  // namespace ch1d
