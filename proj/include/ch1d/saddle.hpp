#pragma once
// Mountain-pass barriers between energy basins: build a path of fields whose
// middle images carry a modulus zero (the only way to change winding class at
// bounded cost), relax it with a string method that keeps the endpoints
// pinned, and read off the highest image.

#include <vector>

#include "ch1d/core.hpp"
#include "ch1d/energy.hpp"

namespace ch1d {

// Thrown by init_path when both endpoints lift to the same winding class:
// they can be joined without a modulus zero, so no barrier of this kind
// separates them.
struct DegeneratePathError : Error {
  using Error::Error;
};

struct PathEnsemble {
  std::vector<ComplexField> images;  // front() and back() are the endpoints

  int size() const { return static_cast<int>(images.size()); }
};

// Three-stage initial path from uA to uB (both on the same grid with the same
// boundary mismatch): depress the modulus to a dead zone at x*, rotate the
// phase to uB's (reconstructed) phase while the zone screens the twist, then
// restore the modulus.  uA must be liftable.  uB may be liftable in a
// different class, or may itself carry jumps (then x* is its first interior
// jump).  The endpoint images are uA and uB verbatim.  Errors: K < 8 ->
// InvalidParameterError; both endpoints liftable with equal winding ->
// DegeneratePathError; h > eps/4 -> ResolutionError.  Endpoint structures at
// the domain boundary are not special-cased: a uB whose jump sits at 0 or 1
// relaxes to its basin during relax_path rather than being matched exactly by
// the initial phase morph.
PathEnsemble init_path(const ComplexField& uA, const ComplexField& uB, int K,
                       const ModelParams& params);

struct RelaxOptions {
  int max_sweeps = 20000;
  // Stop once the path maximum varied by less than barrier_change_tol over
  // the last stall_window sweeps (window range, not endpoint difference).
  double barrier_change_tol = 1e-8;
  int stall_window = 100;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
};

struct RelaxReport {
  int sweeps = 0;
  bool converged = false;
  std::vector<double> barrier_history;  // path maximum after each sweep
  // Largest single-sweep increase of the path maximum caused by resampling
  // (zero when every reparametrization left the maximum at or below its
  // post-descent value).
  double max_reparam_rise = 0.0;
};

// String relaxation: each sweep takes one backtracked gradient step per
// interior image, then resamples the path to equal arclength in the discrete
// L2 metric.  The descent half never raises any image's energy; the
// resampling half can move an image up the slope toward the col (that is what
// keeps the crossing resolved), so the path maximum is non-increasing only on
// balance, not per sweep — max_reparam_rise reports the worst excursion.
RelaxReport relax_path(PathEnsemble& path, const ModelParams& params,
                       const RelaxOptions& opts = {});

struct BarrierReport {
  double max_energy = 0.0;
  int argmax = 0;
  // Barrier measured above the first endpoint's energy.
  double barrier_above_first = 0.0;
  double min_modulus_at_max = 0.0;
  double grad_norm_at_max = 0.0;  // infinity norm at the highest image
  std::vector<double> energies;
};

BarrierReport barrier(const PathEnsemble& path, const ModelParams& params);

// Doubles the resolution of a path by inserting midpoint images (2K-1 total);
// used to check that a computed barrier is resolution-independent.
PathEnsemble refine_path(const PathEnsemble& path);

}  // namespace ch1d
