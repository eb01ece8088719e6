#include "ch1d/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "ch1d/asymptotics.hpp"
#include "ch1d/lifting.hpp"
#include "ch1d/minimize.hpp"

namespace ch1d {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

// Modulus profile with a dead zone around x_star: zero on the plateau,
// tanh transition layers on the eps scale outside it.
std::vector<double> dead_zone_modulus(const Grid& grid, double x_star,
                                      double eps) {
  const double p = std::max(eps * eps, 1.1 * grid.h);
  const double inv_layer = 1.0 / (std::sqrt(2.0) * eps);
  std::vector<double> rho(static_cast<std::size_t>(grid.n));
  for (int i = 0; i < grid.n; ++i) {
    const double d = std::max(0.0, std::abs(grid.x(i) - x_star) - p);
    rho[i] = std::tanh(d * inv_layer);
  }
  return rho;
}

ComplexField from_polar_samples(const Grid& grid,
                                const std::vector<double>& rho,
                                const std::vector<double>& theta, double alpha,
                                bool enforce) {
  std::vector<double> u1(rho.size()), u2(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    u1[i] = rho[i] * std::cos(theta[i]);
    u2[i] = rho[i] * std::sin(theta[i]);
  }
  return make_complex_field(grid, std::move(u1), std::move(u2), alpha, enforce);
}

}  // namespace

PathEnsemble init_path(const ComplexField& uA, const ComplexField& uB, int K,
                       const ModelParams& params) {
  validate(params);
  if (K < 8) {
    throw InvalidParameterError("a path needs at least 8 images");
  }
  if (uA.grid.n != uB.grid.n) {
    throw InvalidParameterError("path endpoints must share a grid");
  }
  if (uA.alpha != uB.alpha) {
    throw InvalidParameterError(
        "path endpoints must impose the same boundary mismatch");
  }
  const Grid& grid = uA.grid;
  if (grid.h > params.eps / 4.0) {
    throw ResolutionError(
        "grid spacing h = " + fmt_full(grid.h) +
        " cannot resolve the dead-zone layers at eps = " + fmt_full(params.eps) +
        " (need h <= eps/4)");
  }
  const int n = grid.n;

  const PolarField liftA = unwrap_phase(uA);

  // Reconstruct uB's phase: directly when it lifts, through its jump map when
  // the modulus pinches off.  x_star is where the path's dead zone sits.
  double x_star = 0.5;
  std::vector<double> theta_b(static_cast<std::size_t>(n));
  bool b_liftable = true;
  try {
    const PolarField liftB = unwrap_phase(uB);
    if (liftB.M == liftA.M) {
      throw DegeneratePathError(
          "endpoints lift to the same winding class " + std::to_string(liftA.M) +
          "; they connect without a modulus zero");
    }
    theta_b = liftB.theta;
  } catch (const VanishingModulusError&) {
    b_liftable = false;
  } catch (const AliasingError&) {
    b_liftable = false;
  }
  if (!b_liftable) {
    const JumpMap jm = extract_jump_map(uB, params);
    std::vector<double> interior;
    for (double x : jm.jumps) {
      if (x > 0.0 && x < 1.0) interior.push_back(x);
    }
    if (!interior.empty()) x_star = interior.front();
    for (int i = 0; i < n; ++i) {
      const double x = grid.x(i);
      std::size_t piece = 0;
      for (double xj : interior) {
        if (x >= xj) ++piece;
      }
      theta_b[i] = piece_value_at(jm.pieces[piece], x);
    }
  }

  // Shift the phase target by a whole number of turns past x_star so the
  // morph pins both boundary traces; the step lands inside the dead zone.
  const long k_shift =
      std::lround((liftA.theta[n - 1] - theta_b[n - 1]) / kTwoPi);
  std::vector<double> theta_target = theta_b;
  for (int i = 0; i < n; ++i) {
    if (grid.x(i) > x_star) theta_target[i] += kTwoPi * k_shift;
  }

  const std::vector<double> dip = dead_zone_modulus(grid, x_star, params.eps);
  const bool enforce = uA.boundary_enforced && uB.boundary_enforced;

  const ComplexField plateau_a =
      from_polar_samples(grid, dip, liftA.theta, uA.alpha, enforce);
  const ComplexField plateau_b =
      from_polar_samples(grid, dip, theta_target, uA.alpha, enforce);

  const auto mix = [&](const ComplexField& a, const ComplexField& b, double s) {
    std::vector<double> u1(static_cast<std::size_t>(n));
    std::vector<double> u2(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      u1[i] = (1.0 - s) * a.u1[i] + s * b.u1[i];
      u2[i] = (1.0 - s) * a.u2[i] + s * b.u2[i];
    }
    return make_complex_field(grid, std::move(u1), std::move(u2), uA.alpha,
                              enforce);
  };

  PathEnsemble path;
  path.images.reserve(static_cast<std::size_t>(K));
  const int k1 = K / 3;
  const int k2 = (2 * K) / 3;
  for (int i = 0; i < K; ++i) {
    if (i == 0) {
      path.images.push_back(uA);
    } else if (i == K - 1) {
      path.images.push_back(uB);
    } else if (i <= k1) {
      // Depress the modulus at fixed phase; a convex mix of fields with the
      // same pointwise phase keeps the phase (and the class) exact.
      path.images.push_back(mix(uA, plateau_a, static_cast<double>(i) / k1));
    } else if (i <= k2) {
      // Rotate the phase while the dead zone screens the twist.
      const double tau = static_cast<double>(i - k1) / (k2 - k1);
      std::vector<double> theta(static_cast<std::size_t>(n));
      for (int m = 0; m < n; ++m) {
        theta[m] = (1.0 - tau) * liftA.theta[m] + tau * theta_target[m];
      }
      path.images.push_back(
          from_polar_samples(grid, dip, theta, uA.alpha, enforce));
    } else {
      // Restore the modulus toward uB.
      const double s = static_cast<double>(i - k2) / (K - 1 - k2);
      path.images.push_back(mix(plateau_b, uB, s));
    }
  }
  return path;
}

namespace {

double path_image_energy(const ComplexField& u, const ModelParams& params) {
  return energy_cartesian(u.u1, u.u2, u.grid, params.eps, params.L,
                          params.twist_target());
}

// L2 distance between consecutive images (trapezoid-free cell sum is enough
// for parametrization purposes).
double image_distance(const ComplexField& a, const ComplexField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.u1.size(); ++i) {
    const double d1 = a.u1[i] - b.u1[i];
    const double d2 = a.u2[i] - b.u2[i];
    s += d1 * d1 + d2 * d2;
  }
  return std::sqrt(s * a.grid.h);
}

}  // namespace

RelaxReport relax_path(PathEnsemble& path, const ModelParams& params,
                       const RelaxOptions& opts) {
  validate(params);
  const int K = path.size();
  if (K < 3) {
    throw InvalidParameterError("relaxation needs at least three images");
  }
  if (opts.max_sweeps < 1 || opts.stall_window < 1) {
    throw InvalidParameterError("relaxation budgets must be positive");
  }
  const Grid grid = path.images[0].grid;
  const int n = grid.n;
  const double eps = params.eps;
  const double L = params.L;
  const double target = params.twist_target();

  std::vector<double> energies(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    energies[k] = path_image_energy(path.images[k], params);
    if (!std::isfinite(energies[k])) {
      throw InvalidParameterError("path image " + std::to_string(k) +
                                  " has non-finite energy");
    }
  }

  RelaxReport report;
  report.barrier_history.reserve(static_cast<std::size_t>(opts.max_sweeps));

  std::vector<double> g1(n), g2(n), t1(n), t2(n);
  std::vector<ComplexField> scratch;  // reparametrization workspace

  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    // One monotone descent step per interior image.
    for (int k = 1; k + 1 < K; ++k) {
      ComplexField& u = path.images[k];
      const double f0 = energy_and_grad_cartesian(u.u1, u.u2, grid, eps, L,
                                                  target, g1, g2);
      double gmax = 0.0;
      double g_sq = 0.0;
      for (int i = 0; i < n; ++i) {
        gmax = std::max(gmax, std::max(std::abs(g1[i]), std::abs(g2[i])));
        g_sq += g1[i] * g1[i] + g2[i] * g2[i];
      }
      if (gmax == 0.0) continue;
      double t = 1.0 / (1.0 + gmax);
      for (int ls = 0; ls < 40; ++ls) {
        for (int i = 0; i < n; ++i) {
          t1[i] = u.u1[i] - t * g1[i];
          t2[i] = u.u2[i] - t * g2[i];
        }
        const double f_new =
            energy_cartesian(t1, t2, grid, eps, L, target);
        if (std::isfinite(f_new) && f_new <= f0 - opts.armijo_c * t * g_sq) {
          u.u1.swap(t1);
          u.u2.swap(t2);
          energies[k] = f_new;
          break;
        }
        t *= opts.backtrack;
      }
    }
    const double post_descent_max =
        *std::max_element(energies.begin(), energies.end());

    // Equal-arclength resampling.  Always applied: keeping the images spread
    // along the path is what holds one of them on the col; the maximum may
    // rise transiently when an image is pulled back up the slope.
    {
      std::vector<double> cum(static_cast<std::size_t>(K), 0.0);
      for (int k = 0; k + 1 < K; ++k) {
        cum[k + 1] = cum[k] + image_distance(path.images[k], path.images[k + 1]);
      }
      const double total = cum[K - 1];
      if (total > 0.0) {
        scratch = path.images;
        for (int k = 1; k + 1 < K; ++k) {
          const double want = total * k / (K - 1);
          int seg = static_cast<int>(
              std::upper_bound(cum.begin(), cum.end(), want) - cum.begin()) - 1;
          seg = std::clamp(seg, 0, K - 2);
          const double span = cum[seg + 1] - cum[seg];
          const double s = span > 0.0 ? (want - cum[seg]) / span : 0.0;
          ComplexField& out = scratch[k];
          const ComplexField& a = path.images[seg];
          const ComplexField& b = path.images[seg + 1];
          for (int i = 0; i < n; ++i) {
            out.u1[i] = (1.0 - s) * a.u1[i] + s * b.u1[i];
            out.u2[i] = (1.0 - s) * a.u2[i] + s * b.u2[i];
          }
        }
        std::vector<double> new_energies(static_cast<std::size_t>(K));
        new_energies[0] = energies[0];
        new_energies[K - 1] = energies[K - 1];
        for (int k = 1; k + 1 < K; ++k) {
          new_energies[k] = path_image_energy(scratch[k], params);
        }
        const double new_max =
            *std::max_element(new_energies.begin(), new_energies.end());
        report.max_reparam_rise =
            std::max(report.max_reparam_rise, new_max - post_descent_max);
        path.images.swap(scratch);
        energies.swap(new_energies);
      }
    }

    report.barrier_history.push_back(
        *std::max_element(energies.begin(), energies.end()));
    report.sweeps = sweep + 1;
    const int w = opts.stall_window;
    if (report.sweeps > w) {
      const auto tail_begin = report.barrier_history.end() - w;
      const auto [lo, hi] = std::minmax_element(tail_begin,
                                                report.barrier_history.end());
      if (*hi - *lo < opts.barrier_change_tol) {
        report.converged = true;
        break;
      }
    }
  }
  return report;
}

BarrierReport barrier(const PathEnsemble& path, const ModelParams& params) {
  validate(params);
  if (path.size() < 2) {
    throw InvalidParameterError("a barrier needs at least two images");
  }
  BarrierReport report;
  report.energies.resize(static_cast<std::size_t>(path.size()));
  for (int k = 0; k < path.size(); ++k) {
    report.energies[k] = path_image_energy(path.images[k], params);
  }
  const auto it = std::max_element(report.energies.begin(), report.energies.end());
  report.argmax = static_cast<int>(it - report.energies.begin());
  report.max_energy = *it;
  report.barrier_above_first = report.max_energy - report.energies.front();

  const ComplexField& top = path.images[report.argmax];
  double min_mod = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < top.u1.size(); ++i) {
    min_mod = std::min(min_mod, std::hypot(top.u1[i], top.u2[i]));
  }
  report.min_modulus_at_max = min_mod;

  const FieldGrad grad = grad_energy_eps(top, params);
  double gmax = 0.0;
  for (std::size_t i = 0; i < grad.g1.size(); ++i) {
    gmax = std::max(gmax, std::max(std::abs(grad.g1[i]), std::abs(grad.g2[i])));
  }
  report.grad_norm_at_max = gmax;
  return report;
}

PathEnsemble refine_path(const PathEnsemble& path) {
  if (path.size() < 2) {
    throw InvalidParameterError("refinement needs at least two images");
  }
  PathEnsemble out;
  out.images.reserve(static_cast<std::size_t>(2 * path.size() - 1));
  for (int k = 0; k < path.size(); ++k) {
    out.images.push_back(path.images[k]);
    if (k + 1 < path.size()) {
      const ComplexField& a = path.images[k];
      const ComplexField& b = path.images[k + 1];
      std::vector<double> u1(a.u1.size()), u2(a.u2.size());
      for (std::size_t i = 0; i < a.u1.size(); ++i) {
        u1[i] = 0.5 * (a.u1[i] + b.u1[i]);
        u2[i] = 0.5 * (a.u2[i] + b.u2[i]);
      }
      out.images.push_back(make_complex_field(a.grid, std::move(u1),
                                              std::move(u2), a.alpha, false));
    }
  }
  return out;
}

}  // namespace ch1d
