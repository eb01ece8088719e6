#pragma once
// Shared helpers for the test suite: independent finite-difference gradients,
// seeded random admissible fields, and Richardson utilities.  Everything here
// is deliberately naive and separate from the library's own numerics so the
// tests cross-check rather than mirror the implementation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ch1d/core.hpp"
#include "ch1d/energy.hpp"

namespace test_support {

using ch1d::ComplexField;
using ch1d::FieldGrad;
using ch1d::Grid;
using ch1d::ModelParams;
using ch1d::PolarField;
using ch1d::PolarGrad;
using ch1d::SplitMix64;

// Central finite differences of energy_eps with respect to every interior
// node value; boundary entries are zeroed to match the analytic convention
// (boundary data is fixed, so the energy is not differentiated there).
inline FieldGrad fd_grad_cartesian(const ComplexField& u,
                                   const ModelParams& params,
                                   double step = 1e-6) {
  FieldGrad g;
  const std::size_t n = u.u1.size();
  g.g1.assign(n, 0.0);
  g.g2.assign(n, 0.0);
  ComplexField probe = u;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    for (int comp = 0; comp < 2; ++comp) {
      std::vector<double>& arr = comp == 0 ? probe.u1 : probe.u2;
      const double saved = arr[i];
      arr[i] = saved + step;
      const double plus = ch1d::energy_eps(probe, params).total;
      arr[i] = saved - step;
      const double minus = ch1d::energy_eps(probe, params).total;
      arr[i] = saved;
      (comp == 0 ? g.g1 : g.g2)[i] = (plus - minus) / (2.0 * step);
    }
  }
  return g;
}

inline PolarGrad fd_grad_polar(const PolarField& p, const ModelParams& params,
                               double step = 1e-6) {
  PolarGrad g;
  const std::size_t n = p.rho.size();
  g.g_rho.assign(n, 0.0);
  g.g_theta.assign(n, 0.0);
  PolarField probe = p;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    for (int comp = 0; comp < 2; ++comp) {
      std::vector<double>& arr = comp == 0 ? probe.rho : probe.theta;
      const double saved = arr[i];
      arr[i] = saved + step;
      const double plus = ch1d::energy_eps_polar(probe, params).total;
      arr[i] = saved - step;
      const double minus = ch1d::energy_eps_polar(probe, params).total;
      arr[i] = saved;
      (comp == 0 ? g.g_rho : g.g_theta)[i] = (plus - minus) / (2.0 * step);
    }
  }
  return g;
}

// max_i |a_i - b_i| over both components, divided by max(1, max_i |b_i|):
// a norm-relative mismatch that stays meaningful when some entries vanish.
inline double grad_rel_mismatch(const std::vector<double>& a1,
                                const std::vector<double>& a2,
                                const std::vector<double>& b1,
                                const std::vector<double>& b2) {
  double diff = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < a1.size(); ++i) {
    diff = std::max(diff, std::abs(a1[i] - b1[i]));
    diff = std::max(diff, std::abs(a2[i] - b2[i]));
    scale = std::max(scale, std::abs(b1[i]));
    scale = std::max(scale, std::abs(b2[i]));
  }
  return diff / scale;
}

inline double rel_mismatch(const FieldGrad& a, const FieldGrad& b) {
  return grad_rel_mismatch(a.g1, a.g2, b.g1, b.g2);
}
inline double rel_mismatch(const PolarGrad& a, const PolarGrad& b) {
  return grad_rel_mismatch(a.g_rho, a.g_theta, b.g_rho, b.g_theta);
}

// Random admissible smooth field: a low-mode Fourier perturbation of the
// class-M spiral in both phase and modulus.  Every sine vanishes at 0 and 1,
// so the boundary data holds exactly by construction.
inline ComplexField random_smooth_field(const Grid& g, int M, double alpha,
                                        SplitMix64& rng,
                                        double phase_amp = 0.8,
                                        double mod_amp = 0.3) {
  constexpr int kModes = 4;
  double ap[kModes], am[kModes];
  for (int k = 0; k < kModes; ++k) {
    ap[k] = rng.uniform(-phase_amp, phase_amp) / (k + 1);
    am[k] = rng.uniform(-mod_amp, mod_amp) / (k + 1);
  }
  const double slope = 2.0 * 3.14159265358979323846 * M + alpha;
  std::vector<double> u1(static_cast<std::size_t>(g.n)),
      u2(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    double phase = slope * x;
    double rho = 1.0;
    for (int k = 0; k < kModes; ++k) {
      const double s = std::sin((k + 1) * 3.14159265358979323846 * x);
      phase += ap[k] * s;
      rho += am[k] * s;
    }
    u1[static_cast<std::size_t>(i)] = rho * std::cos(phase);
    u2[static_cast<std::size_t>(i)] = rho * std::sin(phase);
  }
  return ch1d::make_complex_field(g, std::move(u1), std::move(u2), alpha,
                                  true);
}

inline PolarField random_smooth_polar(const Grid& g, int M, double alpha,
                                      SplitMix64& rng, double phase_amp = 0.8,
                                      double mod_amp = 0.3) {
  constexpr int kModes = 4;
  double ap[kModes], am[kModes];
  for (int k = 0; k < kModes; ++k) {
    ap[k] = rng.uniform(-phase_amp, phase_amp) / (k + 1);
    am[k] = rng.uniform(-mod_amp, mod_amp) / (k + 1);
  }
  const double slope = 2.0 * 3.14159265358979323846 * M + alpha;
  std::vector<double> rho(static_cast<std::size_t>(g.n)),
      theta(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i) {
    const double x = g.x(i);
    double ph = slope * x;
    double r = 1.0;
    for (int k = 0; k < kModes; ++k) {
      const double s = std::sin((k + 1) * 3.14159265358979323846 * x);
      ph += ap[k] * s;
      r += am[k] * s;
    }
    rho[static_cast<std::size_t>(i)] = r;
    theta[static_cast<std::size_t>(i)] = ph;
  }
  return ch1d::make_polar_field(g, std::move(rho), std::move(theta), M, alpha,
                                true);
}

// Observed convergence order from values at h, h/2, h/4 (coarse to fine).
inline double observed_order(double e_h, double e_h2, double e_h4) {
  return std::log2(std::abs(e_h - e_h2) / std::abs(e_h2 - e_h4));
}

// Richardson limit from the two finest values and an observed order.
inline double richardson_limit(double e_h2, double e_h4, double order) {
  const double f = std::pow(2.0, order);
  return e_h4 + (e_h4 - e_h2) / (f - 1.0);
}

}  // namespace test_support
