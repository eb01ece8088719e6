#include "ch1d/energy.hpp"

#include <cmath>

namespace ch1d {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

double jump_cost() { return 2.0 * std::sqrt(2.0) / 3.0; }

// ---------------------------------------------------------------------------
// Cartesian
// ---------------------------------------------------------------------------

namespace {

// Accumulates the three raw cell sums: S_g = sum |du|^2, S_p = sum (m2-1)^2,
// S_t = sum (T-tau)^2.  Scaling into energy units happens at the call site.
struct CellSums {
  double grad = 0.0, pot = 0.0, twist = 0.0;
};

CellSums cell_sums_cartesian(const std::vector<double>& u1,
                             const std::vector<double>& u2, const Grid& g,
                             double target) {
  CellSums s;
  const double inv_h = 1.0 / g.h;
  const int m = g.cells();
  for (int i = 0; i < m; ++i) {
    const double a1 = u1[i + 1] - u1[i];
    const double a2 = u2[i + 1] - u2[i];
    const double s1 = u1[i] + u1[i + 1];
    const double s2 = u2[i] + u2[i + 1];
    const double m2 = 0.25 * (s1 * s1 + s2 * s2);
    const double t = (u1[i] * u2[i + 1] - u2[i] * u1[i + 1]) * inv_h;
    s.grad += a1 * a1 + a2 * a2;
    const double pm = m2 - 1.0;
    s.pot += pm * pm;
    const double tm = t - target;
    s.twist += tm * tm;
  }
  return s;
}

EnergyBreakdown scale_sums(const CellSums& s, const Grid& g, double eps,
                           double L) {
  EnergyBreakdown b;
  b.gradient_term = 0.5 * eps / g.h * s.grad;
  b.potential_term = 0.25 * g.h / eps * s.pot;
  b.twist_term = 0.5 * L * g.h * s.twist;
  b.total = b.gradient_term + b.potential_term + b.twist_term;
  return b;
}

}  // namespace

EnergyBreakdown energy_eps(const ComplexField& u, const ModelParams& params) {
  validate(params);
  return scale_sums(
      cell_sums_cartesian(u.u1, u.u2, u.grid, params.twist_target()), u.grid,
      params.eps, params.L);
}

double energy_cartesian(const std::vector<double>& u1,
                        const std::vector<double>& u2, const Grid& g,
                        double eps, double L, double target) {
  const CellSums s = cell_sums_cartesian(u1, u2, g, target);
  return 0.5 * eps / g.h * s.grad + 0.25 * g.h / eps * s.pot +
         0.5 * L * g.h * s.twist;
}

double energy_and_grad_cartesian(const std::vector<double>& u1,
                                 const std::vector<double>& u2, const Grid& g,
                                 double eps, double L, double target,
                                 std::vector<double>& g1,
                                 std::vector<double>& g2) {
  const int n = g.n;
  const double h = g.h;
  const double inv_h = 1.0 / h;
  g1.assign(n, 0.0);
  g2.assign(n, 0.0);
  double sg = 0.0, sp = 0.0, st = 0.0;
  const double coefA = eps * inv_h;
  const double coefP = 0.25 * h / eps;
  for (int i = 0; i < n - 1; ++i) {
    const double a1 = u1[i + 1] - u1[i];
    const double a2 = u2[i + 1] - u2[i];
    const double s1 = u1[i] + u1[i + 1];
    const double s2 = u2[i] + u2[i + 1];
    const double m2 = 0.25 * (s1 * s1 + s2 * s2);
    const double t = (u1[i] * u2[i + 1] - u2[i] * u1[i + 1]) * inv_h;
    const double pm = m2 - 1.0;
    const double tm = t - target;
    sg += a1 * a1 + a2 * a2;
    sp += pm * pm;
    st += tm * tm;
    const double cp = coefP * pm;    // d(pot)/d(s-components)
    const double ct = L * tm;        // h * L * (T-tau) * dT/du has 1/h inside
    g1[i] += -coefA * a1 + cp * s1 + ct * u2[i + 1];
    g2[i] += -coefA * a2 + cp * s2 - ct * u1[i + 1];
    g1[i + 1] += coefA * a1 + cp * s1 - ct * u2[i];
    g2[i + 1] += coefA * a2 + cp * s2 + ct * u1[i];
  }
  g1[0] = g2[0] = 0.0;
  g1[n - 1] = g2[n - 1] = 0.0;
  return 0.5 * eps * inv_h * sg + 0.25 * h / eps * sp + 0.5 * L * h * st;
}

FieldGrad grad_energy_eps(const ComplexField& u, const ModelParams& params) {
  validate(params);
  FieldGrad out;
  energy_and_grad_cartesian(u.u1, u.u2, u.grid, params.eps, params.L,
                            params.twist_target(), out.g1, out.g2);
  return out;
}

// ---------------------------------------------------------------------------
// Polar (exact polar form of the same cell rule)
// ---------------------------------------------------------------------------

namespace {

CellSums cell_sums_polar(const std::vector<double>& rho,
                         const std::vector<double>& theta, const Grid& g,
                         double target) {
  CellSums s;
  const double inv_h = 1.0 / g.h;
  const int m = g.cells();
  for (int i = 0; i < m; ++i) {
    const double dr = rho[i + 1] - rho[i];
    const double dth = theta[i + 1] - theta[i];
    const double prod = rho[i] * rho[i + 1];
    const double sh = std::sin(0.5 * dth);
    const double omc = 2.0 * sh * sh;  // 1 - cos(dth), stable for small dth
    const double sn = std::sin(dth);
    const double m2 =
        0.25 * (rho[i] * rho[i] + rho[i + 1] * rho[i + 1]) + 0.5 * prod * (1.0 - omc);
    const double t = prod * sn * inv_h;
    s.grad += dr * dr + 2.0 * prod * omc;
    const double pm = m2 - 1.0;
    s.pot += pm * pm;
    const double tm = t - target;
    s.twist += tm * tm;
  }
  return s;
}

}  // namespace

EnergyBreakdown energy_eps_polar(const PolarField& p, const ModelParams& params) {
  validate(params);
  return scale_sums(cell_sums_polar(p.rho, p.theta, p.grid, params.twist_target()),
                    p.grid, params.eps, params.L);
}

double energy_polar(const std::vector<double>& rho,
                    const std::vector<double>& theta, const Grid& g,
                    double eps, double L, double target) {
  const CellSums s = cell_sums_polar(rho, theta, g, target);
  return 0.5 * eps / g.h * s.grad + 0.25 * g.h / eps * s.pot +
         0.5 * L * g.h * s.twist;
}

double energy_and_grad_polar(const std::vector<double>& rho,
                             const std::vector<double>& theta, const Grid& g,
                             double eps, double L, double target,
                             std::vector<double>& g_rho,
                             std::vector<double>& g_theta) {
  const int n = g.n;
  const double h = g.h;
  const double inv_h = 1.0 / h;
  g_rho.assign(n, 0.0);
  g_theta.assign(n, 0.0);
  double sg = 0.0, sp = 0.0, st = 0.0;
  const double coefA = eps * inv_h;
  const double coefP = 0.5 * h / eps;  // multiplies (m2-1) * dm2/d(var)
  for (int i = 0; i < n - 1; ++i) {
    const double ri = rho[i], rj = rho[i + 1];
    const double dr = rj - ri;
    const double dth = theta[i + 1] - theta[i];
    const double prod = ri * rj;
    const double sh = std::sin(0.5 * dth);
    const double omc = 2.0 * sh * sh;
    const double sn = std::sin(dth);
    const double cs = 1.0 - omc;  // cos(dth)
    const double m2 = 0.25 * (ri * ri + rj * rj) + 0.5 * prod * cs;
    const double t = prod * sn * inv_h;
    const double pm = m2 - 1.0;
    const double tm = t - target;
    sg += dr * dr + 2.0 * prod * omc;
    sp += pm * pm;
    st += tm * tm;

    const double cp = coefP * pm;
    const double ct = L * tm;
    // d|du|^2 scaled by eps/(2h); dm2 terms by h(m2-1)/(2 eps); twist by
    // L h (T-tau) with the inner 1/h cancelled where it appears.
    g_rho[i] += coefA * (-dr + rj * omc) + cp * 0.5 * (ri + rj * cs) +
                ct * rj * sn;
    g_rho[i + 1] += coefA * (dr + ri * omc) + cp * 0.5 * (rj + ri * cs) +
                    ct * ri * sn;
    const double gth = -coefA * prod * sn + cp * 0.5 * prod * sn -
                       ct * prod * cs;
    g_theta[i] += gth;
    g_theta[i + 1] -= gth;
  }
  g_rho[0] = g_theta[0] = 0.0;
  g_rho[n - 1] = g_theta[n - 1] = 0.0;
  return 0.5 * eps * inv_h * sg + 0.25 * h / eps * sp + 0.5 * L * h * st;
}

PolarGrad grad_energy_eps_polar(const PolarField& p, const ModelParams& params) {
  validate(params);
  PolarGrad out;
  energy_and_grad_polar(p.rho, p.theta, p.grid, params.eps, params.L,
                        params.twist_target(), out.g_rho, out.g_theta);
  return out;
}

// ---------------------------------------------------------------------------
// Rescaled frame
// ---------------------------------------------------------------------------

EnergyBreakdown energy_rescaled(const ComplexField& w, const ModelParams& params) {
  validate(params);
  if (!params.rescaled()) {
    throw InvalidParameterError("energy_rescaled requires beta in (0, 1/2)");
  }
  const Grid& g = w.grid;
  const double kappa = kTwoPi * params.floor_twist_count();
  const double target = params.twist_target();
  const double phi = kappa * g.h;
  const double cphi = std::cos(phi);
  const double sphi = std::sin(phi);
  const double inv_h = 1.0 / g.h;
  CellSums s;
  for (int i = 0; i < g.n - 1; ++i) {
    // Rotate the right endpoint by the cell phase factor e^{i kappa h}; the
    // cell quantities below then equal those of u = w e^{i kappa x} exactly.
    const double v1 = w.u1[i + 1] * cphi - w.u2[i + 1] * sphi;
    const double v2 = w.u1[i + 1] * sphi + w.u2[i + 1] * cphi;
    const double a1 = v1 - w.u1[i];
    const double a2 = v2 - w.u2[i];
    const double s1 = w.u1[i] + v1;
    const double s2 = w.u2[i] + v2;
    const double m2 = 0.25 * (s1 * s1 + s2 * s2);
    const double t = (w.u1[i] * v2 - w.u2[i] * v1) * inv_h;
    s.grad += a1 * a1 + a2 * a2;
    const double pm = m2 - 1.0;
    s.pot += pm * pm;
    const double tm = t - target;
    s.twist += tm * tm;
  }
  return scale_sums(s, g, params.eps, params.L);
}

// ---------------------------------------------------------------------------
// Limit energy of a jump map
// ---------------------------------------------------------------------------

EnergyBreakdown energy_gamma(const JumpMap& j, double L, double target) {
  double twist = 0.0;
  for (const auto& piece : j.pieces) {
    if (piece.x.size() < 2) {
      throw InvalidJumpMapError("piece needs at least 2 samples to integrate");
    }
    // Below-resolution pieces (spanning fewer than two sample cells)
    // contribute no twist energy.
    if (piece.x.size() < 3) continue;
    for (std::size_t k = 0; k + 1 < piece.x.size(); ++k) {
      const double dx = piece.x[k + 1] - piece.x[k];
      const double slope = (piece.theta[k + 1] - piece.theta[k]) / dx;
      const double d = slope - target;
      twist += d * d * dx;
    }
  }
  EnergyBreakdown b;
  const double jumps_cost = jump_cost() * static_cast<double>(j.jumps.size());
  b.gradient_term = 0.5 * jumps_cost;
  b.potential_term = 0.5 * jumps_cost;
  b.twist_term = 0.5 * L * twist;
  b.total = b.gradient_term + b.potential_term + b.twist_term;
  return b;
}

}  // namespace ch1d
