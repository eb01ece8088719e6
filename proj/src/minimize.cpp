#include "ch1d/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>

#include "ch1d/lifting.hpp"

namespace ch1d {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kTieWindow = 1e-10;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const std::vector<double>& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Objective over a flat coordinate vector: fills the gradient, returns the
// value.  Entries belonging to pinned boundary nodes carry zero gradient, so
// they never move under any step taken below.
using Objective = std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct EngineOutcome {
  double value = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Monotone descent with L-BFGS directions and Armijo backtracking.  When
// `lower` is given, iterates are clamped to the bounds after every trial step
// and convergence is measured with the projected gradient (components pushing
// into an active bound are ignored).  The curvature memory is dropped whenever
// it stops being trustworthy: non-descent direction, failed line search, or a
// change of active set.
EngineOutcome descend(std::vector<double>& z, const Objective& fg,
                      const SolverOptions& opts, double tol,
                      const std::vector<double>* lower) {
  const std::size_t dim = z.size();
  const int mem = std::max(1, opts.lbfgs_memory);

  if (lower != nullptr) {
    for (std::size_t i = 0; i < dim; ++i) z[i] = std::max(z[i], (*lower)[i]);
  }

  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> sy_hist;
  s_hist.reserve(static_cast<std::size_t>(mem));
  y_hist.reserve(static_cast<std::size_t>(mem));

  std::vector<double> g(dim), g_new(dim), d(dim), z_trial(dim);
  std::vector<char> active(dim, 0), active_new(dim, 0);

  const auto mark_active = [&](const std::vector<double>& zz, std::vector<char>& out) {
    if (lower == nullptr) return;
    for (std::size_t i = 0; i < dim; ++i) out[i] = (zz[i] <= (*lower)[i]) ? 1 : 0;
  };
  const auto projected_inf_norm = [&](const std::vector<double>& zz,
                                      const std::vector<double>& gg) {
    double m = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      double gi = gg[i];
      if (lower != nullptr && zz[i] <= (*lower)[i] && gi > 0.0) gi = 0.0;
      m = std::max(m, std::abs(gi));
    }
    return m;
  };

  double f = fg(z, g);
  if (!std::isfinite(f) || !all_finite(g)) {
    throw DivergenceError("energy or gradient not finite at the initial point",
                          f, 0);
  }
  if (opts.energy_trace != nullptr) opts.energy_trace->push_back(f);
  mark_active(z, active);
  double pg = projected_inf_norm(z, g);

  int it = 0;
  int stale_retries = 0;
  while (it < opts.max_iters && pg > tol) {
    // Direction: two-loop recursion over the stored curvature pairs, or plain
    // steepest descent while the memory is empty.
    const std::size_t k = s_hist.size();
    bool quasi_newton = k > 0;
    if (quasi_newton) {
      d = g;
      std::vector<double> a(k);
      for (std::size_t j = k; j-- > 0;) {
        a[j] = dot(s_hist[j], d) / sy_hist[j];
        const std::vector<double>& yj = y_hist[j];
        for (std::size_t i = 0; i < dim; ++i) d[i] -= a[j] * yj[i];
      }
      const double gamma = sy_hist[k - 1] / dot(y_hist[k - 1], y_hist[k - 1]);
      for (std::size_t i = 0; i < dim; ++i) d[i] *= -gamma;
      for (std::size_t j = 0; j < k; ++j) {
        const double b = dot(y_hist[j], d) / sy_hist[j];
        const std::vector<double>& sj = s_hist[j];
        for (std::size_t i = 0; i < dim; ++i) d[i] -= (a[j] + b) * sj[i];
      }
      if (!(dot(g, d) < 0.0)) {
        s_hist.clear();
        y_hist.clear();
        sy_hist.clear();
        quasi_newton = false;
      }
    }
    if (!quasi_newton) {
      for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i];
    }

    // Backtracking line search with sufficient decrease measured against the
    // realized displacement (which differs from t*d when clamping bites).
    // The first trial displacement is capped in infinity norm so descent
    // stays basin-faithful.
    double t = quasi_newton ? 1.0 : 1.0 / (1.0 + inf_norm(g));
    const double d_inf = inf_norm(d);
    if (t * d_inf > opts.step_cap) t = opts.step_cap / d_inf;
    const double gTd = dot(g, d);
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 64 && !accepted; ++ls) {
      for (std::size_t i = 0; i < dim; ++i) z_trial[i] = z[i] + t * d[i];
      bool clamped = false;
      if (lower != nullptr) {
        for (std::size_t i = 0; i < dim; ++i) {
          if (z_trial[i] < (*lower)[i]) {
            z_trial[i] = (*lower)[i];
            clamped = true;
          }
        }
      }
      double decrease = t * gTd;
      if (clamped) {
        decrease = 0.0;
        for (std::size_t i = 0; i < dim; ++i) decrease += g[i] * (z_trial[i] - z[i]);
        if (!(decrease < 0.0)) {
          t *= opts.backtrack;
          continue;
        }
      }
      f_new = fg(z_trial, g_new);
      if (std::isfinite(f_new) && f_new <= f + opts.armijo_c * decrease) {
        accepted = true;
      } else {
        t *= opts.backtrack;
      }
    }

    if (!accepted) {
      if (!s_hist.empty() && stale_retries < 8) {
        // The quasi-Newton model misled the search; retry the same iteration
        // with a fresh steepest-descent step.
        s_hist.clear();
        y_hist.clear();
        sy_hist.clear();
        ++stale_retries;
        continue;
      }
      break;  // stationary to floating-point resolution
    }
    stale_retries = 0;

    if (!all_finite(g_new) || !all_finite(z_trial)) {
      throw DivergenceError("iterate or gradient stopped being finite", f, it);
    }

    // Curvature update.
    mark_active(z_trial, active_new);
    if (lower != nullptr && active_new != active) {
      s_hist.clear();
      y_hist.clear();
      sy_hist.clear();
    } else {
      std::vector<double> s_new(dim), y_new(dim);
      double sy = 0.0, ss = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        s_new[i] = z_trial[i] - z[i];
        y_new[i] = g_new[i] - g[i];
        sy += s_new[i] * y_new[i];
        ss += s_new[i] * s_new[i];
        yy += y_new[i] * y_new[i];
      }
      if (sy > 1e-10 * std::sqrt(ss) * std::sqrt(yy) && sy > 0.0) {
        if (static_cast<int>(s_hist.size()) == mem) {
          s_hist.erase(s_hist.begin());
          y_hist.erase(y_hist.begin());
          sy_hist.erase(sy_hist.begin());
        }
        s_hist.push_back(std::move(s_new));
        y_hist.push_back(std::move(y_new));
        sy_hist.push_back(sy);
      }
    }

    z.swap(z_trial);
    g.swap(g_new);
    active.swap(active_new);
    f = f_new;
    if (opts.energy_trace != nullptr) opts.energy_trace->push_back(f);
    ++it;
    pg = projected_inf_norm(z, g);
  }

  EngineOutcome out;
  out.value = f;
  out.iterations = it;
  out.grad_norm = pg;
  out.converged = pg <= tol;
  return out;
}

double effective_grad_tol(const SolverOptions& opts, int n) {
  return opts.grad_tol > 0.0 ? opts.grad_tol : 1e-8 * static_cast<double>(n);
}

void check_solver_options(const SolverOptions& opts) {
  if (opts.max_iters < 1) {
    throw InvalidParameterError("max_iters must be positive");
  }
  if (!(opts.armijo_c > 0.0 && opts.armijo_c < 1.0)) {
    throw InvalidParameterError("armijo_c must lie in (0, 1)");
  }
  if (!(opts.backtrack > 0.0 && opts.backtrack < 1.0)) {
    throw InvalidParameterError("backtrack must lie in (0, 1)");
  }
  if (!(opts.step_cap > 0.0)) {
    throw InvalidParameterError("step_cap must be positive");
  }
}

}  // namespace

FreeMinimizeResult minimize_free(const ComplexField& u0,
                                 const ModelParams& params,
                                 const SolverOptions& opts) {
  validate(params);
  check_solver_options(opts);
  const Grid grid = u0.grid;
  const int n = grid.n;
  const double target = params.twist_target();

  std::vector<double> z(2 * static_cast<std::size_t>(n));
  std::copy(u0.u1.begin(), u0.u1.end(), z.begin());
  std::copy(u0.u2.begin(), u0.u2.end(), z.begin() + n);

  std::vector<double> w1(n), w2(n), gw1(n), gw2(n);
  const Objective fg = [&](const std::vector<double>& zz, std::vector<double>& gg) {
    std::copy(zz.begin(), zz.begin() + n, w1.begin());
    std::copy(zz.begin() + n, zz.end(), w2.begin());
    const double value = energy_and_grad_cartesian(w1, w2, grid, params.eps,
                                                   params.L, target, gw1, gw2);
    gg.resize(zz.size());
    std::copy(gw1.begin(), gw1.end(), gg.begin());
    std::copy(gw2.begin(), gw2.end(), gg.begin() + n);
    return value;
  };

  const EngineOutcome run =
      descend(z, fg, opts, effective_grad_tol(opts, n), nullptr);

  std::vector<double> u1(z.begin(), z.begin() + n);
  std::vector<double> u2(z.begin() + n, z.end());
  FreeMinimizeResult result{
      make_complex_field(grid, std::move(u1), std::move(u2), u0.alpha,
                         u0.boundary_enforced),
      MinimizeReport{}};
  result.report.energy = energy_eps(result.field, params);
  result.report.iterations = run.iterations;
  result.report.grad_norm = run.grad_norm;
  result.report.converged = run.converged;
  result.report.constraint_active = false;
  try {
    result.report.winding = winding_number(result.field);
  } catch (const Error&) {
    result.report.winding.reset();
  }
  return result;
}

WindingMinimizeResult minimize_winding_class(const PolarField& p0,
                                             const ModelParams& params,
                                             const SolverOptions& opts) {
  validate(params);
  check_solver_options(opts);
  if (!(opts.rho_floor > 0.0 && opts.rho_floor < 1.0)) {
    throw InvalidParameterError("rho_floor must lie in (0, 1)");
  }
  const Grid grid = p0.grid;
  const int n = grid.n;
  const double target = params.twist_target();

  std::vector<double> z(2 * static_cast<std::size_t>(n));
  std::copy(p0.rho.begin(), p0.rho.end(), z.begin());
  std::copy(p0.theta.begin(), p0.theta.end(), z.begin() + n);

  constexpr double kUnbounded = -std::numeric_limits<double>::infinity();
  std::vector<double> lower(2 * static_cast<std::size_t>(n), kUnbounded);
  for (int i = 1; i + 1 < n; ++i) lower[i] = opts.rho_floor;

  std::vector<double> wr(n), wt(n), gwr(n), gwt(n);
  const Objective fg = [&](const std::vector<double>& zz, std::vector<double>& gg) {
    std::copy(zz.begin(), zz.begin() + n, wr.begin());
    std::copy(zz.begin() + n, zz.end(), wt.begin());
    const double value = energy_and_grad_polar(wr, wt, grid, params.eps,
                                               params.L, target, gwr, gwt);
    gg.resize(zz.size());
    std::copy(gwr.begin(), gwr.end(), gg.begin());
    std::copy(gwt.begin(), gwt.end(), gg.begin() + n);
    return value;
  };

  const EngineOutcome run =
      descend(z, fg, opts, effective_grad_tol(opts, n), &lower);

  std::vector<double> rho(z.begin(), z.begin() + n);
  std::vector<double> theta(z.begin() + n, z.end());
  bool at_floor = false;
  for (int i = 1; i + 1 < n; ++i) {
    if (rho[i] <= opts.rho_floor) at_floor = true;
  }

  WindingMinimizeResult result{
      make_polar_field(grid, std::move(rho), std::move(theta), p0.M, p0.alpha,
                       p0.boundary_enforced),
      MinimizeReport{}};
  result.report.energy = energy_eps_polar(result.field, params);
  result.report.iterations = run.iterations;
  result.report.grad_norm = run.grad_norm;
  result.report.converged = run.converged;
  result.report.constraint_active = at_floor;
  result.report.winding = p0.M;
  return result;
}

WindingMinimizeResult minimize_winding_class(int M, double rho0,
                                             const ModelParams& params,
                                             const Grid& grid,
                                             const SolverOptions& opts) {
  const int n = grid.n;
  std::vector<double> rho(static_cast<std::size_t>(n), 1.0);
  std::vector<double> theta(static_cast<std::size_t>(n));
  const double rate = kTwoPi * M + params.alpha;
  for (int i = 0; i < n; ++i) theta[i] = rate * grid.x(i);
  const PolarField start = make_polar_field(grid, std::move(rho),
                                            std::move(theta), M, params.alpha,
                                            true);
  SolverOptions local = opts;
  local.rho_floor = rho0;
  return minimize_winding_class(start, params, local);
}

namespace {

// Clamped cubic smoothstep on [0, 1].
double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

ComplexField make_start(const StartSpec& spec, const ModelParams& params,
                        const Grid& grid) {
  validate(params);
  const long base =
      params.rescaled() ? std::lround(params.floor_twist_count()) : 0;
  const long m_abs = base + spec.M;

  if (spec.kind == StartKind::UniformTwist) {
    return uniform_twist_field(static_cast<int>(m_abs), params, grid);
  }

  if (!(spec.x0 > 0.0 && spec.x0 < 1.0)) {
    throw InvalidParameterError("dip center x0 must lie strictly inside (0, 1)");
  }
  // A deep Gaussian modulus dip (depth 0.95, full width ~ 4 sqrt(eps)) with
  // the compensating phase step ramped across sqrt(eps), so descent from
  // here reaches the basin of states whose phase jumps at x0.
  const double rate = params.twist_target();
  const double absorbed = kTwoPi * static_cast<double>(m_abs) + params.alpha - rate;
  const double sigma = std::sqrt(params.eps);
  const int n = grid.n;
  std::vector<double> u1(static_cast<std::size_t>(n));
  std::vector<double> u2(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = grid.x(i);
    const double rel = (x - spec.x0) / sigma;
    const double rho = 1.0 - 0.95 * std::exp(-rel * rel);
    const double theta = rate * x + absorbed * smoothstep(rel + 0.5);
    u1[i] = rho * std::cos(theta);
    u2[i] = rho * std::sin(theta);
  }
  return make_complex_field(grid, std::move(u1), std::move(u2), params.alpha,
                            true);
}

std::vector<StartSpec> default_start_specs(const ModelParams& params) {
  std::vector<StartSpec> specs;
  if (params.rescaled()) {
    for (int m = -1; m <= 1; ++m) {
      specs.push_back(StartSpec{StartKind::UniformTwist, m, 0.5});
    }
    specs.push_back(StartSpec{StartKind::SeededDip, 0, 0.5});
  } else {
    for (int m = params.N - 2; m <= params.N + 2; ++m) {
      specs.push_back(StartSpec{StartKind::UniformTwist, m, 0.5});
    }
    specs.push_back(StartSpec{StartKind::SeededDip, params.N - 1, 0.5});
    specs.push_back(StartSpec{StartKind::SeededDip, params.N, 0.5});
  }
  return specs;
}

ObservedClass observed_class(const ComplexField& u, const ModelParams& params,
                             int q) {
  const JumpMap jm = extract_jump_map(u, params, q);
  ObservedClass out;
  out.jumps = static_cast<int>(jm.jumps.size());
  if (out.jumps == 0 && jm.pieces.size() == 1 && jm.pieces[0].theta.size() >= 2) {
    const JumpPiece& piece = jm.pieces[0];
    out.winding = static_cast<int>(
        std::lround((piece.theta.back() - piece.theta.front() - u.alpha) / kTwoPi));
    return out;
  }
  double weight = 0.0;
  double mean_rate = 0.0;
  for (const JumpPiece& piece : jm.pieces) {
    if (piece.x.size() < 2) continue;
    const double len = piece.x.back() - piece.x.front();
    if (!(len > 0.0)) continue;
    const double slope = (piece.theta.back() - piece.theta.front()) / len;
    mean_rate += slope * len;
    weight += len;
  }
  if (weight > 0.0) {
    out.winding = static_cast<int>(std::lround(mean_rate / weight / kTwoPi));
  }
  return out;
}

MultistartResult multistart_global(const ModelParams& params,
                                     const Grid& grid,
                                     const std::vector<StartSpec>& specs,
                                     const SolverOptions& opts) {
  if (specs.empty()) {
    throw InvalidParameterError("multistart needs at least one start");
  }
  MultistartResult result;
  result.starts.reserve(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    FreeMinimizeResult run = minimize_free(make_start(specs[k], params, grid),
                                           params, opts);
    ObservedClass oc = observed_class(run.field, params);
    StartOutcome outcome;
    outcome.spec = specs[k];
    outcome.total = run.report.energy.total;
    outcome.jumps = oc.jumps;
    outcome.winding = oc.winding;
    outcome.converged = run.report.converged;
    result.starts.push_back(outcome);

    bool take = false;
    if (result.winner < 0) {
      take = true;
    } else {
      const double best = result.report.energy.total;
      if (outcome.total < best - kTieWindow) {
        take = true;
      } else if (outcome.total <= best + kTieWindow) {
        const ObservedClass& cur = result.observed;
        if (outcome.jumps < cur.jumps ||
            (outcome.jumps == cur.jumps && outcome.winding < cur.winding)) {
          take = true;
        }
      }
    }
    if (take) {
      result.field = std::move(run.field);
      result.report = run.report;
      result.observed = oc;
      result.winner = static_cast<int>(k);
    }
  }
  return result;
}

}  // namespace ch1d
