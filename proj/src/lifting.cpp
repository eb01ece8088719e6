#include "ch1d/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ch1d {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Principal phase increment from (a1, a2) to (b1, b2) via the argument of the
// product conj(a) * b; lies in (-pi, pi].
double phase_step(double a1, double a2, double b1, double b2) {
  const double re = a1 * b1 + a2 * b2;
  const double im = a1 * b2 - a2 * b1;
  return std::atan2(im, re);
}

}  // namespace

PolarField unwrap_phase(const ComplexField& u, double min_modulus) {
  const int n = u.grid.n;
  if (!(min_modulus >= 0.0)) {
    throw InvalidParameterError("min_modulus must be non-negative");
  }
  std::vector<double> rho(static_cast<std::size_t>(n));
  std::vector<double> theta(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double r = std::hypot(u.u1[i], u.u2[i]);
    if (r < min_modulus) {
      throw VanishingModulusError("modulus " + fmt_full(r) + " at node " +
                                  std::to_string(i) +
                                  " is below the lifting threshold " +
                                  fmt_full(min_modulus));
    }
    rho[i] = r;
  }
  double th = std::atan2(u.u2[0], u.u1[0]);
  if (th < 0.0) th += kTwoPi;
  theta[0] = th;
  for (int i = 0; i + 1 < n; ++i) {
    const double d = phase_step(u.u1[i], u.u2[i], u.u1[i + 1], u.u2[i + 1]);
    if (std::abs(d) >= kAliasingGuard) {
      throw AliasingError("phase step " + fmt_full(d) + " across cell " +
                          std::to_string(i) +
                          " exceeds the aliasing guard pi - 0.1");
    }
    th += d;
    theta[i + 1] = th;
  }
  const int M =
      static_cast<int>(std::lround((theta[n - 1] - theta[0] - u.alpha) / kTwoPi));
  return make_polar_field(u.grid, std::move(rho), std::move(theta), M, u.alpha,
                          u.boundary_enforced);
}

int winding_number(const ComplexField& u) {
  const int n = u.grid.n;
  double accum = 0.0;
  double a1 = u.u1[0];
  double a2 = u.u2[0];
  if (!(std::hypot(a1, a2) > 0.0)) {
    throw VanishingModulusError("winding number undefined: zero modulus at node 0");
  }
  for (int i = 0; i + 1 < n; ++i) {
    // De-phase by e^{-i alpha x} so both endpoints sit at angle 0 mod 2*pi.
    const double xb = u.grid.x(i + 1);
    const double c = std::cos(u.alpha * xb);
    const double s = std::sin(u.alpha * xb);
    const double b1 = u.u1[i + 1] * c + u.u2[i + 1] * s;
    const double b2 = u.u2[i + 1] * c - u.u1[i + 1] * s;
    if (!(std::hypot(b1, b2) > 0.0)) {
      throw VanishingModulusError("winding number undefined: zero modulus at node " +
                                  std::to_string(i + 1));
    }
    const double d = phase_step(a1, a2, b1, b2);
    if (std::abs(d) >= kAliasingGuard) {
      throw AliasingError("phase step " + fmt_full(d) + " across cell " +
                          std::to_string(i) +
                          " exceeds the aliasing guard pi - 0.1");
    }
    accum += d;
    a1 = b1;
    a2 = b2;
  }
  return static_cast<int>(std::lround(accum / kTwoPi));
}

BadIntervalReport detect_bad_intervals(const ComplexField& u, int q) {
  if (q < 2) {
    throw InvalidParameterError("bad-interval depth q must be at least 2");
  }
  const double lo = std::ldexp(1.0, -q);  // 2^{-q}
  const double hi = 1.0 - lo;
  const int n = u.grid.n;
  BadIntervalReport report;
  report.q = q;
  int run_start = -1;
  double run_min = 2.0;
  for (int i = 0; i <= n; ++i) {
    const double r = (i < n) ? std::hypot(u.u1[i], u.u2[i]) : 2.0;
    if (i < n && r <= hi) {
      if (run_start < 0) {
        run_start = i;
        run_min = r;
      } else {
        run_min = std::min(run_min, r);
      }
    } else if (run_start >= 0) {
      if (run_min <= lo) {
        report.intervals.push_back(BadInterval{run_start, i - 1});
      }
      run_start = -1;
      run_min = 2.0;
    }
  }
  report.count = static_cast<int>(report.intervals.size());
  return report;
}

double bad_interval_count_bound(double energy_bound, int q) {
  if (q < 2) {
    throw InvalidParameterError("bad-interval depth q must be at least 2");
  }
  if (!(energy_bound >= 0.0) || !std::isfinite(energy_bound)) {
    throw InvalidParameterError("energy bound must be finite and non-negative");
  }
  const double a = std::ldexp(1.0, -q);
  const double b = 1.0 - a;
  const auto primitive = [](double z) { return z - z * z * z / 3.0; };
  const double crossing_cost = std::sqrt(2.0) * (primitive(b) - primitive(a));
  return energy_bound / crossing_cost;
}

namespace {

// Lifts the phase on a contiguous index range [first, last] of u.  The first
// angle is normalized to [0, 2*pi).
std::vector<double> lift_segment(const ComplexField& u, int first, int last) {
  std::vector<double> theta(static_cast<std::size_t>(last - first + 1));
  double th = std::atan2(u.u2[first], u.u1[first]);
  if (th < 0.0) th += kTwoPi;
  theta[0] = th;
  for (int i = first; i < last; ++i) {
    const double d = phase_step(u.u1[i], u.u2[i], u.u1[i + 1], u.u2[i + 1]);
    if (std::abs(d) >= kAliasingGuard) {
      throw AliasingError("phase step " + fmt_full(d) + " across cell " +
                          std::to_string(i) +
                          " exceeds the aliasing guard pi - 0.1");
    }
    th += d;
    theta[i - first + 1] = th;
  }
  return theta;
}

}  // namespace

JumpMap extract_jump_map(const ComplexField& u, const ModelParams& params,
                         int q) {
  const int n = u.grid.n;
  const BadIntervalReport bad = detect_bad_intervals(u, q);

  // Good segments: maximal node ranges between consecutive bad intervals.
  std::vector<BadInterval> good;
  {
    int cursor = 0;
    for (const BadInterval& b : bad.intervals) {
      if (b.first > cursor) good.push_back(BadInterval{cursor, b.first - 1});
      cursor = b.last + 1;
    }
    if (cursor <= n - 1) good.push_back(BadInterval{cursor, n - 1});
  }
  if (good.empty()) {
    throw InvalidJumpMapError(
        "the modulus is depressed on the whole interval; no phase piece is liftable");
  }

  std::vector<JumpPiece> pieces;
  pieces.reserve(good.size());
  for (const BadInterval& g : good) {
    JumpPiece piece;
    piece.theta = lift_segment(u, g.first, g.last);
    piece.x.resize(piece.theta.size());
    for (int i = g.first; i <= g.last; ++i) {
      piece.x[static_cast<std::size_t>(i - g.first)] = u.grid.x(i);
    }
    pieces.push_back(std::move(piece));
  }

  // Candidate jump locations: midpoints of interior bad intervals; bad
  // intervals touching an endpoint propose the endpoint itself (kept or
  // dropped inside make_jump_map based on the lifted boundary traces).
  std::vector<double> candidates;
  for (const BadInterval& b : bad.intervals) {
    if (b.first == 0 && b.last == n - 1) continue;  // unreachable: good empty
    if (b.first == 0) {
      candidates.push_back(0.0);
    } else if (b.last == n - 1) {
      candidates.push_back(1.0);
    } else {
      candidates.push_back(0.5 * (u.grid.x(b.first) + u.grid.x(b.last)));
    }
  }

  const double twist =
      params.rescaled()
          ? params.twist_count() - params.floor_twist_count()
          : static_cast<double>(params.N);
  return make_jump_map(candidates, std::move(pieces), u.alpha, twist);
}

}  // namespace ch1d
