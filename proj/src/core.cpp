#include "ch1d/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace ch1d {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

Grid make_grid(int n) {
  if (n < 3) {
    throw InvalidGridError("grid needs at least 3 nodes, got " +
                           std::to_string(n));
  }
  Grid g;
  g.n = n;
  g.h = 1.0 / static_cast<double>(n - 1);
  return g;
}

double ModelParams::twist_count() const {
  if (!beta) {
    throw InvalidParameterError("twist_count requires the rescaled regime");
  }
  return std::pow(eps, -*beta);
}

double ModelParams::twist_target() const {
  return rescaled() ? kTwoPi * twist_count() : kTwoPi * static_cast<double>(N);
}

double ModelParams::floor_twist_count() const {
  const double t = twist_count();
  const double r = std::round(t);
  if (std::abs(t - r) < 1e-12) return r;
  return std::floor(t);
}

void validate(const ModelParams& p) {
  if (!(p.eps > 0.0) || !std::isfinite(p.eps)) {
    throw InvalidParameterError("eps must be positive and finite");
  }
  if (!(p.L > 0.0) || !std::isfinite(p.L)) {
    throw InvalidParameterError("L must be positive and finite");
  }
  if (!(p.alpha >= 0.0 && p.alpha < kTwoPi)) {
    throw InvalidParameterError("alpha must lie in [0, 2*pi)");
  }
  if (p.beta) {
    if (!(*p.beta > 0.0 && *p.beta < 0.5)) {
      throw InvalidParameterError("beta must lie in (0, 1/2)");
    }
  } else if (p.N < 0) {
    throw InvalidParameterError("N must be a nonnegative integer");
  }
}

ComplexField make_complex_field(const Grid& g, std::vector<double> u1,
                                std::vector<double> u2, double alpha,
                                bool enforce_boundary) {
  if (static_cast<int>(u1.size()) != g.n || static_cast<int>(u2.size()) != g.n) {
    throw InvalidGridError("field arrays must have one entry per grid node");
  }
  ComplexField f;
  f.grid = g;
  f.u1 = std::move(u1);
  f.u2 = std::move(u2);
  f.alpha = alpha;
  f.boundary_enforced = enforce_boundary;
  if (enforce_boundary) {
    f.u1.front() = 1.0;
    f.u2.front() = 0.0;
    f.u1.back() = std::cos(alpha);
    f.u2.back() = std::sin(alpha);
  }
  return f;
}

PolarField make_polar_field(const Grid& g, std::vector<double> rho,
                            std::vector<double> theta, int M, double alpha,
                            bool enforce_boundary) {
  if (static_cast<int>(rho.size()) != g.n ||
      static_cast<int>(theta.size()) != g.n) {
    throw InvalidGridError("field arrays must have one entry per grid node");
  }
  for (double r : rho) {
    if (r < 0.0) {
      throw InvalidParameterError("polar modulus must be nonnegative");
    }
  }
  PolarField p;
  p.grid = g;
  p.rho = std::move(rho);
  p.theta = std::move(theta);
  p.M = M;
  p.alpha = alpha;
  p.boundary_enforced = enforce_boundary;
  if (enforce_boundary) {
    p.rho.front() = 1.0;
    p.rho.back() = 1.0;
    p.theta.front() = 0.0;
    p.theta.back() = kTwoPi * M + alpha;
  }
  return p;
}

ComplexField to_cartesian(const PolarField& p) {
  ComplexField f;
  f.grid = p.grid;
  f.alpha = p.alpha;
  f.boundary_enforced = p.boundary_enforced;
  f.u1.resize(p.grid.n);
  f.u2.resize(p.grid.n);
  for (int i = 0; i < p.grid.n; ++i) {
    const double r = p.rho[i];
    if (r == 0.0) {
      f.u1[i] = 0.0;
      f.u2[i] = 0.0;
    } else {
      f.u1[i] = r * std::cos(p.theta[i]);
      f.u2[i] = r * std::sin(p.theta[i]);
    }
  }
  if (p.boundary_enforced) {
    f.u1.front() = 1.0;
    f.u2.front() = 0.0;
    f.u1.back() = std::cos(p.alpha);
    f.u2.back() = std::sin(p.alpha);
  }
  return f;
}

ComplexField uniform_twist_field(int M, const ModelParams& p, const Grid& g) {
  validate(p);
  const double rate = kTwoPi * M + p.alpha;
  std::vector<double> rho(g.n, 1.0), theta(g.n);
  for (int i = 0; i < g.n; ++i) theta[i] = rate * g.x(i);
  return to_cartesian(make_polar_field(g, std::move(rho), std::move(theta), M,
                                       p.alpha, /*enforce_boundary=*/true));
}

double wrap_to_pi(double a) {
  double w = std::remainder(a, kTwoPi);  // in [-pi, pi]
  if (w <= -kPi) w = kPi;                // map -pi to +pi
  return w;
}

double piece_value_at(const JumpPiece& piece, double x) {
  const auto& xs = piece.x;
  const auto& th = piece.theta;
  const std::size_t m = xs.size();
  if (m == 1) return th[0];
  if (x <= xs.front()) {
    const double slope = (th[1] - th[0]) / (xs[1] - xs[0]);
    return th[0] + slope * (x - xs[0]);
  }
  if (x >= xs.back()) {
    const double slope = (th[m - 1] - th[m - 2]) / (xs[m - 1] - xs[m - 2]);
    return th[m - 1] + slope * (x - xs[m - 1]);
  }
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - xs.begin());
  const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return th[j - 1] + t * (th[j] - th[j - 1]);
}

namespace {

void validate_piece(const JumpPiece& piece) {
  if (piece.x.empty() || piece.x.size() != piece.theta.size()) {
    throw InvalidJumpMapError("piece must carry matching nonempty x/theta");
  }
  for (std::size_t i = 1; i < piece.x.size(); ++i) {
    if (!(piece.x[i] > piece.x[i - 1])) {
      throw InvalidJumpMapError("piece samples must be strictly increasing");
    }
  }
}

}  // namespace

JumpMap make_jump_map(std::vector<double> interior_jumps,
                      std::vector<JumpPiece> pieces, double alpha,
                      double twist_count) {
  // Strip any boundary entries the caller passed; membership of 0/1 is
  // re-derived from the piece traces below.
  std::sort(interior_jumps.begin(), interior_jumps.end());
  std::vector<double> interior;
  for (double j : interior_jumps) {
    if (j < 0.0 || j > 1.0) {
      throw InvalidJumpMapError("jump locations must lie in [0,1]");
    }
    if (j > 0.0 && j < 1.0) interior.push_back(j);
  }
  for (std::size_t i = 1; i < interior.size(); ++i) {
    if (interior[i] == interior[i - 1]) {
      throw InvalidJumpMapError("jump locations must be distinct");
    }
  }
  if (pieces.size() != interior.size() + 1) {
    throw InvalidJumpMapError("need exactly one piece per subinterval");
  }
  for (const auto& piece : pieces) validate_piece(piece);
  for (std::size_t k = 0; k < interior.size(); ++k) {
    if (pieces[k].x.back() >= interior[k] || pieces[k + 1].x.front() <= interior[k]) {
      throw InvalidJumpMapError("piece samples must lie inside their subinterval");
    }
  }

  // Minimality: merge pieces across candidates whose phase gap vanishes
  // modulo 2*pi.  The right piece is shifted by an exact 2*pi multiple.
  std::vector<double> kept_jumps;
  std::vector<JumpPiece> merged;
  merged.push_back(std::move(pieces[0]));
  for (std::size_t k = 0; k < interior.size(); ++k) {
    JumpPiece& left = merged.back();
    JumpPiece& right = pieces[k + 1];
    const double xj = interior[k];
    const double raw = piece_value_at(right, xj) - piece_value_at(left, xj);
    const double gap = wrap_to_pi(raw);
    if (std::abs(gap) > kJumpTolerance) {
      kept_jumps.push_back(xj);
      merged.push_back(std::move(right));
    } else {
      const double shift = -(raw - gap);  // exact multiple of 2*pi
      for (double& t : right.theta) t += shift;
      left.x.insert(left.x.end(), right.x.begin(), right.x.end());
      left.theta.insert(left.theta.end(), right.theta.begin(),
                        right.theta.end());
    }
  }

  // Boundary membership: 0 (resp. 1) is a jump iff the trace there violates
  // the boundary condition modulo 2*pi.
  JumpMap jm;
  const double trace0 = piece_value_at(merged.front(), 0.0);
  if (std::abs(wrap_to_pi(trace0)) > kJumpTolerance) jm.jumps.push_back(0.0);
  jm.jumps.insert(jm.jumps.end(), kept_jumps.begin(), kept_jumps.end());
  const double trace1 = piece_value_at(merged.back(), 1.0);
  if (std::abs(wrap_to_pi(trace1 - alpha)) > kJumpTolerance) {
    jm.jumps.push_back(1.0);
  }
  jm.pieces = std::move(merged);
  jm.alpha = alpha;
  jm.twist_count = twist_count;
  return jm;
}

std::uint64_t SplitMix64::next() {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double SplitMix64::uniform01() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::uniform(double a, double b) {
  return a + (b - a) * uniform01();
}

std::uint64_t stream_seed(std::uint64_t root, std::string_view kind,
                          std::uint64_t index) {
  // FNV-1a over the stream name, then mixed with root and index.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : kind) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  SplitMix64 mix(root ^ h);
  mix.next();
  mix.state ^= index * 0x9e3779b97f4a7c15ull;
  return mix.next();
}

std::string fmt_full(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace ch1d
