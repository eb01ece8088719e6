#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "ch1d/asymptotics.hpp"
#include "ch1d/core.hpp"
#include "ch1d/lifting.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ch1d;
using namespace test_support;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

TEST_CASE("unwrap recovers the winding class of spirals") {
  ModelParams p;
  p.alpha = 0.5;
  const Grid g = make_grid(201);
  for (int M : {0, 1, 2, 5}) {
    const ComplexField u = uniform_twist_field(M, p, g);
    const PolarField lifted = unwrap_phase(u);
    CHECK(lifted.M == M);
    CHECK(winding_number(u) == M);
    CHECK(lifted.theta.front() >= 0.0);
    CHECK(lifted.theta.front() < kTwoPi);
    // Lift and reconstruction agree with the original field.
    const ComplexField back = to_cartesian(lifted);
    for (int i = 0; i < g.n; ++i) {
      CHECK(back.u1[i] == doctest::Approx(u.u1[i]).epsilon(1e-12).scale(1e-12));
      CHECK(back.u2[i] == doctest::Approx(u.u2[i]).epsilon(1e-12).scale(1e-12));
    }
  }
}

TEST_CASE("unwrap round-trips random smooth fields") {
  SplitMix64 rng(3);
  const Grid g = make_grid(301);
  for (int rep = 0; rep < 5; ++rep) {
    const PolarField q = random_smooth_polar(g, 2, 1.1, rng, 0.6, 0.3);
    const PolarField lifted = unwrap_phase(to_cartesian(q));
    CHECK(lifted.M == 2);
    for (int i = 0; i < g.n; ++i) {
      CHECK(lifted.rho[i] ==
            doctest::Approx(q.rho[i]).epsilon(1e-12).scale(1e-12));
      CHECK(lifted.theta[i] ==
            doctest::Approx(q.theta[i]).epsilon(1e-10).scale(1e-10));
    }
  }
}

TEST_CASE("too-coarse sampling of a fast spiral is reported as aliasing") {
  // Class 3 with alpha = 0.5 rotates by 19.35 rad: 7 nodes (6 steps) put each
  // principal-value increment at 3.06 rad, beyond the pi - 0.1 guard; 8 nodes
  // bring it down to 2.76 and the lift succeeds.
  ModelParams p;
  p.alpha = 0.5;
  const ComplexField coarse = uniform_twist_field(3, p, make_grid(7));
  CHECK_THROWS_AS(unwrap_phase(coarse), AliasingError);
  const ComplexField fine = uniform_twist_field(3, p, make_grid(8));
  CHECK(unwrap_phase(fine).M == 3);
  CHECK(winding_number(fine) == 3);
}

TEST_CASE("vanishing modulus blocks the lift") {
  const Grid g = make_grid(51);
  std::vector<double> u1(51, 1.0), u2(51, 0.0);
  u1[25] = 0.0;  // exact zero
  const ComplexField u = make_complex_field(g, u1, u2, 0.0, true);
  CHECK_THROWS_AS(unwrap_phase(u), VanishingModulusError);
}

namespace {

// Multiplies a Gaussian modulus dip (depth `depth`, width `width`) into a
// field at x0 without touching its phase.
ComplexField with_dip(const ComplexField& u, double x0, double depth,
                      double width) {
  ComplexField out = u;
  for (int i = 0; i < u.grid.n; ++i) {
    const double x = u.grid.x(i);
    const double f =
        1.0 - depth * std::exp(-0.5 * std::pow((x - x0) / width, 2.0));
    out.u1[i] *= f;
    out.u2[i] *= f;
  }
  return out;
}

}  // namespace

TEST_CASE("bad intervals are found where the modulus dips") {
  ModelParams p;
  p.alpha = 0.3;
  const Grid g = make_grid(2001);
  const ComplexField smooth = uniform_twist_field(1, p, g);

  // No dips: empty report.
  CHECK(detect_bad_intervals(smooth, 4).count == 0);

  // Two deep dips produce two intervals, each containing its center.
  ComplexField dipped = with_dip(smooth, 0.3, 0.97, 0.01);
  dipped = with_dip(dipped, 0.7, 0.99, 0.01);
  const BadIntervalReport rep = detect_bad_intervals(dipped, 4);
  REQUIRE(rep.count == 2);
  CHECK(rep.q == 4);
  const auto contains = [&](const BadInterval& b, double x) {
    return g.x(b.first) <= x && x <= g.x(b.last);
  };
  CHECK(contains(rep.intervals[0], 0.3));
  CHECK(contains(rep.intervals[1], 0.7));
  // Interval membership: every node inside is at or below 1 - 2^-4.
  for (int i = rep.intervals[0].first; i <= rep.intervals[0].last; ++i) {
    CHECK(std::hypot(dipped.u1[i], dipped.u2[i]) <= 1.0 - 1.0 / 16.0 + 1e-12);
  }

  // A shallow dip (modulus stays above 2^-q) is not bad.
  const ComplexField shallow = with_dip(smooth, 0.5, 0.5, 0.01);
  CHECK(detect_bad_intervals(shallow, 4).count == 0);

  CHECK_THROWS_AS(detect_bad_intervals(smooth, 1), InvalidParameterError);
}

TEST_CASE("bad-interval count bound has its closed form") {
  // energy / (sqrt(2) * [z - z^3/3] between 2^-q and 1 - 2^-q), q = 4.
  CHECK(bad_interval_count_bound(2.0, 4) ==
        doctest::Approx(2.3553618).epsilon(1e-6));
  // Linear in the energy bound.
  CHECK(bad_interval_count_bound(4.0, 4) ==
        doctest::Approx(2.0 * bad_interval_count_bound(2.0, 4)).epsilon(1e-13));
}

TEST_CASE("extracting the jump structure of smooth and jumped fields") {
  // A genuine one-jump structure: slope 2*pi on both sides, a -4 rad jump at
  // 0.5, realized at eps = 0.01 and read back.
  const double gap = -4.0;
  const double alpha = wrap_to_pi(kTwoPi * 0.5 + gap + kTwoPi * 0.5);  // = wrap(2pi + gap)
  REQUIRE(alpha > 0.0);
  ModelParams p;
  p.eps = 0.01;
  p.L = 1.0;
  p.N = 1;
  p.alpha = alpha;
  const Grid g = make_grid(1601);

  JumpPiece left, right;
  for (int i = 0; i <= 100; ++i) {
    const double x = 0.49 * i / 100.0;
    left.x.push_back(x);
    left.theta.push_back(kTwoPi * x);
  }
  for (int i = 0; i <= 100; ++i) {
    const double x = 0.51 + 0.49 * i / 100.0;
    right.x.push_back(x);
    right.theta.push_back(kTwoPi * x + gap);
  }
  const JumpMap jm = make_jump_map({0.5}, {left, right}, alpha, 1.0);
  REQUIRE(jm.jumps.size() == 1);

  const ComplexField rec = build_recovery_sequence(jm, p.eps, g);
  const JumpMap found = extract_jump_map(rec, p);
  REQUIRE(found.jumps.size() == 1);
  CHECK(std::abs(found.jumps[0] - 0.5) < 2.0 * std::sqrt(p.eps) + p.eps * p.eps);
  REQUIRE(found.pieces.size() == 2);
  const double found_gap = piece_value_at(found.pieces[1], found.jumps[0]) -
                           piece_value_at(found.pieces[0], found.jumps[0]);
  CHECK(wrap_to_pi(found_gap - gap) ==
        doctest::Approx(0.0).scale(1.0).epsilon(0.05));
  CHECK(found.twist_count == 1.0);

  // A smooth spiral extracts to a jump-free map with one piece.
  const ComplexField smooth = uniform_twist_field(1, p, g);
  const JumpMap none = extract_jump_map(smooth, p);
  CHECK(none.jumps.empty());
  CHECK(none.pieces.size() == 1);

  // A deep modulus dip with no phase slip is a removable candidate: the
  // pieces merge and no jump is reported.
  const ComplexField dipped = with_dip(smooth, 0.5, 0.97, 0.01);
  const JumpMap merged = extract_jump_map(dipped, p);
  CHECK(merged.jumps.empty());
  CHECK(merged.pieces.size() == 1);
}

TEST_CASE("two separated jumps are both recovered") {
  ModelParams p;
  p.eps = 0.005;
  p.L = 1.0;
  p.N = 0;
  const double g1 = 2.0, g2 = -2.5;
  const double alpha = std::fmod(g1 + g2 + kTwoPi, kTwoPi);  // in [0, 2*pi)
  REQUIRE(alpha >= 0.0);
  p.alpha = alpha;
  const Grid grid = make_grid(3201);

  JumpPiece a, b, c;
  for (int i = 0; i <= 50; ++i) {
    const double x = 0.29 * i / 50.0;
    a.x.push_back(x);
    a.theta.push_back(0.0);
  }
  for (int i = 0; i <= 50; ++i) {
    const double x = 0.31 + 0.38 * i / 50.0;
    b.x.push_back(x);
    b.theta.push_back(g1);
  }
  for (int i = 0; i <= 50; ++i) {
    const double x = 0.71 + 0.29 * i / 50.0;
    c.x.push_back(x);
    c.theta.push_back(g1 + g2);
  }
  const JumpMap jm = make_jump_map({0.3, 0.7}, {a, b, c}, alpha, 0.0);
  REQUIRE(jm.jumps.size() == 2);

  const ComplexField rec = build_recovery_sequence(jm, p.eps, grid);
  const JumpMap found = extract_jump_map(rec, p);
  REQUIRE(found.jumps.size() == 2);
  const double tol = 2.0 * std::sqrt(p.eps) + p.eps * p.eps;
  CHECK(std::abs(found.jumps[0] - 0.3) < tol);
  CHECK(std::abs(found.jumps[1] - 0.7) < tol);
}
