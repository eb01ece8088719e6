#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "ch1d/asymptotics.hpp"
#include "ch1d/core.hpp"
#include "ch1d/energy.hpp"
#include "ch1d/minimize.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ch1d;
using namespace test_support;

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

TEST_CASE("descent is monotone and reports convergence") {
  ModelParams p;
  p.eps = 0.05;
  p.L = 0.5;
  p.N = 1;
  p.alpha = 0.8;
  const Grid g = make_grid(201);
  SplitMix64 rng(11);
  const ComplexField u0 = random_smooth_field(g, 1, p.alpha, rng, 1.2, 0.4);

  std::vector<double> trace;
  SolverOptions opts;
  opts.energy_trace = &trace;
  const FreeMinimizeResult res = minimize_free(u0, p, opts);

  CHECK(res.report.converged);
  CHECK(res.report.grad_norm <= 1e-8 * g.n);  // automatic tolerance
  REQUIRE(trace.size() >= 2);
  CHECK(trace.front() ==
        doctest::Approx(energy_eps(u0, p).total).epsilon(1e-12));
  CHECK(trace.back() ==
        doctest::Approx(res.report.energy.total).epsilon(1e-12));
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    CHECK(trace[i + 1] <= trace[i] + 1e-12);
  }
  CHECK(static_cast<int>(trace.size()) == res.report.iterations + 1);
}

TEST_CASE("free minimizer reaches the smooth branch energy") {
  // Independently computed stationary value for the jump-free class-1
  // profile at L=1, N=1, alpha=2: total energy 1.106124927 in the continuum.
  // At n=801 the discrete minimum sits a few 1e-5 above it.
  ModelParams p;
  p.eps = 0.02;
  p.L = 1.0;
  p.N = 1;
  p.alpha = 2.0;
  const Grid g = make_grid(801);
  const FreeMinimizeResult res =
      minimize_free(uniform_twist_field(1, p, g), p);
  CHECK(res.report.converged);
  CHECK(std::abs(res.report.energy.total - 1.106124927) < 2e-4);
  REQUIRE(res.report.winding.has_value());
  CHECK(*res.report.winding == 1);
}

TEST_CASE("free descent from a dipped seed stays in the dipped basin") {
  // Same parameters; the one-dip configuration is a strictly higher local
  // minimum (independently computed value 1.177467787).  Gradient flow from
  // a matching seed must capture it, not slide to the global branch.
  ModelParams p;
  p.eps = 0.02;
  p.L = 1.0;
  p.N = 1;
  p.alpha = 2.0;
  const Grid g = make_grid(801);
  const JumpMap jm = limit_jump_map(LimitKind::OneJump, p);
  const ComplexField seed = build_recovery_sequence(jm, p.eps, g);
  const FreeMinimizeResult res = minimize_free(seed, p);
  CHECK(res.report.converged);
  CHECK(std::abs(res.report.energy.total - 1.177467787) < 5e-4);
  REQUIRE(res.report.winding.has_value());
  CHECK(*res.report.winding == 1);
  // Distinct from the global branch by two orders of magnitude more than
  // the tolerance above.
  CHECK(res.report.energy.total > 1.15);
}

TEST_CASE("winding-class solves stay in their class with the floor slack") {
  // The three classes around N = 2.  At eps = 0.01 the deviation of the
  // modulus is genuine but interior: classes below the imposed twist bulge
  // above 1, classes above it dip below, and nobody touches the 0.5 floor.
  ModelParams p;
  p.eps = 0.01;
  p.L = 0.5;
  p.N = 2;
  p.alpha = 1.0;
  const Grid g = make_grid(1001);
  double energies[4] = {};
  for (int M : {1, 2, 3}) {
    const WindingMinimizeResult res = minimize_winding_class(M, 0.5, p, g);
    CHECK(res.report.converged);
    CHECK(!res.report.constraint_active);
    CHECK(res.field.M == M);
    REQUIRE(res.report.winding.has_value());
    CHECK(*res.report.winding == M);
    CHECK(res.field.theta.front() == 0.0);
    CHECK(res.field.theta.back() ==
          doctest::Approx(kTwoPi * M + p.alpha).epsilon(1e-14));
    double rho_min = 2.0, rho_max = 0.0;
    for (double r : res.field.rho) {
      rho_min = std::min(rho_min, r);
      rho_max = std::max(rho_max, r);
    }
    CHECK(rho_min > 0.5);
    if (M < p.N) CHECK(rho_max > 1.0 + 1e-3);  // slow class bulges
    if (M > p.N) CHECK(rho_min < 1.0 - 1e-3);  // fast class dips
    energies[M] = res.report.energy.total;
  }
  // The class nearest the imposed twist wins by a wide margin; the energies
  // of the outer classes sit well below their limit values at this eps (the
  // interior modulus deviation absorbs twist), so no finer ordering is
  // asserted here.
  CHECK(energies[2] < energies[1]);
  CHECK(energies[2] < energies[3]);
  CHECK(energies[2] < 1.5);  // limit value 0.25 plus finite-eps overhead
}

TEST_CASE("an unreachably high modulus floor is reported as active") {
  // Class 1 at alpha = 2.8 twists faster than the imposed 2*pi, so its
  // modulus wants a genuine interior depression; a floor at 0.9999 clips it.
  // The clipped problem has a flat projected landscape and is not expected
  // to meet the gradient tolerance, so the iteration budget stays small.
  ModelParams p;
  p.eps = 0.05;
  p.L = 1.0;
  p.N = 1;
  p.alpha = 2.8;
  const Grid g = make_grid(401);
  SolverOptions opts;
  opts.max_iters = 3000;
  const WindingMinimizeResult res = minimize_winding_class(1, 0.9999, p, g, opts);
  CHECK(res.report.constraint_active);
  double rho_min = 2.0;
  for (double r : res.field.rho) rho_min = std::min(rho_min, r);
  CHECK(rho_min >= 0.9999 - 1e-12);
  CHECK(rho_min <= 0.9999 + 1e-9);

  // The permissive floor used everywhere else converges with an interior dip.
  const WindingMinimizeResult loose = minimize_winding_class(1, 0.5, p, g);
  CHECK(loose.report.converged);
  CHECK(!loose.report.constraint_active);
  double loose_min = 2.0;
  for (double r : loose.field.rho) loose_min = std::min(loose_min, r);
  CHECK(loose_min < 0.99);
  CHECK(loose_min > 0.5);
}

TEST_CASE("start construction") {
  ModelParams p;
  p.eps = 0.02;
  p.L = 1.0;
  p.N = 1;
  p.alpha = 0.9;
  const Grid g = make_grid(801);

  StartSpec uniform;
  uniform.kind = StartKind::UniformTwist;
  uniform.M = 2;
  const ComplexField u = make_start(uniform, p, g);
  const ComplexField ref = uniform_twist_field(2, p, g);
  for (int i = 0; i < g.n; ++i) {
    CHECK(u.u1[i] == doctest::Approx(ref.u1[i]).epsilon(1e-14).scale(1e-14));
  }

  StartSpec dip;
  dip.kind = StartKind::SeededDip;
  dip.M = 0;
  dip.x0 = 0.3;
  const ComplexField d = make_start(dip, p, g);
  CHECK(d.u1.front() == 1.0);
  CHECK(d.u1.back() == doctest::Approx(std::cos(p.alpha)).epsilon(1e-14));
  double rho_min = 2.0;
  int arg = -1;
  for (int i = 0; i < g.n; ++i) {
    const double r = std::hypot(d.u1[i], d.u2[i]);
    if (r < rho_min) {
      rho_min = r;
      arg = i;
    }
  }
  CHECK(rho_min < 0.5);
  CHECK(std::abs(g.x(arg) - 0.3) < 0.1);  // dip sits where requested
}

TEST_CASE("multistart keeps the lowest start and is deterministic") {
  ModelParams p;
  p.eps = 0.02;
  p.L = 1.0;
  p.N = 1;
  p.alpha = 2.0;
  const Grid g = make_grid(801);
  const std::vector<StartSpec> specs = default_start_specs(p);
  REQUIRE(specs.size() >= 3);
  bool has_uniform = false, has_dip = false;
  for (const StartSpec& s : specs) {
    has_uniform = has_uniform || s.kind == StartKind::UniformTwist;
    has_dip = has_dip || s.kind == StartKind::SeededDip;
  }
  CHECK(has_uniform);
  CHECK(has_dip);

  const MultistartResult a = multistart_global(p, g, specs);
  const MultistartResult b = multistart_global(p, g, specs);
  CHECK(a.winner == b.winner);
  CHECK(a.report.energy.total == b.report.energy.total);  // bitwise
  REQUIRE(a.winner >= 0);
  REQUIRE(a.winner < static_cast<int>(a.starts.size()));

  double best = std::numeric_limits<double>::infinity();
  for (const StartOutcome& s : a.starts) best = std::min(best, s.total);
  CHECK(a.report.energy.total == doctest::Approx(best).epsilon(1e-12));

  // At these parameters the global minimum is the smooth class-1 branch.
  CHECK(a.report.energy.total == doctest::Approx(1.106).epsilon(1e-3));
  CHECK(a.observed.jumps == 0);
  CHECK(a.observed.winding == 1);
}

TEST_CASE("observed class reads jumps and winding") {
  ModelParams p;
  p.eps = 0.01;
  p.L = 1.0;
  p.N = 1;
  p.alpha = 2.0;
  const Grid g = make_grid(1601);

  const ObservedClass smooth = observed_class(uniform_twist_field(1, p, g), p);
  CHECK(smooth.jumps == 0);
  CHECK(smooth.winding == 1);

  const ComplexField rec =
      build_recovery_sequence(limit_jump_map(LimitKind::OneJump, p), p.eps, g);
  const ObservedClass jumped = observed_class(rec, p);
  CHECK(jumped.jumps == 1);
}
