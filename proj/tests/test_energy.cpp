#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "ch1d/asymptotics.hpp"
#include "ch1d/core.hpp"
#include "ch1d/energy.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ch1d;
using namespace test_support;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

TEST_CASE("jump cost constant") {
  CHECK(jump_cost() == 2.0 * std::sqrt(2.0) / 3.0);
}

TEST_CASE("uniform spiral energy matches the closed-form cell sums") {
  // For u = e^{i 2 pi N x} every cell is identical, so the discrete energy
  // has a closed form: the forward difference gives |u'|^2 = (2 sin(pi N h)/h)^2,
  // the averaged modulus is cos(pi N h), and the twist density is sin(2 pi N h)/h.
  for (int N : {1, 2, 3}) {
    for (int n : {101, 501}) {
      ModelParams p;
      p.eps = 0.01;
      p.L = 0.7;
      p.N = N;
      p.alpha = 0.0;
      const Grid g = make_grid(n);
      const ComplexField u = uniform_twist_field(N, p, g);
      const EnergyBreakdown e = energy_eps(u, p);

      const double h = g.h;
      const double grad_exact =
          2.0 * p.eps * std::pow(std::sin(kPi * N * h) / h, 2.0);
      const double pot_exact = std::pow(std::sin(kPi * N * h), 4.0) / (4.0 * p.eps);
      const double twist_exact =
          0.5 * p.L * std::pow(std::sin(kTwoPi * N * h) / h - kTwoPi * N, 2.0);

      CHECK(e.gradient_term ==
            doctest::Approx(grad_exact).epsilon(1e-12));
      CHECK(e.potential_term ==
            doctest::Approx(pot_exact).epsilon(1e-10));
      CHECK(e.twist_term ==
            doctest::Approx(twist_exact).epsilon(1e-8).scale(1e-8));
      CHECK(e.total == doctest::Approx(e.gradient_term + e.potential_term +
                                       e.twist_term)
                           .epsilon(1e-13));
    }
  }
}

TEST_CASE("uniform spiral converges to 2 (pi N)^2 eps at order two") {
  ModelParams p;
  p.eps = 0.01;
  p.L = 1.0;
  p.alpha = 0.0;
  for (int N : {1, 2, 3}) {
    p.N = N;
    double e[3];
    // The potential and twist channels contribute O(h^4/eps) terms; the base
    // grid is fine enough that they stay ~1% of the leading h^2 term.
    int n = 1001;
    for (int k = 0; k < 3; ++k) {
      const Grid g = make_grid(n);
      e[k] = energy_eps(uniform_twist_field(N, p, g), p).total;
      n = 2 * n - 1;  // halves h
    }
    const double order = observed_order(e[0], e[1], e[2]);
    CHECK(order == doctest::Approx(2.0).epsilon(0.025));
    const double limit = richardson_limit(e[1], e[2], order);
    const double expected = 2.0 * kPi * kPi * N * N * p.eps;
    CHECK(std::abs(limit - expected) / expected < 1e-6);
  }
}

TEST_CASE("matched-twist spiral has fourth-order twist residual") {
  // With theta' == tau the continuum twist term vanishes; the discrete one
  // is ((sin(tau h)/h - tau)^2 L/2) = O(h^4).
  ModelParams p;
  p.eps = 0.05;
  p.L = 1.0;
  p.N = 1;
  p.alpha = 0.0;
  const Grid g = make_grid(1001);
  const EnergyBreakdown e = energy_eps(uniform_twist_field(1, p, g), p);
  CHECK(e.twist_term < 1e-7);
  CHECK(e.twist_term > 0.0);  // discrete, not identically zero
}

TEST_CASE("analytic gradients match finite differences") {
  SplitMix64 rng(91);
  for (double eps : {0.05, 0.01}) {
    for (double L : {0.5, 2.0}) {
      ModelParams p;
      p.eps = eps;
      p.L = L;
      p.N = 1;
      p.alpha = 1.2;
      const Grid g = make_grid(101);
      for (int rep = 0; rep < 5; ++rep) {
        const ComplexField u = random_smooth_field(g, 1, p.alpha, rng);
        const FieldGrad analytic = grad_energy_eps(u, p);
        const FieldGrad fd = fd_grad_cartesian(u, p);
        CHECK(rel_mismatch(analytic, fd) < 1e-6);
        CHECK(analytic.g1.front() == 0.0);
        CHECK(analytic.g1.back() == 0.0);
        CHECK(analytic.g2.front() == 0.0);
        CHECK(analytic.g2.back() == 0.0);

        const PolarField q = random_smooth_polar(g, 1, p.alpha, rng);
        const PolarGrad pa = grad_energy_eps_polar(q, p);
        const PolarGrad pf = fd_grad_polar(q, p);
        CHECK(rel_mismatch(pa, pf) < 1e-6);
        CHECK(pa.g_rho.front() == 0.0);
        CHECK(pa.g_theta.back() == 0.0);
      }
    }
  }
}

TEST_CASE("polar evaluator reproduces the cartesian sum to rounding") {
  SplitMix64 rng(17);
  ModelParams p;
  p.eps = 0.02;
  p.L = 1.3;
  p.N = 2;
  p.alpha = 0.9;
  const Grid g = make_grid(257);
  for (int rep = 0; rep < 8; ++rep) {
    const PolarField q = random_smooth_polar(g, 2, p.alpha, rng);
    const EnergyBreakdown ep = energy_eps_polar(q, p);
    const EnergyBreakdown ec = energy_eps(to_cartesian(q), p);
    // Same discrete functional in different variables: agreement far below
    // any O(h^2) difference.
    CHECK(ep.total ==
          doctest::Approx(ec.total).epsilon(1e-12));
    CHECK(ep.gradient_term ==
          doctest::Approx(ec.gradient_term).epsilon(1e-11));
    CHECK(ep.potential_term ==
          doctest::Approx(ec.potential_term).epsilon(1e-10).scale(1e-12));
    CHECK(ep.twist_term ==
          doctest::Approx(ec.twist_term).epsilon(1e-11).scale(1e-12));
  }
}

TEST_CASE("rescaled evaluator equals the direct evaluation of w e^{i kappa x}") {
  ModelParams p;
  p.beta = 0.25;
  p.eps = std::pow(4.7, -4.0);  // eps^{-beta} = 4.7, floor 4
  p.L = 0.8;
  p.alpha = 1.1;
  const Grid g = make_grid(801);
  SplitMix64 rng(5);
  for (int rep = 0; rep < 4; ++rep) {
    const ComplexField w = random_smooth_field(g, 0, p.alpha, rng, 0.5, 0.2);
    const ComplexField u = unrescale_from_w(w, p);
    const EnergyBreakdown direct = energy_eps(u, p);
    const EnergyBreakdown rescaled = energy_rescaled(w, p);
    CHECK(rescaled.total ==
          doctest::Approx(direct.total).epsilon(1e-10));
    CHECK(rescaled.twist_term ==
          doctest::Approx(direct.twist_term).epsilon(1e-9).scale(1e-10));
  }
  ModelParams standard;
  standard.N = 1;
  const ComplexField w0 = uniform_twist_field(0, standard, g);
  CHECK_THROWS_AS(energy_rescaled(w0, standard), InvalidParameterError);
}

namespace {

JumpPiece sampled_linear(double x0, double x1, double th0, double slope,
                         int m) {
  JumpPiece piece;
  for (int i = 0; i < m; ++i) {
    const double x = x0 + (x1 - x0) * static_cast<double>(i) / (m - 1);
    piece.x.push_back(x);
    piece.theta.push_back(th0 + slope * (x - x0));
  }
  return piece;
}

}  // namespace

TEST_CASE("limit energy of jump maps has the closed form") {
  const double L = 0.6;
  const double target = kTwoPi;  // N = 1

  // Jump-free constant slope s over [0,1]: (L/2)(s - target)^2.
  {
    const double s = 2.0;
    const JumpMap jm =
        make_jump_map({}, {sampled_linear(0.0, 1.0, 0.0, s, 41)}, 2.0, 1.0);
    CHECK(jm.jumps.empty());
    const EnergyBreakdown e = energy_gamma(jm, L, target);
    CHECK(e.total ==
          doctest::Approx(0.5 * L * (s - target) * (s - target)).epsilon(1e-12));
    CHECK(e.gradient_term == 0.0);
    CHECK(e.potential_term == 0.0);
  }

  // One jump at 0.5, slope target on both sides: exactly one jump cost,
  // split half into the gradient and half into the potential channel.
  {
    const JumpMap jm = make_jump_map(
        {0.5},
        {sampled_linear(0.0, 0.499, 0.0, target, 61),
         sampled_linear(0.501, 1.0, 1.0, target, 61)},
        // trace(1-) = 1.0 + target*0.499 -> alpha chosen to match mod 2*pi
        wrap_to_pi(1.0 + target * 0.499) >= 0
            ? wrap_to_pi(1.0 + target * 0.499)
            : wrap_to_pi(1.0 + target * 0.499) + kTwoPi,
        1.0);
    REQUIRE(jm.jumps.size() == 1);
    const EnergyBreakdown e = energy_gamma(jm, L, target);
    CHECK(e.gradient_term == doctest::Approx(jump_cost() / 2).epsilon(1e-14));
    CHECK(e.potential_term == doctest::Approx(jump_cost() / 2).epsilon(1e-14));
    CHECK(e.twist_term == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(e.total == doctest::Approx(jump_cost()).epsilon(1e-10));
  }

  // Two different slopes around a jump integrate piecewise.
  {
    const double s1 = 1.0, s2 = 9.0;
    const JumpMap jm = make_jump_map(
        {0.5},
        {sampled_linear(0.0, 0.4995, 0.0, s1, 1001),
         sampled_linear(0.5005, 1.0, 3.0, s2, 1001)},
        wrap_to_pi(3.0 + s2 * 0.4995) >= 0
            ? wrap_to_pi(3.0 + s2 * 0.4995)
            : wrap_to_pi(3.0 + s2 * 0.4995) + kTwoPi,
        1.0);
    REQUIRE(jm.jumps.size() == 1);
    const EnergyBreakdown e = energy_gamma(jm, L, target);
    const double tw = 0.5 * L *
                      ((s1 - target) * (s1 - target) * 0.4995 +
                       (s2 - target) * (s2 - target) * 0.4995);
    // Pieces span [0, 0.4995] and [0.5005, 1]; the slope is exact on each
    // cell, so only the covered length enters.
    CHECK(e.twist_term == doctest::Approx(tw).epsilon(1e-10));
    CHECK(e.total == doctest::Approx(tw + jump_cost()).epsilon(1e-10));
  }

  // A piece with a single sample cannot be integrated.
  {
    JumpPiece single;
    single.x = {0.25};
    single.theta = {0.0};
    JumpMap jm;
    jm.jumps = {};
    jm.pieces = {single};
    jm.alpha = 0.0;
    jm.twist_count = 1.0;
    CHECK_THROWS_AS(energy_gamma(jm, L, target), InvalidJumpMapError);
  }
}

TEST_CASE("fused evaluators agree with the breakdown forms") {
  SplitMix64 rng(23);
  ModelParams p;
  p.eps = 0.03;
  p.L = 1.1;
  p.N = 1;
  p.alpha = 0.4;
  const Grid g = make_grid(151);
  const ComplexField u = random_smooth_field(g, 1, p.alpha, rng);

  const double tau = p.twist_target();
  CHECK(energy_cartesian(u.u1, u.u2, g, p.eps, p.L, tau) ==
        doctest::Approx(energy_eps(u, p).total).epsilon(1e-14));

  std::vector<double> g1, g2;
  const double e = energy_and_grad_cartesian(u.u1, u.u2, g, p.eps, p.L, tau,
                                             g1, g2);
  CHECK(e == doctest::Approx(energy_eps(u, p).total).epsilon(1e-14));
  const FieldGrad ref = grad_energy_eps(u, p);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(g1[i] == doctest::Approx(ref.g1[i]).epsilon(1e-13).scale(1e-13));
    CHECK(g2[i] == doctest::Approx(ref.g2[i]).epsilon(1e-13).scale(1e-13));
  }

  const PolarField q = random_smooth_polar(g, 1, p.alpha, rng);
  std::vector<double> gr, gt;
  const double ep = energy_and_grad_polar(q.rho, q.theta, g, p.eps, p.L, tau,
                                          gr, gt);
  CHECK(ep == doctest::Approx(energy_eps_polar(q, p).total).epsilon(1e-14));
  const PolarGrad refp = grad_energy_eps_polar(q, p);
  for (std::size_t i = 0; i < gr.size(); ++i) {
    CHECK(gr[i] == doctest::Approx(refp.g_rho[i]).epsilon(1e-13).scale(1e-13));
    CHECK(gt[i] == doctest::Approx(refp.g_theta[i]).epsilon(1e-13).scale(1e-13));
  }
}
