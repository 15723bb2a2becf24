#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fastswitch/closure.hpp"
#include "fastswitch/entropy.hpp"
#include "fastswitch/micro.hpp"
#include "fastswitch/presets.hpp"

using namespace fastswitch;

namespace {

Model coexistence() { return preset_config("paper-coexistence").model; }

Model symmetric_constant(double c, double ab) {
  Model m;
  m.p.a = ab;
  m.p.b = ab;
  m.phi = ConversionRate::constant(c);
  m.psi = ConversionRate::constant(c);
  return m;
}

}  // namespace

TEST(Reactions, VanishAtOrigin) {
  const Reactions r = eval_reactions(coexistence().p, 0, 0, 0);
  EXPECT_EQ(r.f_a, 0.0);
  EXPECT_EQ(r.f_b, 0.0);
  EXPECT_EQ(r.f_v, 0.0);
}

TEST(Reactions, VanishAtCoexistenceState) {
  const Reactions r = eval_reactions(coexistence().p, 1.5, 6.0, 2.0);
  EXPECT_EQ(r.f_a, 0.0);
  EXPECT_EQ(r.f_b, 0.0);
  EXPECT_EQ(r.f_v, 0.0);
}

TEST(Reactions, LogisticHandValue) {
  ModelParams p;
  p.a = 1.0;
  p.eta_a = 2.0;
  EXPECT_DOUBLE_EQ(eval_reactions(p, 0.5, 0.0, 0.0).f_a, 0.5);
}

TEST(ConversionTerm, ZeroWithoutU) {
  const Model m = coexistence();
  for (double v : {0.0, 1.0, 7.5}) EXPECT_EQ(eval_Q(m, 0.0, 0.0, v), 0.0);
}

TEST(ConversionTerm, BalancedAtCoexistence) { EXPECT_DOUBLE_EQ(eval_Q(coexistence(), 1.5, 6.0, 2.0), 0.0); }

TEST(ConversionTerm, PositiveWithOnlyUb) {
  const Model m = coexistence();
  for (double ub : {1e-6, 0.3, 4.0}) EXPECT_GT(eval_Q(m, 0.0, ub, 0.0), 0.0);
}

TEST(Closure, ZeroTotalGivesZero) {
  const Model m = coexistence();
  EXPECT_EQ(solve_ub_star(m, 0.0, 3.0), 0.0);
}

TEST(Closure, CoexistenceRoot) { EXPECT_NEAR(solve_ub_star(coexistence(), 7.5, 2.0), 6.0, 1e-11); }

TEST(Closure, SymmetricConstantRatesSplitEvenly) {
  const Model m = symmetric_constant(0.7, 2.0);
  for (double u : {0.1, 1.0, 13.0}) EXPECT_NEAR(solve_ub_star(m, u, 0.4), u / 2, 1e-12 * std::max(1.0, u));
}

TEST(Closure, ContractOnRandomInputs) {
  const Model m = coexistence();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(1e-3, 20.0);
  const double tol = 1e-12;
  for (int k = 0; k < 2000; ++k) {
    const double u = U(rng), v = U(rng);
    const double ub = solve_ub_star(m, u, v, tol);
    ASSERT_GT(ub, 0.0);
    ASSERT_LT(ub, u);
    const double scale = std::max({1.0, m.phi.value((u + v) / m.p.b) * u, m.psi.value(u / m.p.a) * u});
    ASSERT_LE(std::abs(eval_Q(m, u - ub, ub, v)), tol * scale);
    // u_b* and u_a* both increase with u.
    const double ub2 = solve_ub_star(m, u * 1.01, v, tol);
    ASSERT_GT(ub2, ub);
    ASSERT_GT(u * 1.01 - ub2, u - ub);
  }
}

TEST(Closure, StepRateReportsJump) {
  Model m = preset_config("paper-nonunique").model;
  // psi jumps at u_a = 1.6; for large u the root may sit on the jump.
  bool saw_jump = false;
  for (double u = 1.7; u < 4.0; u += 0.05) {
    const ClosureSolution s = solve_closure(m, u, 0.0);
    ASSERT_GE(s.u_b, 0.0);
    ASSERT_LE(s.u_b, u);
    saw_jump = saw_jump || s.at_jump;
  }
  EXPECT_TRUE(saw_jump);
}

TEST(ClosurePartials, CoexistenceValues) {
  const ClosurePartials cp = closure_partials_normalized(coexistence(), 1.0, 0.75, 0.25);
  EXPECT_DOUBLE_EQ(cp.beta, 11.0);
  EXPECT_DOUBLE_EQ(cp.gamma, 2.25);
  EXPECT_DOUBLE_EQ(cp.theta, 0.75);
}

TEST(ClosurePartials, ConstantPhiHasNoTheta) {
  Model m = coexistence();
  m.phi = ConversionRate::constant(2.0);
  for (double s : {0.0, 0.3, 2.0}) EXPECT_EQ(closure_partials_normalized(m, 0.5, s, 0.2).theta, 0.0);
}

TEST(ClosurePartials, BetaAtZeroIsPsiZero) {
  const Model m = coexistence();
  EXPECT_DOUBLE_EQ(closure_partials_normalized(m, 0.0, 0.5, 0.1).beta, m.psi.value(0.0));
}

TEST(ClosureDerivative, CoexistenceValue) {
  EXPECT_NEAR(dub_star_du(coexistence(), 7.5, 2.0), 11.0 / 13.25, 1e-10);
}

TEST(ClosureDerivative, SymmetricHalf) { EXPECT_NEAR(dub_star_du(symmetric_constant(1.3, 1.0), 2.0, 0.5), 0.5, 1e-14); }

TEST(ClosureDerivative, MatchesFiniteDifference) {
  const Model m = coexistence();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.1, 10.0);
  for (int k = 0; k < 200; ++k) {
    const double u = U(rng), v = U(rng), h = 1e-5 * u;
    const double fd = (solve_ub_star(m, u + h, v, 1e-15) - solve_ub_star(m, u - h, v, 1e-15)) / (2 * h);
    const double d = dub_star_du(m, u, v);
    ASSERT_GT(d, 0.0);
    ASSERT_LT(d, 1.0);
    ASSERT_NEAR(d, fd, 1e-6);
  }
}

TEST(Rates, RejectsDecreasingAffine) {
  Model m = coexistence();
  m.phi = ConversionRate::affine(-1.0, 2.0);
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(Rates, StepNeedsFlag) {
  Model m = preset_config("paper-nonunique").model;
  EXPECT_NO_THROW(m.validate());
  m.allow_h1_violation = false;
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(Rates, TableInterpolatesAndIsFlatOutside) {
  const ConversionRate r = ConversionRate::table({0.0, 1.0, 2.0}, {1.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(r.value(0.5), 2.0);
  EXPECT_DOUBLE_EQ(r.value(1.5), 3.5);
  EXPECT_DOUBLE_EQ(r.value(5.0), 4.0);
  EXPECT_DOUBLE_EQ(r.derivative(0.5), 2.0);
}

TEST(Rates, ScaledForm) {
  const ConversionRate base = ConversionRate::affine(1.0, 0.5);
  const ConversionRate r = ConversionRate::scaled(2.0, 3.0, base);
  EXPECT_DOUBLE_EQ(r.value(1.0), 2.0 * 3.5);
  EXPECT_DOUBLE_EQ(r.derivative(1.0), 6.0);
}

TEST(Entropy, ZeroAtZero) {
  const Model m = coexistence();
  EXPECT_EQ(entropy_density_h1(m, 0.0), 0.0);
  EXPECT_EQ(entropy_density_h2(m, 0.0, 3.0), 0.0);
}

TEST(Entropy, AffineHandValue) { EXPECT_NEAR(entropy_density_h1(coexistence(), 1.5), 4.875, 1e-13); }

TEST(Entropy, ConstantPhiIsQuadratic) {
  Model m = coexistence();
  m.phi = ConversionRate::constant(1.7);
  for (double v : {0.0, 2.0}) EXPECT_NEAR(entropy_density_h2(m, 3.0, v), 1.7 * 4.5, 1e-13);
}

TEST(Entropy, QuadratureMatchesClosedFormForNonAffineWrapper) {
  // A table with the same line forces the quadrature path.
  Model a = coexistence();
  Model t = a;
  t.phi = ConversionRate::table({0.0, 10.0}, {0.5, 10.5});
  for (double ub : {0.5, 3.0, 6.0})
    for (double v : {0.0, 2.0}) EXPECT_NEAR(entropy_density_h2(t, ub, v), entropy_density_h2(a, ub, v), 1e-9);
}

TEST(Entropy, NondecreasingAndNonnegative) {
  const Model m = preset_config("paper-nonunique").model;
  double prev = 0.0;
  for (double u = 0.0; u < 4.0; u += 0.1) {
    const double h = entropy_density_h1(m, u);
    ASSERT_GE(h, prev - 1e-14);
    prev = h;
  }
}

TEST(Micro, IdentityScaling) {
  MicroParams mp;
  mp.Phi = ConversionRate::affine(1.0, 1.0);
  mp.Psi = ConversionRate::affine(1.0, 1.0);
  const Model m = map_micro_to_meso(mp);
  EXPECT_EQ(m.p.eta_a, 1.0);
  EXPECT_EQ(m.p.eta_b, 1.0);
  EXPECT_EQ(m.p.eta_v, 1.0);
  EXPECT_EQ(m.p.a, 1.0);
  EXPECT_EQ(m.p.b, 1.0);
}

TEST(Micro, ConstantRatePassesThrough) {
  MicroParams mp;
  mp.Phi = ConversionRate::constant(2.5);
  const Model m = map_micro_to_meso(mp);
  for (double x : {0.0, 0.5, 0.99}) EXPECT_EQ(m.phi.value(x), 2.5);
}

TEST(Micro, CarryingCapacityRatio) {
  MicroParams mp;
  mp.r1 = 1.5;
  mp.p1 = 1.0;
  EXPECT_DOUBLE_EQ(map_micro_to_meso(mp).p.a, 1.5);
}

TEST(Micro, ComposedRateCapped) {
  const Model m = preset_config("micro-validation").model;
  EXPECT_THROW(m.phi.value(0.9995), DomainError);
}

TEST(Micro, SlowManifoldReproducesMesoRhs) {
  const MicroParams mp = *preset_config("micro-validation").micro;
  const Model m = map_micro_to_meso(mp);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.05, 1.5);
  for (int k = 0; k < 500; ++k) {
    const double U1 = U(rng) * 0.5, U2 = U(rng) * 2.0, V = U(rng) * 2.0;
    const auto slow = micro_slow_rhs(mp, U1, U2, V);
    const MesoPoint z = micro_to_meso_state(mp, U1, U2, V);
    const Reactions r = eval_reactions(m.p, z.u_a, z.u_b, z.v);
    const double q = eval_Q(m, z.u_a, z.u_b, z.v) / m.p.epsilon;
    const double scale = 1.0 + std::abs(q);
    ASSERT_NEAR(slow[0], r.f_a + q, 1e-12 * scale);
    ASSERT_NEAR(slow[1], r.f_b - q, 1e-12 * scale);
    ASSERT_NEAR(slow[2] * mp.pV / mp.p2, r.f_v, 1e-12 * scale);
  }
}
