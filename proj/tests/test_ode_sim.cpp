#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fastswitch/fast_flow.hpp"
#include "fastswitch/ode_sim.hpp"
#include "fastswitch/presets.hpp"

using namespace fastswitch;

namespace {
Model with_eps(const std::string& preset, double eps) {
  Model m = preset_config(preset).model;
  m.p.epsilon = eps;
  return m;
}
}  // namespace

TEST(FastFlow, ConservesTotalAndRelaxes) {
  const Model m = with_eps("paper-coexistence", 1e-3);
  const FastFlow f(m, m.p.epsilon);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 10.0);
  for (int k = 0; k < 500; ++k) {
    double ua = U(rng), ub = U(rng);
    const double v = U(rng), u = ua + ub;
    const double q0 = std::abs(eval_Q(m, ua, ub, v));
    f.advance(ua, ub, v, 1e-3);
    ASSERT_NEAR(ua + ub, u, 1e-14 * std::max(1.0, u));
    ASSERT_GE(ua, 0.0);
    ASSERT_GE(ub, 0.0);
    ASSERT_LE(std::abs(eval_Q(m, ua, ub, v)), q0 + 1e-12);
  }
}

TEST(FastFlow, LongTimeReachesClosure) {
  const Model m = with_eps("paper-coexistence", 1e-2);
  const FastFlow f(m, m.p.epsilon);
  double ua = 4.0, ub = 2.0;
  f.advance(ua, ub, 2.5, 1.0);
  EXPECT_NEAR(ub, solve_ub_star(m, 6.0, 2.5), 1e-7);
}

TEST(MesoOde, CoexistenceConverges) {
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const OdeTrajectory tr = integrate_meso_ode(with_eps("paper-coexistence", eps), {4, 2, 2.5}, 30.0);
    const auto& y = tr.states.back();
    EXPECT_NEAR(y[0] + y[1], 7.5, 1e-3) << eps;
    EXPECT_NEAR(y[2], 2.0, 1e-3) << eps;
    EXPECT_EQ(tr.times.back(), 30.0);
  }
}

TEST(MesoOde, FixedPointStays) {
  const OdeTrajectory tr = integrate_meso_ode(with_eps("paper-coexistence", 1e-3), {1.5, 6.0, 2.0}, 10.0);
  for (const auto& y : tr.states) {
    ASSERT_NEAR(y[0], 1.5, 1e-9);
    ASSERT_NEAR(y[1], 6.0, 1e-9);
    ASSERT_NEAR(y[2], 2.0, 1e-9);
  }
}

TEST(MesoOde, TimesIncreaseAndStatesNonnegative) {
  const OdeTrajectory tr = integrate_meso_ode(with_eps("paper-extinction", 1e-2), {4, 2, 2.5}, 30.0);
  for (std::size_t i = 1; i < tr.size(); ++i) ASSERT_GT(tr.times[i], tr.times[i - 1]);
  for (const auto& y : tr.states)
    for (double x : y) ASSERT_GE(x, 0.0);
}

TEST(MesoOde, ExtinctionDecaysAlgebraically) {
  // At the boundary case the v-equation is quadratic on the center manifold: v' ~ -c v^2.
  const Model m = with_eps("paper-extinction", 1e-3);
  OdeControls ctl;
  ctl.step.output_times = {160.0, 320.0, 640.0, 1280.0};
  const OdeTrajectory tr = integrate_meso_ode(m, {4, 2, 2.5}, 1280.0, ctl);
  ASSERT_EQ(tr.size(), 5u);
  std::vector<double> t, v;
  for (std::size_t i = 1; i < tr.size(); ++i) {
    t.push_back(tr.times[i]);
    v.push_back(tr.states[i][2]);
  }
  const double slope = loglog_slope(t, v);
  EXPECT_NEAR(slope, -1.0, 0.05);
  const auto& y = tr.states.back();
  EXPECT_NEAR(y[0] + y[1], 7.5, 0.01);
  EXPECT_NEAR(tr.times.back() * y[2], 1.0, 0.05);
}

TEST(MesoOde, StrangSchemeAgrees) {
  const Model m = with_eps("paper-coexistence", 1e-2);
  OdeControls ctl;
  ctl.scheme = MesoScheme::strang;
  const OdeTrajectory s = integrate_meso_ode(m, {4, 2, 2.5}, 5.0, ctl);
  const OdeTrajectory r = integrate_meso_ode(m, {4, 2, 2.5}, 5.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.states.back()[i], r.states.back()[i], 1e-5);
}

TEST(MesoOde, TighterToleranceChangesLittle) {
  const Model m = with_eps("paper-coexistence", 1e-3);
  OdeControls loose, tight;
  loose.step.rtol = 1e-6;
  loose.step.atol = 1e-10;
  tight.step.rtol = 1e-7;
  tight.step.atol = 1e-11;
  const auto a = integrate_meso_ode(m, {4, 2, 2.5}, 3.0, loose).states.back();
  const auto b = integrate_meso_ode(m, {4, 2, 2.5}, 3.0, tight).states.back();
  for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(a[i] - b[i]), 1e-6 * std::max(1.0, std::abs(b[i])));
}

TEST(MesoOde, RejectsNegativeInit) {
  EXPECT_THROW(integrate_meso_ode(with_eps("paper-coexistence", 1e-2), {-1, 2, 2.5}, 1.0), ValidationError);
}

TEST(MacroOde, CoexistenceConverges) {
  const OdeTrajectory tr = integrate_macro_ode(preset_config("paper-coexistence").model, {6.5, 2.5}, 30.0);
  EXPECT_NEAR(tr.states.back()[0], 7.5, 1e-3);
  EXPECT_NEAR(tr.states.back()[1], 2.0, 1e-3);
}

TEST(MacroOde, MatchesSmallEpsilonMeso) {
  const Model m = with_eps("paper-coexistence", 1e-5);
  const double u0 = 6.0, v0 = 2.5;
  const double ub0 = solve_ub_star(m, u0, v0);
  const auto meso = integrate_meso_ode(m, {u0 - ub0, ub0, v0}, 3.0).states.back();
  const auto macro = integrate_macro_ode(m, {u0, v0}, 3.0).states.back();
  EXPECT_NEAR(meso[0] + meso[1], macro[0], 1e-3);
  EXPECT_NEAR(meso[2], macro[1], 1e-3);
}

TEST(MacroOde, UnstableBoundaryStateDeparts) {
  const Model m = preset_config("paper-coexistence").model;
  const OdeTrajectory tr = integrate_macro_ode(m, {1e-6, m.p.b}, 30.0);
  EXPECT_GT(tr.states.back()[0], 1.0);
}

TEST(MacroOde, VExtinctAxisInvariant) {
  // Flip to alpha > 1 by shrinking b; the unique v-extinct state attracts the axis.
  Model m = preset_config("paper-coexistence").model;
  m.p.b = 1.0;
  const auto states = find_semitrivial_v_extinct(m);
  ASSERT_EQ(states.size(), 1u);
  const OdeTrajectory tr = integrate_macro_ode(m, {0.5, 0.0}, 50.0);
  EXPECT_EQ(tr.states.back()[1], 0.0);
  EXPECT_NEAR(tr.states.back()[0], states[0].u_bar, 1e-6);
}

TEST(MacroOde, EquilibriaAreFixedPoints) {
  const Model m = preset_config("paper-coexistence").model;
  for (const auto& e : enumerate_equilibria(m).items) {
    const Vec<2> f = macro_rhs(m, e.u_bar, e.v_bar);
    EXPECT_LE(f.cwiseAbs().maxCoeff(), 1e-9) << to_string(e.kind);
  }
}

TEST(MicroOde, StaysNearSlowManifold) {
  const ScenarioConfig c = preset_config("micro-validation");
  const MicroParams& mp = *c.micro;
  const auto s = micro_slow_manifold(mp, 1.0, 2.0, 2.5);
  const OdeTrajectory tr = integrate_micro_ode(mp, {s[0], s[1], 1.0, 2.0, 2.5}, 1.0);
  for (const auto& y : tr.states) {
    const auto sm = micro_slow_manifold(mp, y[2], y[3], y[4]);
    ASSERT_LE(std::abs(y[0] - sm[0]), 50 * mp.delta);
    ASSERT_LE(std::abs(y[1] - sm[1]), 50 * mp.delta);
  }
}

TEST(MicroOde, NoConsumersGivesLogisticResources) {
  MicroParams mp = *preset_config("micro-validation").micro;
  const OdeTrajectory tr = integrate_micro_ode(mp, {0.1, 0.2, 0.0, 0.0, 0.0}, 1.0);
  const auto& y = tr.states.back();
  EXPECT_NEAR(y[0], mp.A1, 1e-8);
  EXPECT_NEAR(y[1], mp.A2, 1e-8);
}

TEST(MicroOde, ConvergesToMesoAsDeltaShrinks) {
  MicroParams mp = *preset_config("micro-validation").micro;
  const Model m = map_micro_to_meso(mp);
  OdeControls ctl;
  ctl.step.rtol = 1e-10;
  ctl.step.atol = 1e-13;
  const auto ref = integrate_meso_ode(m, micro_to_meso_state(mp, 1.0, 2.0, 2.5), 1.0, ctl).states.back();
  std::vector<double> deltas{1e-2, 1e-3, 1e-4}, errs;
  for (double d : deltas) {
    mp.delta = d;
    const auto s = micro_slow_manifold(mp, 1.0, 2.0, 2.5);
    const auto y = integrate_micro_ode(mp, {s[0], s[1], 1.0, 2.0, 2.5}, 1.0, ctl).states.back();
    errs.push_back(std::max({std::abs(y[2] - ref[0]), std::abs(y[3] - ref[1]), std::abs(y[4] * mp.pV / mp.p2 - ref[2])}));
  }
  EXPECT_GE(std::log10(errs[0] / errs[1]), 0.8);
  EXPECT_GE(std::log10(errs[1] / errs[2]), 0.8);
}

TEST(LayerProbe, WidthScalesWithEpsilon) {
  const LayerProbe p = initial_layer_probe(with_eps("paper-coexistence", 1.0), {4, 2, 2.5}, {1e-1, 1e-2, 1e-3});
  ASSERT_EQ(p.widths.size(), 3u);
  EXPECT_GT(p.widths[0], p.widths[2]);
  EXPECT_GE(p.slope, 0.8);
  EXPECT_LE(p.slope, 1.2);
}

TEST(LayerProbe, ZeroOnManifold) {
  const Model m = preset_config("paper-coexistence").model;
  const double ub = solve_ub_star(m, 6.0, 2.5);
  const LayerProbe p = initial_layer_probe(m, {6.0 - ub, ub, 2.5}, {1e-1, 1e-2});
  for (double w : p.widths) EXPECT_EQ(w, 0.0);
}
