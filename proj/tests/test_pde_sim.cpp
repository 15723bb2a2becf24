#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fastswitch/config.hpp"
#include "fastswitch/ode_sim.hpp"
#include "fastswitch/pde_sim.hpp"
#include "fastswitch/presets.hpp"

using namespace fastswitch;

namespace {
constexpr double pi = std::numbers::pi;

MesoField reference_profiles(const Grid1D& g) {
  MesoField f;
  for (int i = 0; i < g.n_cells; ++i) {
    const auto p = oscillatory_profile(g.x(i));
    f.u_a.push_back(p[0]);
    f.u_b.push_back(p[1]);
    f.v.push_back(p[2]);
  }
  return f;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}
}  // namespace

TEST(Laplacian, AnnihilatesConstants) {
  for (double x : laplacian_neumann(std::vector<double>(16, 3.7), 0.1)) EXPECT_EQ(x, 0.0);
}

TEST(Laplacian, RowSumsVanish) {
  const Grid1D g{1.0, 64};
  std::vector<double> f;
  for (int i = 0; i < g.n_cells; ++i) f.push_back(std::exp(g.x(i)) + std::sin(7 * g.x(i)));
  double s = 0.0, scale = 0.0;
  for (double x : laplacian_neumann(f, g.dx())) {
    s += x;
    scale += std::abs(x);
  }
  EXPECT_LE(std::abs(s), 1e-13 * scale);
}

TEST(Laplacian, SecondOrderOnNeumannEigenfunction) {
  std::vector<double> errs;
  for (int n : {32, 64, 128}) {
    const Grid1D g{1.0, n};
    std::vector<double> f, exact;
    for (int i = 0; i < n; ++i) {
      f.push_back(std::cos(pi * g.x(i)));
      exact.push_back(-pi * pi * std::cos(pi * g.x(i)));
    }
    errs.push_back(max_abs_diff(laplacian_neumann(f, g.dx()), exact));
  }
  EXPECT_GE(std::log2(errs[0] / errs[1]), 1.9);
  EXPECT_GE(std::log2(errs[1] / errs[2]), 1.9);
}

TEST(Laplacian, TooShortRejected) { EXPECT_THROW(laplacian_neumann({1.0, 2.0}, 0.1), ValidationError); }

TEST(Grid, Validation) {
  EXPECT_THROW((Grid1D{1.0, 4}).validate(), ValidationError);
  EXPECT_NO_THROW((Grid1D{1.0, 8}).validate());
  EXPECT_DOUBLE_EQ((Grid1D{2.0, 8}).x(0), 0.125);
}

TEST(Snapshots, DefaultCadence) {
  const auto t = default_snapshot_times(30.0, 200, 1e-5);
  ASSERT_EQ(t.size(), 200u);
  EXPECT_DOUBLE_EQ(t.front(), 1e-5);
  EXPECT_EQ(t.back(), 30.0);
  for (std::size_t i = 1; i < t.size(); ++i) ASSERT_GT(t[i], t[i - 1]);
}

TEST(MesoPde, ConstantInitMatchesOde) {
  Model m = preset_config("paper-pde-coexistence").model;
  m.p.epsilon = 1e-2;
  const Grid1D g{1.0, 16};
  const MesoField init{std::vector<double>(16, 4.0), std::vector<double>(16, 2.0), std::vector<double>(16, 2.5)};
  PdeControls ctl;
  ctl.snapshot_times = {0.1, 0.5, 1.0};
  ctl.fast_rtol = 1e-12;
  ctl.fast_atol = 1e-15;
  const PdeTrajectory tr = integrate_meso_pde(m, g, init, 1.0, ctl);
  OdeControls oc;
  oc.step.rtol = 1e-11;
  oc.step.atol = 1e-14;
  oc.step.output_times = {0.1, 0.5, 1.0};
  const OdeTrajectory ode = integrate_meso_ode(m, {4.0, 2.0, 2.5}, 1.0, oc);
  ASSERT_EQ(tr.size(), 4u);
  ASSERT_EQ(ode.size(), 4u);
  for (std::size_t s = 0; s < tr.size(); ++s)
    for (int c = 0; c < 3; ++c) {
      for (double x : tr.fields[s][c]) ASSERT_EQ(x, tr.fields[s][c][0]);
      EXPECT_NEAR(tr.fields[s][c][0], ode.states[s][c], 1e-8) << "snapshot " << s << " component " << c;
    }
}

TEST(MesoPde, ReactionFreeRunConservesMass) {
  Model m = preset_config("paper-pde-coexistence").model;
  m.p.eta_a = m.p.eta_b = m.p.eta_v = 1e-300;  // validation requires positive rates
  m.p.epsilon = 1e-2;
  const Grid1D g{1.0, 32};
  const MesoField init = reference_profiles(g);
  PdeControls ctl;
  ctl.snapshot_times = {0.05, 0.1};
  const PdeTrajectory tr = integrate_meso_pde(m, g, init, 0.1, ctl);
  auto mass = [&](const std::vector<double>& f) {
    double s = 0.0;
    for (double x : f) s += x;
    return s * g.dx();
  };
  const double u0 = mass(init.u_a) + mass(init.u_b), v0 = mass(init.v);
  const auto& f = tr.fields.back();
  EXPECT_NEAR(mass(f[0]) + mass(f[1]), u0, 1e-12 * u0 * 0.1 + 1e-14);
  EXPECT_NEAR(mass(f[2]), v0, 1e-12 * v0 * 0.1 + 1e-14);
}

TEST(MesoPde, MaxPrincipleAndMassBound) {
  Model m = preset_config("paper-pde-coexistence").model;
  m.p.epsilon = 1e-2;
  const Grid1D g{1.0, 64};
  const MesoField init = reference_profiles(g);
  const PdeTrajectory tr = integrate_meso_pde(m, g, init, 1.0);
  const double vmax0 = *std::max_element(init.v.begin(), init.v.end());
  EXPECT_GE(tr.stats.v_min, 0.0);
  EXPECT_LE(tr.stats.v_max, std::max(vmax0, m.p.b) + 1e-9);
  const double C = g.length * (m.p.a * m.p.eta_a + m.p.b * m.p.eta_b) / 4.0;
  double m0 = 0.0;
  for (int i = 0; i < g.n_cells; ++i) m0 += (init.u_a[i] + init.u_b[i]) * g.dx();
  for (std::size_t s = 0; s < tr.size(); ++s) {
    double ms = 0.0;
    for (int i = 0; i < g.n_cells; ++i) ms += (tr.fields[s][0][i] + tr.fields[s][1][i]) * g.dx();
    ASSERT_LE(ms, m0 + C * tr.times[s] + 1e-9);
  }
  EXPECT_EQ(tr.stats.clipped_count, 0);
}

TEST(MesoPde, SpatialConvergenceOrder) {
  Model m = preset_config("paper-pde-coexistence").model;
  m.p.epsilon = 1e-2;
  PdeControls ctl;
  ctl.snapshot_times = {0.05};
  auto run = [&](int n) { return integrate_meso_pde(m, Grid1D{1.0, n}, reference_profiles(Grid1D{1.0, n}), 0.05, ctl); };
  const PdeTrajectory ref = run(512);
  auto error = [&](const PdeTrajectory& tr) {
    // Each coarse cell is the average of the fine cells it covers; compare at the coarse centers.
    const int n = tr.grid.n_cells, r = 512 / n;
    double e = 0.0;
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < n; ++i) {
        const auto& fine = ref.fields.back()[c];
        const double x = tr.grid.x(i);
        const double pos = x / ref.grid.dx() - 0.5;
        const int j = static_cast<int>(std::floor(pos));
        const double w = pos - j;
        const double val = (1 - w) * fine[j] + w * fine[j + 1];
        e = std::max(e, std::abs(tr.fields.back()[c][i] - val));
        (void)r;
      }
    return e;
  };
  const double e64 = error(run(64)), e128 = error(run(128));
  EXPECT_GE(e64 / e128, 3.5) << e64 << " " << e128;
}

TEST(MacroPde, EqualDiffusivitiesGiveLinearDiffusion) {
  Model m = preset_config("paper-pde-coexistence").model;
  m.p.d_a = m.p.d_b = 0.5;
  const Grid1D g{1.0, 32};
  const MesoField z = reference_profiles(g);
  const MacroField init = meso_to_macro(z);
  PdeControls flux, mirror;
  flux.snapshot_times = mirror.snapshot_times = {0.2};
  mirror.neumann_u = true;
  const PdeTrajectory a = integrate_macro_pde(m, g, init, 0.2, flux);
  const PdeTrajectory b = integrate_macro_pde(m, g, init, 0.2, mirror);
  for (int c = 0; c < 2; ++c) EXPECT_LE(max_abs_diff(a.fields.back()[c], b.fields.back()[c]), 1e-10);
}

TEST(MacroPde, ConstantInitMatchesOde) {
  const Model m = preset_config("paper-pde-coexistence").model;
  const Grid1D g{1.0, 16};
  const MacroField init{std::vector<double>(16, 6.0), std::vector<double>(16, 2.5)};
  PdeControls ctl;
  ctl.snapshot_times = {0.5, 1.0};
  const PdeTrajectory tr = integrate_macro_pde(m, g, init, 1.0, ctl);
  OdeControls oc;
  oc.step.rtol = 1e-11;
  oc.step.atol = 1e-14;
  oc.step.output_times = {0.5, 1.0};
  const OdeTrajectory ode = integrate_macro_ode(m, {6.0, 2.5}, 1.0, oc);
  for (std::size_t s = 0; s < tr.size(); ++s)
    for (int c = 0; c < 2; ++c) EXPECT_NEAR(tr.fields[s][c][5], ode.states[s][c], 1e-8);
}

TEST(MacroPde, StepRatesRejected) {
  const Model m = preset_config("paper-nonunique").model;
  const MacroField init{std::vector<double>(16, 1.0), std::vector<double>(16, 0.5)};
  EXPECT_THROW(integrate_macro_pde(m, Grid1D{1.0, 16}, init, 0.1), DiscontinuityError);
}

TEST(MacroPde, DivergesFromMesoAtLargeEpsilon) {
  Model m = preset_config("paper-pde-coexistence").model;
  m.p.epsilon = 1e3;
  const Grid1D g{1.0, 32};
  const MesoField z = reference_profiles(g);
  PdeControls ctl;
  ctl.snapshot_times = {1.0};
  const PdeTrajectory meso = integrate_meso_pde(m, g, z, 1.0, ctl);
  const PdeTrajectory macro = integrate_macro_pde(m, g, meso_to_macro(z), 1.0, ctl);
  std::vector<double> u(32);
  for (int i = 0; i < 32; ++i) u[i] = meso.fields.back()[0][i] + meso.fields.back()[1][i];
  EXPECT_GT(max_abs_diff(u, macro.fields.back()[0]), 0.1);
}

TEST(Gap, ShortSweepShrinksWithEpsilon) {
  const Model m = preset_config("paper-pde-coexistence").model;
  const Grid1D g{1.0, 32};
  PdeControls ctl;
  ctl.n_snapshots = 40;
  // The gap window starts at 10 eps, so t_end must exceed 1 for the largest eps.
  const GapTable t = meso_macro_gap(m, g, reference_profiles(g), 2.0, {1e-1, 1e-2, 1e-3}, ctl);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.macro.epsilon, 0.0);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    EXPECT_LT(t.rows[i].gap_u, t.rows[i - 1].gap_u);
    EXPECT_LT(t.rows[i].gap_v, t.rows[i - 1].gap_v);
  }
  EXPECT_GE(t.q_slope, 0.45);
}

TEST(Gap, NeedsThreeDecreasingValues) {
  const Model m = preset_config("paper-pde-coexistence").model;
  const Grid1D g{1.0, 16};
  const MesoField z = reference_profiles(g);
  EXPECT_THROW(meso_macro_gap(m, g, z, 0.1, {1e-1, 1e-2}), ValidationError);
  EXPECT_THROW(meso_macro_gap(m, g, z, 0.1, {1e-2, 1e-1, 1e-3}), ValidationError);
}
