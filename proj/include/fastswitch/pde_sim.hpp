#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fastswitch/closure.hpp"
#include "fastswitch/fast_flow.hpp"
#include "fastswitch/linalg.hpp"
#include "fastswitch/model.hpp"

namespace fastswitch {

struct Grid1D {
  double length = 1.0;
  int n_cells = 128;

  double dx() const { return length / n_cells; }
  double x(int i) const { return (i + 0.5) * dx(); }
  std::vector<double> centers() const {
    std::vector<double> out(static_cast<std::size_t>(n_cells));
    for (int i = 0; i < n_cells; ++i) out[static_cast<std::size_t>(i)] = x(i);
    return out;
  }
  void validate() const {
    if (n_cells < 8) throw ValidationError("grid needs at least 8 cells");
    if (!(length > 0.0)) throw ValidationError("grid length must be > 0");
  }
  friend bool operator==(const Grid1D&, const Grid1D&) = default;
};

/// Second-order Neumann Laplacian on cell centers with mirrored ghost cells.
inline std::vector<double> laplacian_neumann(const std::vector<double>& f, double dx) {
  const std::size_t n = f.size();
  if (n < 3) throw ValidationError("laplacian_neumann needs at least 3 cells");
  std::vector<double> out(n);
  const double k = 1.0 / (dx * dx);
  out[0] = (f[1] - f[0]) * k;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i - 1] - 2.0 * f[i] + f[i + 1]) * k;
  out[n - 1] = (f[n - 2] - f[n - 1]) * k;
  return out;
}

namespace detail {
inline void laplacian_into(const double* f, double* out, std::size_t n, double k) {
  out[0] = (f[1] - f[0]) * k;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i - 1] - 2.0 * f[i] + f[i + 1]) * k;
  out[n - 1] = (f[n - 2] - f[n - 1]) * k;
}
}  // namespace detail

/// Snapshot times: a geometric run from t_first up to the first uniform time, then uniform.
inline std::vector<double> default_snapshot_times(double t_end, int count, double t_first) {
  count = std::max(count, 4);
  const int n_geo = count / 4;
  const int n_uni = count - n_geo;
  const double first_uniform = t_end / n_uni;
  std::vector<double> out;
  t_first = std::min(t_first, 0.5 * first_uniform);
  if (t_first > 0.0) {
    const double ratio = std::pow(first_uniform / t_first, 1.0 / n_geo);
    double t = t_first;
    for (int i = 0; i < n_geo; ++i, t *= ratio) out.push_back(t);
  }
  for (int i = 1; i <= n_uni; ++i) out.push_back(t_end * i / n_uni);
  out.back() = t_end;
  return out;
}

struct PdeControls {
  double cfl = 0.8;
  double dt_max = 1e-3;  // cap when diffusion is weak or absent
  int n_snapshots = 200;
  std::vector<double> snapshot_times;  // overrides n_snapshots when nonempty
  double fast_rtol = 1e-9;
  double fast_atol = 1e-13;
  double tol_closure = 1e-12;
  bool neumann_u = false;  // macro only: mirror u instead of w = d_a u_a + d_b u_b
  double clip_budget = 1e-8;
};

struct PdeStats {
  long steps = 0;
  long fast_substeps = 0;
  long closure_solves = 0;
  long clipped_count = 0;
  double clipped_mass = 0.0;
  double dt = 0.0;  // largest step used
  double v_min = std::numeric_limits<double>::infinity();
  double v_max = -std::numeric_limits<double>::infinity();
};

struct PdeTrajectory {
  Grid1D grid;
  std::vector<std::string> columns;  // u_a,u_b,v or u,v
  std::vector<double> times;
  /// fields[snapshot][component][cell]
  std::vector<std::vector<std::vector<double>>> fields;
  std::string scheme;
  double epsilon = 0.0;  // 0 for macroscopic runs
  PdeStats stats;

  bool is_meso() const { return columns.size() == 3; }
  std::size_t size() const { return times.size(); }
};

namespace detail {

inline void check_fields(const std::vector<std::vector<double>>& comps, const Grid1D& g) {
  for (const auto& c : comps) {
    if (c.size() != static_cast<std::size_t>(g.n_cells))
      throw ValidationError("initial field length differs from the grid");
    for (double x : c)
      if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("initial fields must be finite and >= 0");
  }
}

inline double explicit_dt(const Grid1D& g, double dmax, const PdeControls& c) {
  double dt = c.dt_max;
  if (dmax > 0.0) dt = std::min(dt, c.cfl * g.dx() * g.dx() / (2.0 * dmax));
  return dt;
}

/// Walks snapshot targets (t_end appended if missing), splitting each interval into equal steps
/// not exceeding dt_max.
template <class Step, class Snap>
void march(double t_end, const std::vector<double>& snaps, double dt_max, PdeStats& st, Step&& step,
           Snap&& snap) {
  double t = 0.0;
  snap(0.0);
  std::vector<double> targets = snaps;
  if (targets.empty() || targets.back() < t_end) targets.push_back(t_end);
  for (double target : targets) {
    if (target <= t) continue;
    const double span = target - t;
    const long n = std::max(1L, static_cast<long>(std::ceil(span / dt_max - 1e-9)));
    const double dt = span / static_cast<double>(n);
    st.dt = std::max(st.dt, dt);
    for (long k = 0; k < n; ++k) {
      step(dt);
      ++st.steps;
    }
    t = target;
    snap(t);
  }
}

inline void clip(std::vector<double>& f, PdeStats& st, double dx) {
  for (double& x : f)
    if (x < 0.0) {
      st.clipped_mass += -x * dx;
      ++st.clipped_count;
      x = 0.0;
    }
}

inline double mass(const std::vector<double>& f, double dx) {
  double s = 0.0;
  for (double x : f) s += x;
  return s * dx;
}

}  // namespace detail

/// Mesoscopic reaction-diffusion system on a 1D interval with zero-flux ends.
///
/// Strang splitting per step: half step of the local kinetics (reactions and conversion) in
/// every cell, one classical RK4 step of diffusion, half step of kinetics.
inline PdeTrajectory integrate_meso_pde(const Model& m, const Grid1D& g, const MesoField& init,
                                        double t_end, const PdeControls& ctl = {}) {
  m.validate();
  g.validate();
  detail::check_fields({init.u_a, init.u_b, init.v}, g);
  if (!(t_end > 0.0)) throw ValidationError("t_end must be > 0");
  const ModelParams& p = m.p;
  const std::size_t n = static_cast<std::size_t>(g.n_cells);
  const double dx = g.dx();
  const double k = 1.0 / (dx * dx);

  PdeTrajectory tr;
  tr.grid = g;
  tr.columns = {"u_a", "u_b", "v"};
  tr.scheme = "strang-rosenbrock-rk4";
  tr.epsilon = p.epsilon;
  const auto snaps = ctl.snapshot_times.empty()
                         ? default_snapshot_times(t_end, ctl.n_snapshots, std::min(p.epsilon / 100.0, t_end * 1e-4))
                         : ctl.snapshot_times;
  const double dt_max = detail::explicit_dt(g, std::max({p.d_a, p.d_b, p.d_v}), ctl);

  std::vector<double> ua = init.u_a, ub = init.u_b, v = init.v;
  const double budget =
      ctl.clip_budget * std::max(1.0, detail::mass(ua, dx) + detail::mass(ub, dx) + detail::mass(v, dx));
  const LocalKinetics local(m, ctl.fast_rtol, ctl.fast_atol);
  std::vector<double> hint(n, 0.0);

  // RK4 stage buffers for the diffusion step.
  std::vector<double> sa(n), sb(n), sv(n), la(n), lb(n), lv(n);
  std::vector<double> acc_a(n), acc_b(n), acc_v(n);

  auto diffuse = [&](const std::vector<double>& A, const std::vector<double>& B, const std::vector<double>& V) {
    detail::laplacian_into(A.data(), la.data(), n, k * p.d_a);
    detail::laplacian_into(B.data(), lb.data(), n, k * p.d_b);
    detail::laplacian_into(V.data(), lv.data(), n, k * p.d_v);
  };

  auto kinetics = [&](double tau) {
    for (std::size_t i = 0; i < n; ++i) tr.stats.fast_substeps += local.advance(ua[i], ub[i], v[i], tau, hint[i]);
    for (double x : v) {
      tr.stats.v_min = std::min(tr.stats.v_min, x);
      tr.stats.v_max = std::max(tr.stats.v_max, x);
    }
  };

  // The trailing half step of kinetics is merged into the leading half of the next step and
  // settled before every snapshot.
  double owed = 0.0;
  auto step = [&](double dt) {
    kinetics(owed + 0.5 * dt);
    diffuse(ua, ub, v);
    for (std::size_t i = 0; i < n; ++i) {
      acc_a[i] = la[i], acc_b[i] = lb[i], acc_v[i] = lv[i];
      sa[i] = ua[i] + 0.5 * dt * la[i], sb[i] = ub[i] + 0.5 * dt * lb[i], sv[i] = v[i] + 0.5 * dt * lv[i];
    }
    diffuse(sa, sb, sv);
    for (std::size_t i = 0; i < n; ++i) {
      acc_a[i] += 2.0 * la[i], acc_b[i] += 2.0 * lb[i], acc_v[i] += 2.0 * lv[i];
      sa[i] = ua[i] + 0.5 * dt * la[i], sb[i] = ub[i] + 0.5 * dt * lb[i], sv[i] = v[i] + 0.5 * dt * lv[i];
    }
    diffuse(sa, sb, sv);
    for (std::size_t i = 0; i < n; ++i) {
      acc_a[i] += 2.0 * la[i], acc_b[i] += 2.0 * lb[i], acc_v[i] += 2.0 * lv[i];
      sa[i] = ua[i] + dt * la[i], sb[i] = ub[i] + dt * lb[i], sv[i] = v[i] + dt * lv[i];
    }
    diffuse(sa, sb, sv);
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
      ua[i] += w * (acc_a[i] + la[i]);
      ub[i] += w * (acc_b[i] + lb[i]);
      v[i] += w * (acc_v[i] + lv[i]);
    }
    detail::clip(ua, tr.stats, dx);
    detail::clip(ub, tr.stats, dx);
    detail::clip(v, tr.stats, dx);
    owed = 0.5 * dt;
    if (tr.stats.clipped_mass > budget)
      throw NegativeStateBeyondTolerance("clipped negative mass exceeds the budget");
    if (!std::isfinite(ua[0] + ub[0] + v[0])) throw StepSizeUnderflow("non-finite state in meso PDE");
  };

  auto snap = [&](double t) {
    if (owed > 0.0) kinetics(owed);
    owed = 0.0;
    tr.times.push_back(t);
    tr.fields.push_back({ua, ub, v});
  };
  for (double x : v) {
    tr.stats.v_min = std::min(tr.stats.v_min, x);
    tr.stats.v_max = std::max(tr.stats.v_max, x);
  }
  detail::march(t_end, snaps, dt_max, tr.stats, step, snap);
  return tr;
}

namespace detail {

/// Closure solve warm-started from `guess`; falls back to the bracketed solver.
inline double closure_warm(const Model& m, const RateEval& phi, const RateEval& psi, double u, double v,
                           double guess, double tol, long& solves) {
  ++solves;
  if (!(u > 0.0)) return 0.0;
  const double ia = 1.0 / m.p.a, ib = 1.0 / m.p.b;
  const double scale = std::max({1.0, phi.value((u + v) * ib) * u, psi.value(u * ia) * u});
  double x = std::clamp(guess, 0.0, u);
  double lo = 0.0, hi = u;
  for (int it = 0; it < 50; ++it) {
    const double ua = u - x;
    const double s = (x + v) * ib, lam = ua * ia;
    const double q = phi.value(s) * x - psi.value(lam) * ua;
    if (std::abs(q) <= tol * scale) return x;
    if (q < 0.0)
      lo = x;
    else
      hi = x;
    const double dq = phi.value(s) + x * ib * phi.derivative(s) + psi.value(lam) + lam * psi.derivative(lam);
    double xn = x - q / dq;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (xn == x) return x;
    x = xn;
  }
  return solve_ub_star(m, u, v, tol);
}

}  // namespace detail

/// Macroscopic cross-diffusion system; the u-equation diffuses w = d_a u_a + d_b u_b.
inline PdeTrajectory integrate_macro_pde(const Model& m, const Grid1D& g, const MacroField& init,
                                         double t_end, const PdeControls& ctl = {}) {
  m.validate();
  g.validate();
  detail::check_fields({init.u, init.v}, g);
  if (!(t_end > 0.0)) throw ValidationError("t_end must be > 0");
  if (!m.continuous_rates()) throw DiscontinuityError("macro PDE requires continuous rates");
  const ModelParams& p = m.p;
  const std::size_t n = static_cast<std::size_t>(g.n_cells);
  const double dx = g.dx();
  const double k = 1.0 / (dx * dx);

  PdeTrajectory tr;
  tr.grid = g;
  tr.columns = {"u", "v"};
  tr.scheme = ctl.neumann_u ? "rk4-neumann-u" : "rk4-flux-w";
  const auto snaps = ctl.snapshot_times.empty()
                         ? default_snapshot_times(t_end, ctl.n_snapshots, t_end * 1e-4)
                         : ctl.snapshot_times;
  const double dt_max = detail::explicit_dt(g, std::max({p.d_a, p.d_b, p.d_v}), ctl);

  std::vector<double> u = init.u, v = init.v;
  const double budget = ctl.clip_budget * std::max(1.0, detail::mass(u, dx) + detail::mass(v, dx));
  const RateEval phi(m.phi), psi(m.psi);
  std::vector<double> ubs(n, 0.0);  // warm starts
  for (std::size_t i = 0; i < n; ++i)
    ubs[i] = solve_ub_star(m, u[i], v[i], ctl.tol_closure);
  std::vector<double> su(n), sv(n), lu(n), lv(n), au(n), av(n), w(n), ubt(n), uat(n);
  const double ib = 1.0 / p.b, ia = 1.0 / p.a;

  auto rhs = [&](const std::vector<double>& U, const std::vector<double>& V, std::vector<double>& dU,
                 std::vector<double>& dV) {
    for (std::size_t i = 0; i < n; ++i) {
      const double uu = std::max(U[i], 0.0), vv = std::max(V[i], 0.0);
      ubt[i] = detail::closure_warm(m, phi, psi, uu, vv, ubs[i], ctl.tol_closure, tr.stats.closure_solves);
      uat[i] = uu - ubt[i];
      w[i] = p.d_a * uat[i] + p.d_b * ubt[i];
    }
    // Mirroring u and v gives a ghost w equal to the boundary cell's w, so the neumann_u
    // variant lands on the same stencil as mirroring w directly.
    detail::laplacian_into(w.data(), dU.data(), n, k);
    detail::laplacian_into(V.data(), dV.data(), n, k * p.d_v);
    for (std::size_t i = 0; i < n; ++i) {
      const double crowd = 1.0 - (ubt[i] + V[i]) * ib;
      dU[i] += p.eta_a * uat[i] * (1.0 - uat[i] * ia) + p.eta_b * ubt[i] * crowd;
      dV[i] += p.eta_v * V[i] * crowd;
    }
  };

  auto step = [&](double dt) {
    rhs(u, v, lu, lv);
    for (std::size_t i = 0; i < n; ++i) {
      ubs[i] = ubt[i];
      au[i] = lu[i], av[i] = lv[i];
      su[i] = u[i] + 0.5 * dt * lu[i], sv[i] = v[i] + 0.5 * dt * lv[i];
    }
    rhs(su, sv, lu, lv);
    for (std::size_t i = 0; i < n; ++i) {
      au[i] += 2.0 * lu[i], av[i] += 2.0 * lv[i];
      su[i] = u[i] + 0.5 * dt * lu[i], sv[i] = v[i] + 0.5 * dt * lv[i];
    }
    rhs(su, sv, lu, lv);
    for (std::size_t i = 0; i < n; ++i) {
      au[i] += 2.0 * lu[i], av[i] += 2.0 * lv[i];
      su[i] = u[i] + dt * lu[i], sv[i] = v[i] + dt * lv[i];
    }
    rhs(su, sv, lu, lv);
    const double c = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += c * (au[i] + lu[i]);
      v[i] += c * (av[i] + lv[i]);
    }
    detail::clip(u, tr.stats, dx);
    detail::clip(v, tr.stats, dx);
    for (double x : v) {
      tr.stats.v_min = std::min(tr.stats.v_min, x);
      tr.stats.v_max = std::max(tr.stats.v_max, x);
    }
    if (tr.stats.clipped_mass > budget)
      throw NegativeStateBeyondTolerance("clipped negative mass exceeds the budget");
    if (!std::isfinite(u[0] + v[0])) throw StepSizeUnderflow("non-finite state in macro PDE");
  };

  auto snap = [&](double t) {
    tr.times.push_back(t);
    tr.fields.push_back({u, v});
  };
  for (double x : v) {
    tr.stats.v_min = std::min(tr.stats.v_min, x);
    tr.stats.v_max = std::max(tr.stats.v_max, x);
  }
  detail::march(t_end, snaps, dt_max, tr.stats, step, snap);
  return tr;
}

/// Meso field in closure equilibrium with the given total u and v.
inline MacroField meso_to_macro(const MesoField& f) {
  MacroField out;
  out.u.resize(f.u_a.size());
  for (std::size_t i = 0; i < f.u_a.size(); ++i) out.u[i] = f.u_a[i] + f.u_b[i];
  out.v = f.v;
  return out;
}

struct GapRow {
  double epsilon = 0.0;
  double gap_u = 0.0;   // space-time L2 over [10 eps, t_end]
  double gap_v = 0.0;
  double q_l2 = 0.0;    // space-time L2 of Q over [0, t_end]
  double sup_u_end = 0.0;
  double sup_v_end = 0.0;
};

struct GapTable {
  std::vector<GapRow> rows;  // one per eps, in input order
  double q_slope = 0.0;
  std::vector<double> times;  // shared snapshot times
  PdeTrajectory macro;        // the single eps-independent reference run
};

namespace detail {
/// Space-time L2 norm of per-snapshot spatial integrands via trapezoid in time.
inline double spacetime_l2(const std::vector<double>& times, const std::vector<double>& spatial_sq,
                           double t_from) {
  double acc = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i - 1] < t_from) continue;
    acc += 0.5 * (spatial_sq[i - 1] + spatial_sq[i]) * (times[i] - times[i - 1]);
  }
  return std::sqrt(acc);
}
}  // namespace detail

inline GapTable meso_macro_gap(const Model& m, const Grid1D& g, const MesoField& init, double t_end,
                               const std::vector<double>& eps_list, const PdeControls& ctl_in = {}) {
  if (eps_list.size() < 3) throw ValidationError("eps_list needs at least three values");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw ValidationError("eps_list must be decreasing");
  PdeControls ctl = ctl_in;
  if (ctl.snapshot_times.empty())
    ctl.snapshot_times = default_snapshot_times(t_end, ctl.n_snapshots, std::min(eps_list.back() / 100.0, t_end * 1e-4));
  GapTable tab;
  tab.times = ctl.snapshot_times;
  tab.times.insert(tab.times.begin(), 0.0);
  tab.macro = integrate_macro_pde(m, g, meso_to_macro(init), t_end, ctl);
  const double dx = g.dx();
  std::vector<double> qs, es;
  for (double e : eps_list) {
    Model me = m;
    me.p.epsilon = e;
    const PdeTrajectory tr = integrate_meso_pde(me, g, init, t_end, ctl);
    GapRow row;
    row.epsilon = e;
    std::vector<double> du2, dv2, q2;
    for (std::size_t s = 0; s < tr.size(); ++s) {
      const auto& f = tr.fields[s];
      const auto& r = tab.macro.fields[s];
      double a = 0, b = 0, c = 0;
      for (std::size_t i = 0; i < f[0].size(); ++i) {
        const double du = f[0][i] + f[1][i] - r[0][i];
        const double dv = f[2][i] - r[1][i];
        const double q = eval_Q(me, f[0][i], f[1][i], f[2][i]);
        a += du * du, b += dv * dv, c += q * q;
      }
      du2.push_back(a * dx), dv2.push_back(b * dx), q2.push_back(c * dx);
    }
    row.gap_u = detail::spacetime_l2(tr.times, du2, 10.0 * e);
    row.gap_v = detail::spacetime_l2(tr.times, dv2, 10.0 * e);
    row.q_l2 = detail::spacetime_l2(tr.times, q2, 0.0);
    const auto& f = tr.fields.back();
    const auto& r = tab.macro.fields.back();
    for (std::size_t i = 0; i < f[0].size(); ++i) {
      row.sup_u_end = std::max(row.sup_u_end, std::abs(f[0][i] + f[1][i] - r[0][i]));
      row.sup_v_end = std::max(row.sup_v_end, std::abs(f[2][i] - r[1][i]));
    }
    tab.rows.push_back(row);
    es.push_back(e);
    qs.push_back(std::max(row.q_l2, 1e-300));
  }
  tab.q_slope = loglog_slope(es, qs);
  return tab;
}

}  // namespace fastswitch
