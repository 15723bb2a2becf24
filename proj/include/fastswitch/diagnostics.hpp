#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fastswitch/closure.hpp"
#include "fastswitch/entropy.hpp"
#include "fastswitch/model.hpp"
#include "fastswitch/ode_sim.hpp"
#include "fastswitch/pde_sim.hpp"

namespace fastswitch {

/// Midpoint-rule integral of h1(u_a) + h2(u_b, v).
inline double compute_entropy(const Model& m, const MesoField& s, double dx, const QuadratureTol& tol = {}) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.u_a.size(); ++i)
    e += entropy_density_h1(m, s.u_a[i], tol) + entropy_density_h2(m, s.u_b[i], s.v[i], tol);
  return e * dx;
}

/// Integral of |f'|^2: centered differences inside, one-sided second order at the ends.
inline double gradient_sq_integral(const std::vector<double>& f, double dx) {
  const std::size_t n = f.size();
  if (n < 3) return 0.0;
  auto sq = [](double x) { return x * x; };
  double acc = sq((-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx));
  for (std::size_t i = 1; i + 1 < n; ++i) acc += sq((f[i + 1] - f[i - 1]) / (2.0 * dx));
  acc += sq((3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx));
  return acc * dx;
}

struct DiagnosticRecord {
  double t = 0.0;
  double entropy = 0.0;
  double grad_ua_sq = 0.0;  // accumulated in time
  double grad_ub_sq = 0.0;
  double q_l2_sq = 0.0;     // accumulated (1/eps) int |Q|^2
  double mass_u = 0.0;
  double mass_v = 0.0;
  double v_sup = 0.0;
  double positivity_violation = 0.0;

  double budget() const { return entropy + grad_ua_sq + grad_ub_sq + q_l2_sq; }
};

struct EnergyBudget {
  std::vector<DiagnosticRecord> records;
  double total() const { return records.empty() ? 0.0 : records.back().budget(); }
  bool entropy_nonincreasing(double rel_tol = 1e-12) const {
    for (std::size_t i = 1; i < records.size(); ++i)
      if (records[i].entropy > records[i - 1].entropy * (1.0 + rel_tol) + 1e-300) return false;
    return true;
  }
};

inline EnergyBudget energy_budget(const PdeTrajectory& tr, const Model& m, std::size_t min_snapshots = 50) {
  if (!tr.is_meso()) throw ValidationError("energy_budget needs a mesoscopic trajectory");
  if (tr.size() < min_snapshots)
    throw InsufficientSnapshots("energy_budget needs at least " + std::to_string(min_snapshots) +
                                " snapshots, got " + std::to_string(tr.size()));
  Model me = m;
  me.p.epsilon = tr.epsilon;
  const double dx = tr.grid.dx();
  EnergyBudget out;
  double prev_ga = 0.0, prev_gb = 0.0, prev_q = 0.0;
  for (std::size_t s = 0; s < tr.size(); ++s) {
    const auto& f = tr.fields[s];
    DiagnosticRecord r;
    r.t = tr.times[s];
    r.entropy = compute_entropy(me, MesoField{f[0], f[1], f[2]}, dx);
    const double ga = gradient_sq_integral(f[0], dx);
    const double gb = gradient_sq_integral(f[1], dx);
    double q2 = 0.0;
    for (std::size_t i = 0; i < f[0].size(); ++i) {
      const double q = eval_Q(me, f[0][i], f[1][i], f[2][i]);
      q2 += q * q;
    }
    q2 *= dx / me.p.epsilon;
    if (s > 0) {
      const auto& p = out.records.back();
      const double dt = r.t - p.t;
      r.grad_ua_sq = p.grad_ua_sq + 0.5 * (prev_ga + ga) * dt;
      r.grad_ub_sq = p.grad_ub_sq + 0.5 * (prev_gb + gb) * dt;
      r.q_l2_sq = p.q_l2_sq + 0.5 * (prev_q + q2) * dt;
    }
    prev_ga = ga, prev_gb = gb, prev_q = q2;
    double mu = 0.0, mv = 0.0, vs = 0.0;
    for (std::size_t i = 0; i < f[0].size(); ++i) {
      mu += f[0][i] + f[1][i];
      mv += f[2][i];
      vs = std::max(vs, std::abs(f[2][i]));
    }
    r.mass_u = mu * dx;
    r.mass_v = mv * dx;
    r.v_sup = vs;
    r.positivity_violation = tr.stats.clipped_mass;
    out.records.push_back(r);
  }
  return out;
}

struct BudgetVerdict {
  double ratio = 0.0;  // max/min of the terminal budgets
  bool bounded = false;
};

/// Uniformity proxy across an eps sweep: max/min of the terminal budgets at most `limit`.
inline BudgetVerdict budget_boundedness(const std::vector<double>& totals, double limit = 5.0) {
  BudgetVerdict v;
  if (totals.empty()) return v;
  const auto [lo, hi] = std::minmax_element(totals.begin(), totals.end());
  v.ratio = *lo > 0.0 ? *hi / *lo : INFINITY;
  v.bounded = v.ratio <= limit;
  return v;
}

struct QNormSeries {
  std::vector<double> times;
  std::vector<double> q_l2;         // spatial L2 norm (pointwise |Q| in ODE mode)
  std::vector<double> accumulated;  // space-time L2 norm over [0, t]
  double total() const { return accumulated.empty() ? 0.0 : accumulated.back(); }
};

namespace detail {
inline void accumulate_q(QNormSeries& s) {
  double acc = 0.0;
  s.accumulated.assign(s.times.size(), 0.0);
  for (std::size_t i = 1; i < s.times.size(); ++i) {
    acc += 0.5 * (s.q_l2[i - 1] * s.q_l2[i - 1] + s.q_l2[i] * s.q_l2[i]) * (s.times[i] - s.times[i - 1]);
    s.accumulated[i] = std::sqrt(acc);
  }
}
}  // namespace detail

inline QNormSeries q_norm_series(const PdeTrajectory& tr, const Model& m, double tol_closure = 1e-12) {
  QNormSeries s;
  const double dx = tr.grid.dx();
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto& f = tr.fields[k];
    double acc = 0.0;
    for (std::size_t i = 0; i < f[0].size(); ++i) {
      double ua, ub, v;
      if (tr.is_meso()) {
        ua = f[0][i], ub = f[1][i], v = f[2][i];
      } else {
        v = f[1][i];
        ub = solve_ub_star(m, f[0][i], v, tol_closure);
        ua = f[0][i] - ub;
      }
      const double q = eval_Q(m, ua, ub, v);
      acc += q * q;
    }
    s.times.push_back(tr.times[k]);
    s.q_l2.push_back(std::sqrt(acc * dx));
  }
  detail::accumulate_q(s);
  return s;
}

/// ODE-mode series over every recorded step of a mesoscopic trajectory.
inline QNormSeries q_norm_series(const OdeTrajectory& tr, const Model& m) {
  if (tr.columns.size() != 3) throw ValidationError("q_norm_series needs a mesoscopic ODE trajectory");
  QNormSeries s;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto& y = tr.states[k];
    s.times.push_back(tr.times[k]);
    s.q_l2.push_back(std::abs(eval_Q(m, y[0], y[1], y[2])));
  }
  detail::accumulate_q(s);
  return s;
}

struct LvCoefficients {
  double u_a = 0.0, u_b = 0.0;
  double r_a = 0.0, r_b = 0.0;                // closure fractions u_a/u, u_b/u
  double r_a_closed = 0.0, r_b_closed = 0.0;  // (1 + psi/phi)^-1 and its complement
  double b11 = 0.0, b12 = 0.0, b21 = 0.0, b22 = 0.0;
  double eta_u = 0.0;
};

inline LvCoefficients lv_reduction(const Model& m, double u, double v, double tol = 1e-12) {
  if (!(u > 0.0)) throw DegenerateInput("lv_reduction requires u > 0");
  if (!(v >= 0.0)) throw DegenerateInput("lv_reduction requires v >= 0");
  const ModelParams& p = m.p;
  LvCoefficients c;
  c.u_b = solve_ub_star(m, u, v, tol);
  c.u_a = u - c.u_b;
  c.r_a = c.u_a / u;
  c.r_b = c.u_b / u;
  const double ph = m.phi.value((c.u_b + v) / p.b);
  const double ps = m.psi.value(c.u_a / p.a);
  c.r_a_closed = 1.0 / (1.0 + ps / ph);
  c.r_b_closed = 1.0 / (1.0 + ph / ps);
  c.eta_u = p.eta_a * c.r_a + p.eta_b * c.r_b;
  c.b11 = (p.eta_a * c.r_a * c.r_a / p.a + p.eta_b * c.r_b * c.r_b / p.b) / c.eta_u;
  c.b12 = (p.eta_b * c.r_b / p.b) / c.eta_u;
  c.b21 = c.r_b / p.b;
  c.b22 = 1.0 / p.b;
  return c;
}

struct LvResidual {
  double residual = 0.0;  // max abs difference of the two right-hand sides
  double scale = 0.0;     // max(eta_u u, eta_v v)
  double du = 0.0, dv = 0.0;
};

inline LvResidual lv_residual_detail(const Model& m, double u, double v, double tol = 1e-12) {
  const LvCoefficients c = lv_reduction(m, u, v, tol);
  const Reactions r = eval_reactions(m.p, c.u_a, c.u_b, v);
  const double lv_u = c.eta_u * (1.0 - c.b11 * u - c.b12 * v) * u;
  const double lv_v = m.p.eta_v * (1.0 - c.b21 * u - c.b22 * v) * v;
  LvResidual out;
  out.du = std::abs(r.f_a + r.f_b - lv_u);
  out.dv = std::abs(r.f_v - lv_v);
  out.residual = std::max(out.du, out.dv);
  out.scale = std::max(c.eta_u * u, m.p.eta_v * v);
  return out;
}

inline double lv_residual(const Model& m, double u, double v, double tol = 1e-12) {
  return lv_residual_detail(m, u, v, tol).residual;
}

}  // namespace fastswitch
