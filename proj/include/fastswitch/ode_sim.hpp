#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fastswitch/closure.hpp"
#include "fastswitch/fast_flow.hpp"
#include "fastswitch/linalg.hpp"
#include "fastswitch/micro.hpp"
#include "fastswitch/model.hpp"
#include "fastswitch/ode.hpp"

namespace fastswitch {

struct OdeTrajectory {
  std::vector<std::string> columns;  // state columns, without t
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::string scheme;
  OdeStats stats;

  std::size_t size() const { return times.size(); }
  const std::vector<double>& back() const { return states.back(); }
};

enum class MesoScheme { rosenbrock, strang };

inline const char* to_string(MesoScheme s) { return s == MesoScheme::strang ? "strang" : "rosenbrock"; }

struct OdeControls {
  StepControls step;
  MesoScheme scheme = MesoScheme::rosenbrock;
  double tol_closure = 1e-12;
  /// Cumulative clipped mass allowed, relative to max(initial mass, 1).
  double clip_budget = 1e-8;
};

namespace detail {

/// Zeroes negative entries and enforces the clipped-mass budget.
template <int N>
class Clipper {
 public:
  Clipper(double initial_mass, double budget, OdeStats& st)
      : limit_(budget * std::max(initial_mass, 1.0)), st_(st) {}

  void operator()(Vec<N>& y) {
    for (int i = 0; i < N; ++i) {
      if (y(i) < 0.0) {
        st_.clipped_mass += -y(i);
        ++st_.clipped_count;
        y(i) = 0.0;
      }
    }
    if (st_.clipped_mass > limit_)
      throw NegativeStateBeyondTolerance("clipped negative mass " + std::to_string(st_.clipped_mass) +
                                         " exceeds the budget " + std::to_string(limit_));
  }

 private:
  double limit_;
  OdeStats& st_;
};

template <int N>
void check_init(const Vec<N>& y, double t_end) {
  for (int i = 0; i < N; ++i)
    if (!(y(i) >= 0.0) || !std::isfinite(y(i))) throw ValidationError("initial state must be finite and >= 0");
  if (!(t_end > 0.0)) throw ValidationError("t_end must be > 0");
}

template <int N>
std::vector<double> to_std(const Vec<N>& y) {
  return std::vector<double>(y.data(), y.data() + N);
}

inline Vec<3> meso_rhs(const Model& m, const Vec<3>& y) {
  const Reactions r = eval_reactions(m.p, y(0), y(1), y(2));
  const double q = eval_Q(m, y(0), y(1), y(2)) / m.p.epsilon;
  return Vec<3>(r.f_a + q, r.f_b - q, r.f_v);
}

inline Mat<3> meso_jacobian(const Model& m, const Vec<3>& y) {
  const ModelParams& p = m.p;
  const ClosurePartials cp = closure_partials(m, y(0), y(1), y(2));
  const double ie = 1.0 / p.epsilon;
  Mat<3> J;
  J(0, 0) = p.eta_a * (1.0 - 2.0 * y(0) / p.a) - cp.beta * ie;
  J(0, 1) = cp.gamma * ie;
  J(0, 2) = cp.theta * ie;
  J(1, 0) = cp.beta * ie;
  J(1, 1) = p.eta_b * (1.0 - (2.0 * y(1) + y(2)) / p.b) - cp.gamma * ie;
  J(1, 2) = -p.eta_b * y(1) / p.b - cp.theta * ie;
  J(2, 0) = 0.0;
  J(2, 1) = -p.eta_v * y(2) / p.b;
  J(2, 2) = p.eta_v * (1.0 - (y(1) + 2.0 * y(2)) / p.b);
  return J;
}

inline Vec<3> slow_rhs(const ModelParams& p, const Vec<3>& y) {
  const Reactions r = eval_reactions(p, y(0), y(1), y(2));
  return Vec<3>(r.f_a, r.f_b, r.f_v);
}

}  // namespace detail

/// Diffusionless mesoscopic system (u_a, u_b, v).
inline OdeTrajectory integrate_meso_ode(const Model& m, const MesoPoint& init, double t_end,
                                        const OdeControls& ctl = {}) {
  m.validate();
  Vec<3> y0(init.u_a, init.u_b, init.v);
  detail::check_init<3>(y0, t_end);
  OdeTrajectory tr;
  tr.columns = {"u_a", "u_b", "v"};
  tr.scheme = to_string(ctl.scheme);
  detail::Clipper<3> clip(y0.sum(), ctl.clip_budget, tr.stats);
  tr.times.push_back(0.0);
  tr.states.push_back(detail::to_std<3>(y0));
  auto accept = [&](double t, Vec<3>& y, bool record) {
    clip(y);
    if (record) {
      tr.times.push_back(t);
      tr.states.push_back(detail::to_std<3>(y));
    }
  };

  if (ctl.scheme == MesoScheme::rosenbrock) {
    auto f = [&](const Vec<3>& y) { return detail::meso_rhs(m, y); };
    auto jac = [&](const Vec<3>& y) { return detail::meso_jacobian(m, y); };
    integrate_rodas3<3>(f, jac, accept, y0, 0.0, t_end, ctl.step, tr.stats);
    return tr;
  }

  // Strang splitting: half fast, Dormand-Prince step of the slow reactions, half fast.
  // The splitting error is estimated by step doubling; the slow pair error is checked too.
  const FastFlow fast(m, m.p.epsilon, ctl.step.rtol * 0.1, ctl.step.atol);
  auto slow = [&](const Vec<3>& y) { return detail::slow_rhs(m.p, y); };
  auto strang = [&](const Vec<3>& y, double h, double& slow_err) {
    Vec<3> z = y;
    tr.stats.newton_iters += fast.advance(z(0), z(1), z(2), 0.5 * h);
    const Vec<3> k1 = slow(z);
    const Vec<3> k2 = slow(z + h * (1.0 / 5 * k1));
    const Vec<3> k3 = slow(z + h * (3.0 / 40 * k1 + 9.0 / 40 * k2));
    const Vec<3> k4 = slow(z + h * (44.0 / 45 * k1 - 56.0 / 15 * k2 + 32.0 / 9 * k3));
    const Vec<3> k5 = slow(z + h * (19372.0 / 6561 * k1 - 25360.0 / 2187 * k2 + 64448.0 / 6561 * k3 -
                                    212.0 / 729 * k4));
    const Vec<3> k6 = slow(z + h * (9017.0 / 3168 * k1 - 355.0 / 33 * k2 + 46732.0 / 5247 * k3 +
                                    49.0 / 176 * k4 - 5103.0 / 18656 * k5));
    Vec<3> z_new = z + h * (35.0 / 384 * k1 + 500.0 / 1113 * k3 + 125.0 / 192 * k4 - 2187.0 / 6784 * k5 +
                            11.0 / 84 * k6);
    const Vec<3> k7 = slow(z_new);
    const Vec<3> e = h * (71.0 / 57600 * k1 - 71.0 / 16695 * k3 + 71.0 / 1920 * k4 - 17253.0 / 339200 * k5 +
                          22.0 / 525 * k6 - 1.0 / 40 * k7);
    tr.stats.rhs_evals += 7;
    slow_err = std::max(slow_err, detail::scaled_error<3>(e, z, z_new, ctl.step));
    for (int i = 0; i < 3; ++i) z_new(i) = std::max(z_new(i), 0.0);
    tr.stats.newton_iters += fast.advance(z_new(0), z_new(1), z_new(2), 0.5 * h);
    return z_new;
  };
  auto attempt = [&](double, double h, const Vec<3>& y, Vec<3>& y_new) {
    double slow_err = 0.0;
    const Vec<3> big = strang(y, h, slow_err);
    y_new = strang(strang(y, 0.5 * h, slow_err), 0.5 * h, slow_err);
    if (!y_new.allFinite() || !big.allFinite()) return std::numeric_limits<double>::infinity();
    const double split_err = detail::scaled_error<3>(Vec<3>((y_new - big) / 3.0), y, y_new, ctl.step);
    return std::max(slow_err, split_err);
  };
  const double h0 = ctl.step.h0 > 0.0 ? ctl.step.h0 : std::min(1e-3, t_end);
  detail::drive<3>(attempt, accept, y0, 0.0, t_end, h0, 2, ctl.step, tr.stats);
  return tr;
}

inline Vec<2> macro_rhs(const Model& m, double u, double v, double tol = 1e-12) {
  const double ub = solve_ub_star(m, std::max(u, 0.0), std::max(v, 0.0), tol);
  const double ua = std::max(u, 0.0) - ub;
  const Reactions r = eval_reactions(m.p, ua, ub, v);
  return Vec<2>(r.f_a + r.f_b, r.f_v);
}

/// Diffusionless macroscopic system (u, v) with the closure solved at every stage.
inline OdeTrajectory integrate_macro_ode(const Model& m, const MacroPoint& init, double t_end,
                                         const OdeControls& ctl = {}) {
  m.validate();
  Vec<2> y0(init.u, init.v);
  detail::check_init<2>(y0, t_end);
  OdeTrajectory tr;
  tr.columns = {"u", "v"};
  tr.scheme = "dopri45";
  detail::Clipper<2> clip(y0.sum(), ctl.clip_budget, tr.stats);
  tr.times.push_back(0.0);
  tr.states.push_back(detail::to_std<2>(y0));
  auto f = [&](const Vec<2>& y) { return macro_rhs(m, y(0), y(1), ctl.tol_closure); };
  auto accept = [&](double t, Vec<2>& y, bool record) {
    clip(y);
    if (record) {
      tr.times.push_back(t);
      tr.states.push_back(detail::to_std<2>(y));
    }
  };
  integrate_dopri45<2>(f, accept, y0, 0.0, t_end, ctl.step, tr.stats);
  return tr;
}

/// Resource-explicit system (s1, s2, U1, U2, V).
inline OdeTrajectory integrate_micro_ode(const MicroParams& mp, const MicroVec& init, double t_end,
                                         const OdeControls& ctl = {}) {
  mp.validate();
  Vec<5> y0;
  for (int i = 0; i < 5; ++i) y0(i) = init[static_cast<std::size_t>(i)];
  detail::check_init<5>(y0, t_end);
  if (!(y0(0) > 0.0 && y0(1) > 0.0)) throw ValidationError("initial resources s1, s2 must be > 0");
  OdeTrajectory tr;
  tr.columns = {"s1", "s2", "U1", "U2", "V"};
  tr.scheme = "rosenbrock";
  detail::Clipper<5> clip(y0.sum(), ctl.clip_budget, tr.stats);
  tr.times.push_back(0.0);
  tr.states.push_back(detail::to_std<5>(y0));
  auto f = [&](const Vec<5>& y) {
    MicroVec a;
    for (int i = 0; i < 5; ++i) a[static_cast<std::size_t>(i)] = y(i);
    const MicroVec r = micro_rhs(mp, a);
    Vec<5> out;
    for (int i = 0; i < 5; ++i) out(i) = r[static_cast<std::size_t>(i)];
    return out;
  };
  auto jac = [&](const Vec<5>& y) {
    const Vec<5> fy = f(y);
    return fd_jacobian<5>(f, y, fy);
  };
  auto accept = [&](double t, Vec<5>& y, bool record) {
    clip(y);
    if (record) {
      tr.times.push_back(t);
      tr.states.push_back(detail::to_std<5>(y));
    }
  };
  integrate_rodas3<5>(f, jac, accept, y0, 0.0, t_end, ctl.step, tr.stats);
  return tr;
}

struct LayerProbe {
  std::vector<double> eps;
  std::vector<double> widths;
  double slope = 0.0;  // log-log slope of width against eps (NaN with fewer than two positive widths)
};

/// First time |Q| drops below 1% of |Q(init)|, per eps.
inline LayerProbe initial_layer_probe(const Model& m, const MesoPoint& init,
                                      const std::vector<double>& eps_list, double t_probe = 1.0,
                                      const OdeControls& ctl_in = {}) {
  LayerProbe out;
  const double q0 = std::abs(eval_Q(m, init.u_a, init.u_b, init.v));
  const double qscale = std::max({1.0, m.phi.value((init.u_b + init.v) / m.p.b) * init.u_b,
                                  m.psi.value(init.u_a / m.p.a) * init.u_a});
  OdeControls ctl = ctl_in;
  ctl.step.output_times.clear();
  for (double e : eps_list) {
    out.eps.push_back(e);
    if (q0 <= 1e-14 * qscale) {
      out.widths.push_back(0.0);
      continue;
    }
    Model me = m;
    me.p.epsilon = e;
    const OdeTrajectory tr = integrate_meso_ode(me, init, t_probe, ctl);
    const double thr = 0.01 * q0;
    double width = t_probe;
    double prev_t = 0.0, prev_q = q0;
    for (std::size_t i = 1; i < tr.size(); ++i) {
      const auto& s = tr.states[i];
      const double q = std::abs(eval_Q(me, s[0], s[1], s[2]));
      if (q < thr) {
        // Linear interpolation of |Q| between the bracketing steps.
        const double w = (prev_q - thr) / (prev_q - q);
        width = prev_t + w * (tr.times[i] - prev_t);
        break;
      }
      prev_t = tr.times[i];
      prev_q = q;
    }
    out.widths.push_back(width);
  }
  std::vector<double> xe, yw;
  for (std::size_t i = 0; i < out.eps.size(); ++i)
    if (out.widths[i] > 0.0) {
      xe.push_back(out.eps[i]);
      yw.push_back(out.widths[i]);
    }
  out.slope = xe.size() >= 2 ? loglog_slope(xe, yw) : NAN;
  return out;
}

}  // namespace fastswitch
