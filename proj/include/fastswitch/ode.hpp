#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fastswitch/error.hpp"

namespace fastswitch {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int N>
using Mat = Eigen::Matrix<double, N, N>;

struct StepControls {
  double rtol = 1e-8;
  double atol = 1e-12;
  double h0 = 0.0;     // 0: automatic
  double h_max = 0.0;  // 0: unbounded
  long max_steps = 50'000'000;
  /// Accepted states are recorded only at these times when nonempty; otherwise every step.
  std::vector<double> output_times;
};

struct OdeStats {
  long steps_accepted = 0;
  long steps_rejected = 0;
  long newton_iters = 0;
  long rhs_evals = 0;
  long jac_evals = 0;
  long clipped_count = 0;
  double clipped_mass = 0.0;
};

/// PI step-size controller: safety 0.9, ratio clamped to [0.2, 5].
class PiController {
 public:
  explicit PiController(int order) : k_(order + 1.0) {}

  /// Returns the ratio h_new / h for scaled error `err` (accepted iff err <= 1).
  double ratio(double err, bool accepted) {
    constexpr double safety = 0.9, lo = 0.2, hi = 5.0;
    if (!(err > 0.0)) return accepted ? hi : lo;
    double fac;
    if (accepted) {
      fac = safety * std::pow(err, -0.7 / k_) * std::pow(prev_err_, 0.4 / k_);
      prev_err_ = std::max(err, 1e-4);
      if (rejected_last_) fac = std::min(fac, 1.0);
      rejected_last_ = false;
    } else {
      fac = safety * std::pow(err, -1.0 / k_);
      rejected_last_ = true;
    }
    return std::clamp(fac, lo, hi);
  }

 private:
  double k_;
  double prev_err_ = 1.0;
  bool rejected_last_ = false;
};

namespace detail {

template <int N>
double scaled_error(const Vec<N>& err, const Vec<N>& y0, const Vec<N>& y1, const StepControls& c) {
  double e = 0.0;
  for (int i = 0; i < N; ++i) {
    const double sc = c.atol + c.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    e = std::max(e, std::abs(err(i)) / sc);
  }
  return e;
}

template <int N, class F>
double initial_step(F& f, const Vec<N>& y, const Vec<N>& f0, double span, const StepControls& c) {
  if (c.h0 > 0.0) return std::min(c.h0, span);
  double d0 = 0.0, d1 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double sc = c.atol + c.rtol * std::abs(y(i));
    d0 = std::max(d0, std::abs(y(i)) / sc);
    d1 = std::max(d1, std::abs(f0(i)) / sc);
  }
  (void)f;
  double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  return std::min(h, span);
}

/// Drives an adaptive one-step method through [t0, t_end], landing exactly on output times.
///
/// `attempt(t, h, y, y_new)` returns the scaled error of one trial step.
/// `accept(t, y)` post-processes an accepted state (clipping) and records it.
template <int N, class Attempt, class Accept>
Vec<N> drive(Attempt&& attempt, Accept&& accept, Vec<N> y, double t0, double t_end, double h,
             int order, const StepControls& c, OdeStats& st) {
  PiController pi(order);
  double t = t0;
  std::size_t next_out = 0;
  const auto& outs = c.output_times;
  while (next_out < outs.size() && outs[next_out] <= t0) ++next_out;
  const double h_floor = 1e-14 * std::max(1.0, std::abs(t_end));
  Vec<N> y_new;
  while (t < t_end) {
    if (st.steps_accepted + st.steps_rejected >= c.max_steps)
      throw StepSizeUnderflow("step budget exhausted at t=" + std::to_string(t));
    if (c.h_max > 0.0) h = std::min(h, c.h_max);
    double target = t_end;
    if (next_out < outs.size()) target = std::min(target, outs[next_out]);
    bool lands = false;
    if (t + h >= target || target - (t + h) < 1e-12 * std::max(1.0, target)) {
      h = target - t;
      lands = true;
    }
    const double err = attempt(t, h, y, y_new);
    if (std::isfinite(err) && err <= 1.0) {
      const double ratio = pi.ratio(err, true);
      t = lands ? target : t + h;
      y = y_new;
      ++st.steps_accepted;
      const bool record = outs.empty() || (next_out < outs.size() && lands && target == outs[next_out]);
      if (lands && next_out < outs.size() && target == outs[next_out]) ++next_out;
      accept(t, y, record);
      h *= ratio;
    } else {
      ++st.steps_rejected;
      h *= std::isfinite(err) ? pi.ratio(err, false) : 0.2;
      if (h < h_floor) {
        std::ostringstream os;
        os << "step size underflow at t=" << t << " (h=" << h << ")";
        throw StepSizeUnderflow(os.str());
      }
    }
  }
  return y;
}

}  // namespace detail

/// Stiffly accurate, L-stable Rosenbrock method of order 3 with an order-2 embedded solution
/// (four stages, three function evaluations). The order-3 solution is propagated, so the
/// global error scales with the tolerance.
template <int N, class F, class J, class Accept>
Vec<N> integrate_rodas3(F&& f, J&& jac, Accept&& accept, const Vec<N>& y0, double t0, double t_end,
                        const StepControls& c, OdeStats& st) {
  constexpr double gamma = 0.5;
  Vec<N> f0 = f(y0);
  ++st.rhs_evals;
  const double h = detail::initial_step<N>(f, y0, f0, t_end - t0, c);

  auto attempt = [&](double /*t*/, double hh, const Vec<N>& y, Vec<N>& y_new) {
    const double ih = 1.0 / hh;
    const Mat<N> W = Mat<N>::Identity() * (ih / gamma) - jac(y);
    ++st.jac_evals;
    const Eigen::PartialPivLU<Mat<N>> lu(W);
    const Vec<N> F0 = f(y);
    const Vec<N> k1 = lu.solve(F0);
    const Vec<N> k2 = lu.solve(F0 + (4.0 * ih) * k1);
    const Vec<N> F2 = f(y + 2.0 * k1);
    const Vec<N> k3 = lu.solve(F2 + ih * (k1 - k2));
    const Vec<N> F3 = f(y + 2.0 * k1 + k3);
    const Vec<N> k4 = lu.solve(F3 + ih * (k1 - k2 - (8.0 / 3.0) * k3));
    st.rhs_evals += 3;
    ++st.newton_iters;
    y_new = y + 2.0 * k1 + k3 + k4;
    if (!y_new.allFinite()) return std::numeric_limits<double>::infinity();
    return detail::scaled_error<N>(k4, y, y_new, c);
  };
  return detail::drive<N>(attempt, accept, y0, t0, t_end, h, 2, c, st);
}

/// Dormand-Prince 5(4) with local extrapolation.
template <int N, class F, class Accept>
Vec<N> integrate_dopri45(F&& f, Accept&& accept, const Vec<N>& y0, double t0, double t_end,
                         const StepControls& c, OdeStats& st) {
  static constexpr double a21 = 1.0 / 5, a31 = 3.0 / 40, a32 = 9.0 / 40, a41 = 44.0 / 45,
                          a42 = -56.0 / 15, a43 = 32.0 / 9, a51 = 19372.0 / 6561,
                          a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729,
                          a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656, b1 = 35.0 / 384,
                          b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84,
                          e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  Vec<N> f0 = f(y0);
  ++st.rhs_evals;
  const double h = detail::initial_step<N>(f, y0, f0, t_end - t0, c);
  Vec<N> k1 = f0;  // FSAL

  auto attempt = [&](double /*t*/, double hh, const Vec<N>& y, Vec<N>& y_new) {
    const Vec<N> k2 = f(y + hh * (a21 * k1));
    const Vec<N> k3 = f(y + hh * (a31 * k1 + a32 * k2));
    const Vec<N> k4 = f(y + hh * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec<N> k5 = f(y + hh * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec<N> k6 = f(y + hh * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    y_new = y + hh * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec<N> k7 = f(y_new);
    st.rhs_evals += 6;
    const Vec<N> err = hh * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    if (!y_new.allFinite()) return std::numeric_limits<double>::infinity();
    const double e = detail::scaled_error<N>(err, y, y_new, c);
    if (e <= 1.0) k1 = k7;
    return e;
  };
  // Clipping in `accept` changes y, so FSAL is refreshed there.
  auto acc = [&](double t, Vec<N>& y, bool record) {
    const Vec<N> before = y;
    accept(t, y, record);
    if (y != before) {
      k1 = f(y);
      ++st.rhs_evals;
    }
  };
  return detail::drive<N>(attempt, acc, y0, t0, t_end, h, 4, c, st);
}

/// Forward-difference Jacobian.
template <int N, class F>
Mat<N> fd_jacobian(F& f, const Vec<N>& y, const Vec<N>& fy) {
  Mat<N> J;
  for (int j = 0; j < N; ++j) {
    Vec<N> yp = y;
    const double h = std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, std::abs(y(j)));
    yp(j) += h;
    J.col(j) = (f(yp) - fy) / h;
  }
  return J;
}

}  // namespace fastswitch
