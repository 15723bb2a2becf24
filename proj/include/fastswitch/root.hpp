#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "fastswitch/error.hpp"

namespace fastswitch {

struct RootOptions {
  double ftol = 1e-12;  // absolute residual tolerance
  int max_iter = 200;
  bool newton = true;  // false: pure bisection
};

struct RootResult {
  double x = 0.0;
  int iterations = 0;
  /// The bracket collapsed to adjacent doubles with the residual still above ftol.
  /// For a discontinuous function this is a sign change across a jump.
  bool collapsed = false;
};

/// Root of a nondecreasing function on [lo, hi] with f(lo) <= 0 <= f(hi).
///
/// `f(x)` returns {value, derivative}. Newton steps are taken from the bisection
/// bracket whenever they stay inside it and halve the residual; otherwise the
/// bracket is bisected.
template <class F>
RootResult solve_increasing(F&& f, double lo, double hi, const RootOptions& opt) {
  auto [flo, dlo] = f(lo);
  auto [fhi, dhi] = f(hi);
  (void)dlo;
  (void)dhi;
  if (std::abs(flo) <= opt.ftol) return {lo, 0, false};
  if (std::abs(fhi) <= opt.ftol) return {hi, 0, false};
  if (!(flo < 0.0 && fhi > 0.0)) {
    std::ostringstream os;
    os << "no sign change on [" << lo << ", " << hi << "]: f(lo)=" << flo << ", f(hi)=" << fhi;
    throw NonBracketing(os.str());
  }

  double x = 0.5 * (lo + hi);
  double prev_res = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iter; ++it) {
    auto [fx, dfx] = f(x);
    const double res = std::abs(fx);
    if (res <= opt.ftol) return {x, it, false};
    if (fx < 0.0)
      lo = x;
    else
      hi = x;

    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) return {mid, it, true};

    double next = mid;
    if (opt.newton && dfx > 0.0 && res <= 0.5 * prev_res) {
      const double xn = x - fx / dfx;
      if (xn > lo && xn < hi) next = xn;
    }
    prev_res = res;
    x = next;
  }
  std::ostringstream os;
  os << "root solver hit the iteration cap (" << opt.max_iter << ") with bracket [" << lo << ", "
     << hi << "]";
  throw NoConvergence(os.str());
}

}  // namespace fastswitch
