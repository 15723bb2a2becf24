#pragma once

#include <algorithm>
#include <cmath>

#include "fastswitch/model.hpp"
#include "fastswitch/root.hpp"

namespace fastswitch {

struct ClosureSolution {
  double u_b = 0.0;
  int iterations = 0;
  bool at_jump = false;  // root sits on a rate discontinuity
};

/// Solves u_a + u_b = u, Q(u_a, u_b, v) = 0 for u_b.
///
/// q(u_b) = Q(u - u_b, u_b, v) is strictly increasing with q(0) < 0 < q(u), so the
/// root is unique. The residual target is tol * max(1, phi((u+v)/b) u, psi(u/a) u).
/// Discontinuous rates fall back to bisection; a sign change across a jump returns
/// the jump location.
inline ClosureSolution solve_closure(const Model& m, double u, double v, double tol = 1e-12) {
  if (!(u > 0.0)) return {0.0, 0, false};
  const double a = m.p.a;
  const double b = m.p.b;
  const double scale = std::max({1.0, m.phi.value((u + v) / b) * u, m.psi.value(u / a) * u});

  auto q = [&](double ub) {
    const double ua = u - ub;
    const double lam = ua / a;
    const double sig = ub / b;
    const double s = (ub + v) / b;
    const double ph = m.phi.value(s);
    const double ps = m.psi.value(lam);
    const double val = ph * ub - ps * ua;
    const double der = ph + sig * m.phi.derivative(s) + ps + lam * m.psi.derivative(lam);
    return std::pair{val, der};
  };

  RootOptions opt;
  opt.ftol = tol * scale;
  opt.newton = m.continuous_rates();
  const RootResult res = solve_increasing(q, 0.0, u, opt);
  return {res.x, res.iterations, res.collapsed && !m.continuous_rates()};
}

inline double solve_ub_star(const Model& m, double u, double v, double tol = 1e-12) {
  return solve_closure(m, u, v, tol).u_b;
}

/// Derivative of u_b*(u, v) with respect to u; lies in (0, 1).
inline double dub_star_du(const Model& m, double u, double v, double tol = 1e-12) {
  if (!(u > 0.0)) throw DegenerateInput("dub_star_du requires u > 0");
  const double ub = solve_ub_star(m, u, v, tol);
  const ClosurePartials cp = closure_partials(m, u - ub, ub, v);
  return cp.beta / (cp.beta + cp.gamma);
}

}  // namespace fastswitch
