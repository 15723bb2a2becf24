#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fastswitch/model.hpp"

namespace fastswitch {

struct QuadratureTol {
  double rtol = 1e-10;
  double atol = 1e-14;
};

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double eps) {
  if (!(b > a)) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, eps, 50);
}

/// Breakpoints where rate(x) is not smooth: jumps, plus knots of a bare table.
inline std::vector<double> kinks(const ConversionRate& rate) {
  std::vector<double> out = rate.jumps();
  if (const auto* t = std::get_if<ConversionRate::Table>(&rate.form())) out.insert(out.end(), t->x.begin(), t->x.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Integral of rate(offset + z * slope) * z over z in [0, u], slope > 0.
inline double weighted_moment(const ConversionRate& rate, double offset, double slope, double u,
                              const QuadratureTol& tol = {}) {
  if (!(u > 0.0)) return 0.0;
  if (auto aff = rate.as_affine()) {
    return (aff->slope * offset + aff->intercept) * u * u / 2.0 + aff->slope * slope * u * u * u / 3.0;
  }
  std::vector<double> cuts{0.0};
  for (double x : detail::kinks(rate)) {
    const double z = (x - offset) / slope;
    if (z > 0.0 && z < u) cuts.push_back(z);
  }
  cuts.push_back(u);
  auto integrand = [&](double z) { return rate.value(offset + z * slope) * z; };

  // Coarse pass sets the absolute target from the relative tolerance.
  double coarse = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double l = cuts[i - 1], r = cuts[i];
    coarse += (r - l) / 6.0 * (integrand(l) + 4.0 * integrand(0.5 * (l + r)) + integrand(r));
  }
  const double eps = std::max(tol.atol, tol.rtol * std::abs(coarse));
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    // Evaluate just inside each piece so a jump at the cut is attributed to the right side.
    const double l = cuts[i - 1], r = cuts[i];
    total += detail::adaptive_simpson(integrand, l, r, eps * (r - l) / u);
  }
  return total;
}

/// h1(u_a) = int_0^{u_a} psi(z/a) z dz.
inline double entropy_density_h1(const Model& m, double u_a, const QuadratureTol& tol = {}) {
  return weighted_moment(m.psi, 0.0, 1.0 / m.p.a, u_a, tol);
}

/// h2(u_b, v) = int_0^{u_b} phi((z+v)/b) z dz.
inline double entropy_density_h2(const Model& m, double u_b, double v, const QuadratureTol& tol = {}) {
  return weighted_moment(m.phi, v / m.p.b, 1.0 / m.p.b, u_b, tol);
}

}  // namespace fastswitch
