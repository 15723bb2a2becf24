#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace fastswitch {

using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using cplx = std::complex<double>;

namespace detail {
inline void sort_by_real_desc(cplx* first, cplx* last) {
  std::sort(first, last, [](const cplx& x, const cplx& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
}
}  // namespace detail

/// Closed-form roots of mu^2 - tr mu + det, sorted by real part descending.
inline std::array<cplx, 2> eigenvalues_2x2(const Mat2& A) {
  const double tr = A.trace();
  const double half = 0.5 * tr;
  // (a-d)^2/4 + bc avoids cancellation in tr^2/4 - det.
  const double diff = 0.5 * (A(0, 0) - A(1, 1));
  const double disc = diff * diff + A(0, 1) * A(1, 0);
  std::array<cplx, 2> out;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    // Larger-magnitude root first, smaller one from the product to keep precision.
    const double big = half >= 0.0 ? half + s : half - s;
    const double det = A.determinant();
    const double small = big != 0.0 ? det / big : 0.0;
    out = {cplx(big, 0.0), cplx(small, 0.0)};
  } else {
    const double s = std::sqrt(-disc);
    out = {cplx(half, s), cplx(half, -s)};
  }
  detail::sort_by_real_desc(out.data(), out.data() + 2);
  return out;
}

inline std::array<cplx, 3> eigenvalues_3x3(const Mat3& A) {
  Eigen::EigenSolver<Mat3> es(A, false);
  const auto& ev = es.eigenvalues();
  std::array<cplx, 3> out = {ev(0), ev(1), ev(2)};
  detail::sort_by_real_desc(out.data(), out.data() + 3);
  return out;
}

struct RouthHurwitz {
  double trace = 0.0;
  double minors_sum = 0.0;  // sum of the principal 2x2 minors
  double det = 0.0;
  std::array<bool, 3> conditions{};  // tr < 0, minors*tr - det < 0, det < 0
  bool stable = false;
  /// First-column Routh array entries: 1, -tr, (minors*tr - det)/tr, -det.
  std::array<double, 4> first_column{};
};

inline RouthHurwitz routh_hurwitz_3x3(const Mat3& A) {
  RouthHurwitz rh;
  rh.trace = A.trace();
  const double m11 = A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
  const double m22 = A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0);
  const double m33 = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  rh.minors_sum = m11 + m22 + m33;
  rh.det = A.determinant();
  const double mixed = rh.minors_sum * rh.trace - rh.det;
  rh.conditions = {rh.trace < 0.0, mixed < 0.0, rh.det < 0.0};
  rh.stable = rh.conditions[0] && rh.conditions[1] && rh.conditions[2];
  rh.first_column = {1.0, -rh.trace, rh.trace != 0.0 ? mixed / rh.trace : 0.0, -rh.det};
  return rh;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

}  // namespace fastswitch
