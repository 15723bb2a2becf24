#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fastswitch/model.hpp"

namespace fastswitch {

/// Rate evaluator with an inlined affine path for hot loops.
class RateEval {
 public:
  explicit RateEval(const ConversionRate& r) : rate_(&r) {
    if (auto a = r.as_affine()) {
      affine_ = true;
      slope_ = a->slope;
      intercept_ = a->intercept;
    }
  }
  double value(double x) const { return affine_ ? slope_ * x + intercept_ : rate_->value(x); }
  double derivative(double x) const { return affine_ ? slope_ : rate_->derivative(x); }

 private:
  const ConversionRate* rate_;
  bool affine_ = false;
  double slope_ = 0.0;
  double intercept_ = 1.0;
};

/// Exact-conservation sub-flow of the conversion term alone.
///
/// With u = u_a + u_b and v frozen, u_b obeys u_b' = -q(u_b)/eps where q is increasing,
/// so the flow relaxes monotonically to the closure root inside [0, u]. Each substep is
/// a scalar L-stable Rosenbrock 2(3) step with embedded error control.
class FastFlow {
 public:
  FastFlow(const Model& m, double eps, double rtol = 1e-9, double atol = 1e-13)
      : phi_(m.phi), psi_(m.psi), inv_a_(1.0 / m.p.a), inv_b_(1.0 / m.p.b), inv_eps_(1.0 / eps),
        rtol_(rtol), atol_(atol) {}

  /// Advances (u_a, u_b) over tau in place; returns the number of substeps.
  int advance(double& u_a, double& u_b, double v, double tau) const {
    const double u = u_a + u_b;
    if (!(u > 0.0) || !(tau > 0.0)) return 0;
    static const double d = 1.0 / (2.0 + std::sqrt(2.0));
    static const double e32 = 6.0 + std::sqrt(2.0);
    double x = std::clamp(u_b, 0.0, u);
    double t = 0.0;
    double h = tau;
    int substeps = 0;
    const double tol_abs = atol_ + rtol_ * u;
    while (t < tau) {
      if (h > tau - t) h = tau - t;
      const double g0 = g(x, u, v);
      const double W = 1.0 - h * d * dg(x, u, v);
      const double k1 = g0 / W;
      const double g1 = g(std::clamp(x + 0.5 * h * k1, 0.0, u), u, v);
      const double k2 = (g1 - k1) / W + k1;
      const double xn = x + h * k2;
      const double g2 = g(std::clamp(xn, 0.0, u), u, v);
      const double k3 = (g2 - e32 * (k2 - g1) - 2.0 * (k1 - g0)) / W;
      const double err = std::abs(h / 6.0 * (k1 - 2.0 * k2 + k3)) / tol_abs;
      ++substeps;
      if (err <= 1.0 || h <= 1e-14 * tau) {
        x = std::clamp(xn, 0.0, u);
        t += h;
        h *= std::clamp(0.9 * std::cbrt(1.0 / std::max(err, 1e-12)), 0.2, 5.0);
      } else {
        h *= std::clamp(0.9 * std::cbrt(1.0 / err), 0.2, 1.0);
      }
    }
    u_b = x;
    u_a = u - x;
    return substeps;
  }

 private:
  // q(x) = phi((x+v)/b) x - psi((u-x)/a) (u-x); g = -q/eps.
  double g(double x, double u, double v) const {
    const double ua = u - x;
    return -(phi_.value((x + v) * inv_b_) * x - psi_.value(ua * inv_a_) * ua) * inv_eps_;
  }
  double dg(double x, double u, double v) const {
    const double s = (x + v) * inv_b_;
    const double lam = (u - x) * inv_a_;
    return -(phi_.value(s) + x * inv_b_ * phi_.derivative(s) + psi_.value(lam) +
             lam * psi_.derivative(lam)) *
           inv_eps_;
  }

  RateEval phi_, psi_;
  double inv_a_, inv_b_, inv_eps_;
  double rtol_, atol_;
};

/// Per-cell mesoscopic kinetics: slow reactions plus the conversion term.
///
/// Rosenbrock 2(3) on the 3-vector with the analytic Jacobian. The caller keeps a step-size
/// hint per cell so consecutive calls resume near the last accepted step.
class LocalKinetics {
 public:
  LocalKinetics(const Model& m, double rtol = 1e-9, double atol = 1e-13)
      : p_(m.p), phi_(m.phi), psi_(m.psi), inv_a_(1.0 / m.p.a), inv_b_(1.0 / m.p.b),
        inv_eps_(1.0 / m.p.epsilon), rtol_(rtol), atol_(atol) {}

  /// Advances (u_a, u_b, v) over tau in place; returns the number of attempted substeps.
  int advance(double& u_a, double& u_b, double& v, double tau, double& h_hint) const {
    if (!(tau > 0.0)) return 0;
    static const double d = 1.0 / (2.0 + std::sqrt(2.0));
    static const double e32 = 6.0 + std::sqrt(2.0);
    Eigen::Vector3d y(u_a, u_b, v);
    double t = 0.0;
    double h = h_hint > 0.0 ? std::min(h_hint, tau) : tau;
    int substeps = 0;
    while (t < tau) {
      const bool last = h >= tau - t;
      if (last) h = tau - t;
      const Eigen::Vector3d f0 = rhs(y);
      const Eigen::Matrix3d W = Eigen::Matrix3d::Identity() - (h * d) * jac(y);
      const Eigen::Matrix3d Wi = W.inverse();
      const Eigen::Vector3d k1 = Wi * f0;
      const Eigen::Vector3d f1 = rhs((y + 0.5 * h * k1).cwiseMax(0.0));
      const Eigen::Vector3d k2 = Wi * (f1 - k1) + k1;
      const Eigen::Vector3d yn = y + h * k2;
      const Eigen::Vector3d f2 = rhs(yn.cwiseMax(0.0));
      const Eigen::Vector3d k3 = Wi * (f2 - e32 * (k2 - f1) - 2.0 * (k1 - f0));
      const Eigen::Vector3d e = (h / 6.0) * (k1 - 2.0 * k2 + k3);
      double err = 0.0;
      for (int i = 0; i < 3; ++i)
        err = std::max(err, std::abs(e(i)) / (atol_ + rtol_ * std::max(std::abs(y(i)), std::abs(yn(i)))));
      ++substeps;
      if (!yn.allFinite()) err = std::numeric_limits<double>::infinity();
      const double fac = std::clamp(0.9 * std::cbrt(1.0 / std::max(err, 1e-12)), 0.2, 5.0);
      if (err <= 1.0) {
        y = yn.cwiseMax(0.0);
        t = last ? tau : t + h;
        if (!last || fac < 1.0) h_hint = h * fac;
        h *= fac;
      } else {
        if (h <= 1e-14 * tau) throw StepSizeUnderflow("local kinetics step size underflow");
        h *= std::min(fac, 1.0);
      }
    }
    u_a = y(0), u_b = y(1), v = y(2);
    return substeps;
  }

 private:
  Eigen::Vector3d rhs(const Eigen::Vector3d& y) const {
    const double crowd = 1.0 - (y(1) + y(2)) * inv_b_;
    const double q = (phi_.value((y(1) + y(2)) * inv_b_) * y(1) - psi_.value(y(0) * inv_a_) * y(0)) * inv_eps_;
    return {p_.eta_a * y(0) * (1.0 - y(0) * inv_a_) + q, p_.eta_b * y(1) * crowd - q, p_.eta_v * y(2) * crowd};
  }
  Eigen::Matrix3d jac(const Eigen::Vector3d& y) const {
    const double s = (y(1) + y(2)) * inv_b_, lam = y(0) * inv_a_;
    const double beta = (psi_.value(lam) + lam * psi_.derivative(lam)) * inv_eps_;
    const double theta = y(1) * inv_b_ * phi_.derivative(s) * inv_eps_;
    const double gamma = phi_.value(s) * inv_eps_ + theta;
    Eigen::Matrix3d J;
    J << p_.eta_a * (1.0 - 2.0 * lam) - beta, gamma, theta,
        beta, p_.eta_b * (1.0 - (2.0 * y(1) + y(2)) * inv_b_) - gamma, -p_.eta_b * y(1) * inv_b_ - theta,
        0.0, -p_.eta_v * y(2) * inv_b_, p_.eta_v * (1.0 - (y(1) + 2.0 * y(2)) * inv_b_);
    return J;
  }

  ModelParams p_;
  RateEval phi_, psi_;
  double inv_a_, inv_b_, inv_eps_;
  double rtol_, atol_;
};

}  // namespace fastswitch
