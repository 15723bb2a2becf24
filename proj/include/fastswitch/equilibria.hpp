#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fastswitch/model.hpp"
#include "fastswitch/root.hpp"

namespace fastswitch {

enum class EquilibriumKind { trivial, semitrivial_u_extinct, semitrivial_v_extinct, coexistence };

inline const char* to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::trivial: return "trivial";
    case EquilibriumKind::semitrivial_u_extinct: return "semitrivial_u_extinct";
    case EquilibriumKind::semitrivial_v_extinct: return "semitrivial_v_extinct";
    case EquilibriumKind::coexistence: return "coexistence";
  }
  return "?";
}

struct Equilibrium {
  EquilibriumKind kind = EquilibriumKind::trivial;
  double u_bar = 0.0;
  double v_bar = 0.0;
  double lambda = 0.0;  // u_a / a
  double sigma = 0.0;   // u_b / b
  double delta = 0.0;   // v / b
  bool on_discontinuity = false;
  double residual = 0.0;  // max residual of the steady-state equations

  double u_a(const ModelParams& p) const { return p.a * lambda; }
  double u_b(const ModelParams& p) const { return p.b * sigma; }
};

struct EquilibriumSet {
  std::vector<Equilibrium> items;
  double alpha = 0.0;
};

inline double compute_alpha(const Model& m) {
  return m.psi.value(1.0) / m.phi.value(1.0) * (m.p.a / m.p.b);
}

/// True when alpha is 1 up to roundoff; the v-extinct state is then pinned at lambda = sigma = 1.
inline bool alpha_is_one(double alpha) { return std::abs(alpha - 1.0) <= 1e-12; }

/// sigma solving sigma phi(sigma)/phi(1) = alpha lambda psi(lambda)/psi(1).
inline double sigma_of_lambda(const Model& m, double lambda) {
  if (!(lambda > 0.0)) return 0.0;
  const double phi1 = m.phi.value(1.0);
  const double target = compute_alpha(m) * lambda * m.psi.value(lambda) / m.psi.value(1.0);
  auto g = [&](double s) {
    return std::pair{s * m.phi.value(s) / phi1 - target,
                     (m.phi.value(s) + s * m.phi.derivative(s)) / phi1};
  };
  double hi = 1.0;
  int guard = 0;
  while (g(hi).first < 0.0) {
    hi *= 2.0;
    if (++guard > 200) throw NoConvergence("sigma_of_lambda: cannot bracket the root");
  }
  RootOptions opt;
  opt.ftol = 1e-15 * std::max(1.0, target);
  opt.newton = m.phi.continuous();
  return solve_increasing(g, 0.0, hi, opt).x;
}

inline double F_of_sigma(const ModelParams& p, double lambda, double sigma) {
  return p.eta_a * p.a * lambda * (1.0 - lambda) + p.eta_b * p.b * sigma * (1.0 - sigma);
}

inline double F_of_lambda(const Model& m, double lambda) {
  return F_of_sigma(m.p, lambda, sigma_of_lambda(m, lambda));
}

inline double F_prime(const Model& m, double lambda) {
  const double sigma = sigma_of_lambda(m, lambda);
  const double tol = 1e-9 * std::max(1.0, lambda);
  if (m.psi.near_jump(lambda, tol) || m.phi.near_jump(sigma, tol))
    throw DiscontinuityError("F_prime evaluated at a rate discontinuity");
  const double beta = m.psi.value(lambda) + lambda * m.psi.derivative(lambda);
  const double gamma0 = m.phi.value(sigma) + sigma * m.phi.derivative(sigma);
  const double dsig = (m.p.a / m.p.b) * beta / gamma0;
  return m.p.eta_a * m.p.a * (1.0 - 2.0 * lambda) + m.p.eta_b * m.p.b * dsig * (1.0 - 2.0 * sigma);
}

/// Upper bound on the larger of (lambda, sigma) at a v-extinct state.
inline double v_extinct_bound(const ModelParams& p, bool lambda_side) {
  const double ratio = lambda_side ? p.b * p.eta_b / (p.a * p.eta_a) : p.a * p.eta_a / (p.b * p.eta_b);
  return 0.5 + 0.5 * std::sqrt(1.0 + ratio);
}

inline double default_lambda_max(const ModelParams& p) {
  return 1.0 + 0.5 * (1.0 + std::sqrt(1.0 + p.b * p.eta_b / (p.a * p.eta_a)));
}

/// Residuals of f_a+f_b = f_v = Q = 0, each divided by the mixed rate scale.
inline double steady_state_residual(const Model& m, double lambda, double sigma, double delta) {
  const ModelParams& p = m.p;
  const double ua = p.a * lambda, ub = p.b * sigma, v = p.b * delta;
  const Reactions r = eval_reactions(p, ua, ub, v);
  const double q = eval_Q(m, ua, ub, v);
  const double scale = std::max({p.eta_a * p.a, p.eta_b * p.b, p.eta_v * p.b,
                                 m.psi.value(lambda) * ua, m.phi.value(sigma + delta) * ub});
  return std::max({std::abs(r.f_a + r.f_b), std::abs(r.f_v), std::abs(q)}) / scale;
}

namespace detail {

inline Equilibrium make_v_extinct(const Model& m, double lambda, double sigma, bool jump) {
  Equilibrium e;
  e.kind = EquilibriumKind::semitrivial_v_extinct;
  e.lambda = lambda;
  e.sigma = sigma;
  e.delta = 0.0;
  e.u_bar = m.p.a * lambda + m.p.b * sigma;
  e.v_bar = 0.0;
  e.on_discontinuity = jump;
  e.residual = steady_state_residual(m, lambda, sigma, 0.0);
  return e;
}

/// sigma at a jump crossing: the root of F(lambda_j, .) = 0 lying between the one-sided sigma limits.
inline double jump_sigma(const Model& m, double lambda_j, double s_lo, double s_hi) {
  const double c = m.p.eta_a * m.p.a * lambda_j * (1.0 - lambda_j) / (m.p.eta_b * m.p.b);
  const double disc = 1.0 + 4.0 * c;
  if (disc < 0.0) return 0.5 * (s_lo + s_hi);
  const double r1 = 0.5 * (1.0 - std::sqrt(disc));
  const double r2 = 0.5 * (1.0 + std::sqrt(disc));
  const double lo = std::min(s_lo, s_hi), hi = std::max(s_lo, s_hi);
  auto dist = [&](double s) { return s < lo ? lo - s : (s > hi ? s - hi : 0.0); };
  return dist(r1) <= dist(r2) ? r1 : r2;
}

}  // namespace detail

/// Scans F over (0, lambda_max] and refines every sign change.
inline std::vector<Equilibrium> find_semitrivial_v_extinct(const Model& m, double lambda_max,
                                                           int grid_n = 4096) {
  if (grid_n < 100) throw ValidationError("grid_n must be >= 100");
  const double alpha = compute_alpha(m);
  if (alpha < 1.0 && !(lambda_max > v_extinct_bound(m.p, true)))
    throw ValidationError("lambda_max must exceed the lambda upper bound of v-extinct states");
  if (!(lambda_max > 1.0)) throw ValidationError("lambda_max must exceed 1");

  std::vector<Equilibrium> out;
  auto lam = [&](int i) { return lambda_max * static_cast<double>(i) / grid_n; };
  double prev_x = lam(1);
  double prev_f = F_of_lambda(m, prev_x);
  for (int i = 2; i <= grid_n; ++i) {
    const double x = lam(i);
    const double f = F_of_lambda(m, x);
    if (prev_f == 0.0) {
      out.push_back(detail::make_v_extinct(m, prev_x, sigma_of_lambda(m, prev_x), false));
    } else if (f != 0.0 && (prev_f > 0.0) != (f > 0.0)) {
      double lo = prev_x, hi = x, flo = prev_f;
      for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = F_of_lambda(m, mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm > 0.0) == (flo > 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double f_lo = F_of_lambda(m, lo), f_hi = F_of_lambda(m, hi);
      double root = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
      const double fscale = std::max(m.p.eta_a * m.p.a, m.p.eta_b * m.p.b) * std::max(1.0, root * root);
      const bool jump = !m.continuous_rates() && std::min(std::abs(f_lo), std::abs(f_hi)) > 1e-9 * fscale;
      if (jump) {
        for (double j : m.psi.jumps())
          if (std::abs(j - root) <= 1e-9 * std::max(1.0, j)) root = j;
        const double s_lo = sigma_of_lambda(m, lo), s_hi = sigma_of_lambda(m, hi);
        out.push_back(detail::make_v_extinct(m, root, detail::jump_sigma(m, root, s_lo, s_hi), true));
      } else {
        double sigma = sigma_of_lambda(m, root);
        if (alpha_is_one(alpha) && std::abs(root - 1.0) <= 1e-8 && std::abs(sigma - 1.0) <= 1e-8) {
          root = 1.0;
          sigma = 1.0;
        }
        out.push_back(detail::make_v_extinct(m, root, sigma, false));
      }
    }
    prev_x = x;
    prev_f = f;
  }
  if (out.empty())
    throw EmptyResult("no sign change of F on (0, lambda_max]; increase lambda_max");
  return out;
}

inline std::vector<Equilibrium> find_semitrivial_v_extinct(const Model& m) {
  return find_semitrivial_v_extinct(m, default_lambda_max(m.p));
}

inline EquilibriumSet enumerate_equilibria(const Model& m, double lambda_max = 0.0, int grid_n = 4096) {
  EquilibriumSet set;
  set.alpha = compute_alpha(m);
  const ModelParams& p = m.p;

  Equilibrium zero;
  zero.kind = EquilibriumKind::trivial;
  set.items.push_back(zero);

  Equilibrium u_ext;
  u_ext.kind = EquilibriumKind::semitrivial_u_extinct;
  u_ext.v_bar = p.b;
  u_ext.delta = 1.0;
  u_ext.residual = steady_state_residual(m, 0.0, 0.0, 1.0);
  set.items.push_back(u_ext);

  const double lmax = lambda_max > 0.0 ? lambda_max : default_lambda_max(p);
  for (auto& e : find_semitrivial_v_extinct(m, lmax, grid_n)) set.items.push_back(e);

  if (set.alpha < 1.0 && !alpha_is_one(set.alpha)) {
    Equilibrium c;
    c.kind = EquilibriumKind::coexistence;
    c.lambda = 1.0;
    c.sigma = set.alpha;
    c.delta = 1.0 - set.alpha;
    c.u_bar = p.a + p.b * set.alpha;
    c.v_bar = p.b * (1.0 - set.alpha);
    c.residual = steady_state_residual(m, c.lambda, c.sigma, c.delta);
    set.items.push_back(c);
  }

  for (const auto& e : set.items) {
    if (!e.on_discontinuity && e.residual > 1e-9) {
      throw NoConvergence(std::string("equilibrium residual too large for ") + to_string(e.kind) +
                          " state: " + std::to_string(e.residual));
    }
  }
  return set;
}

struct UniquenessReport {
  double alpha = 0.0;
  /// Set only when alpha != 1; the condition depends on the side of 1.
  std::optional<bool> half_point_condition_holds;
  double half_point_value = 0.0;  // alpha Lambda(1/2) or Sigma(1/2)/alpha
  bool alpha_boundary = false;
  bool affine_uniqueness_applies = false;
  double omega1 = 0.0;
  double omega2 = 0.0;
};

inline UniquenessReport check_uniqueness_conditions(const Model& m) {
  UniquenessReport rep;
  rep.alpha = compute_alpha(m);
  if (alpha_is_one(rep.alpha)) {
    rep.alpha_boundary = true;
  } else if (rep.alpha > 1.0) {
    rep.half_point_value = rep.alpha * 0.5 * m.psi.value(0.5) / m.psi.value(1.0);
    rep.half_point_condition_holds = rep.half_point_value <= 1.0;
  } else {
    rep.half_point_value = 0.5 * m.phi.value(0.5) / m.phi.value(1.0) / rep.alpha;
    rep.half_point_condition_holds = rep.half_point_value <= 1.0;
  }

  const auto phi_aff = m.phi.as_affine();
  const auto psi_aff = m.psi.as_affine();
  if (phi_aff && psi_aff && phi_aff->intercept > 0.0) {
    const double w1 = psi_aff->intercept / phi_aff->intercept;
    if (phi_aff->slope > 0.0) {
      rep.affine_uniqueness_applies = true;
      rep.omega1 = w1;
      rep.omega2 = psi_aff->slope / (w1 * phi_aff->slope);
    } else if (psi_aff->slope == 0.0) {
      rep.affine_uniqueness_applies = true;
      rep.omega1 = w1;
      rep.omega2 = 0.0;
    }
  }
  return rep;
}

}  // namespace fastswitch
