#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fastswitch/equilibria.hpp"
#include "fastswitch/linalg.hpp"
#include "fastswitch/model.hpp"

namespace fastswitch {

enum class Verdict { stable, unstable, non_hyperbolic, undetermined };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    case Verdict::non_hyperbolic: return "non-hyperbolic";
    case Verdict::undetermined: return "undetermined";
  }
  return "?";
}

/// Verdict from a spectrum with margin 1e-8 * ||A||_F.
template <std::size_t N>
Verdict classify_spectrum(const std::array<cplx, N>& ev, double norm) {
  const double margin = 1e-8 * norm;
  bool flat = false;
  for (const auto& z : ev) {
    if (z.real() > margin) return Verdict::unstable;
    if (std::abs(z.real()) <= margin) flat = true;
  }
  return flat ? Verdict::non_hyperbolic : Verdict::stable;
}

namespace detail {
inline ClosurePartials partials_at(const Model& m, const Equilibrium& eq) {
  const double tol = 1e-9;
  if (eq.on_discontinuity || m.psi.near_jump(eq.lambda, tol) || m.phi.near_jump(eq.sigma + eq.delta, tol))
    throw DiscontinuityError(std::string("rates are not differentiable at the ") + to_string(eq.kind) +
                             " state");
  return closure_partials_normalized(m, eq.lambda, eq.sigma, eq.delta);
}
}  // namespace detail

/// Reaction Jacobian of the diffusionless macroscopic system in (u, v).
inline Mat2 build_M(const Model& m, const Equilibrium& eq) {
  const ClosurePartials cp = detail::partials_at(m, eq);
  const double r = cp.r();
  const double la = eq.lambda, si = eq.sigma, de = eq.delta;
  const ModelParams& p = m.p;
  const double ga = p.eta_a * (1.0 - 2.0 * la);
  const double gb = p.eta_b * (1.0 - 2.0 * si - de);
  Mat2 M;
  M(0, 0) = ga * cp.gamma / r + gb * cp.beta / r;
  M(0, 1) = ga * cp.theta / r - gb * cp.theta / r - p.eta_b * si;
  M(1, 0) = -p.eta_v * de * cp.beta / r;
  M(1, 1) = p.eta_v * de * cp.theta / r + p.eta_v * (1.0 - si - 2.0 * de);
  return M;
}

/// Linearized cross-diffusion matrix.
inline Mat2 build_J(const Model& m, const Equilibrium& eq) {
  const ClosurePartials cp = detail::partials_at(m, eq);
  const double r = cp.r();
  Mat2 J;
  J(0, 0) = (m.p.d_a * cp.gamma + m.p.d_b * cp.beta) / r;
  J(0, 1) = (m.p.d_a - m.p.d_b) * cp.theta / r;
  J(1, 0) = 0.0;
  J(1, 1) = m.p.d_v;
  return J;
}

/// (n pi / length)^2 for n = 0..n_max.
inline std::vector<double> neumann_laplacian_eigenvalues(double length, int n_max) {
  if (!(length > 0.0)) throw ValidationError("interval length must be > 0");
  std::vector<double> out;
  for (int n = 0; n <= n_max; ++n) {
    const double k = n * std::numbers::pi / length;
    out.push_back(k * k);
  }
  return out;
}

inline Mat2 build_N_n(const Mat2& M, const Mat2& J, double lambda_n) { return M - lambda_n * J; }

/// Reaction Jacobian of the mesoscopic system at the coexistence state.
inline Mat3 build_M_eps(const Model& m, const Equilibrium& eq) {
  if (eq.kind != EquilibriumKind::coexistence)
    throw InvalidEquilibrium("mesoscopic Jacobian requires the coexistence state");
  const double alpha = eq.sigma;
  const ClosurePartials cp = detail::partials_at(m, eq);
  const double e = m.p.epsilon;
  const double dq1 = -cp.beta, dq2 = cp.gamma, dq3 = cp.theta;
  const ModelParams& p = m.p;
  Mat3 A;
  A << -p.eta_a + dq1 / e, dq2 / e, dq3 / e,
       -dq1 / e, -p.eta_b * alpha - dq2 / e, -p.eta_b * alpha - dq3 / e,
       0.0, -p.eta_v * (1.0 - alpha), -p.eta_v * (1.0 - alpha);
  return A;
}

inline Mat3 build_N_eps_n(const Mat3& M_eps, const std::array<double, 3>& d, double lambda_n) {
  Mat3 N = M_eps;
  for (int i = 0; i < 3; ++i) N(i, i) -= lambda_n * d[static_cast<std::size_t>(i)];
  return N;
}

struct AsymptoticsResult {
  std::vector<double> eps;
  std::vector<std::array<double, 2>> slow_gaps;  // |mu_i - gamma_i| per eps
  std::vector<double> fast_scaled;               // eps * Re(mu_3) per eps
  std::array<double, 2> slopes{};                // log-log fits of the slow gaps
  double r = 0.0;
  double r_estimate = 0.0;  // -eps * mu_3 at the smallest eps
  bool pass = false;
};

inline AsymptoticsResult spectral_asymptotics_check(const Model& m, const Equilibrium& eq,
                                                    double lambda_n, const std::vector<double>& eps_list) {
  if (eps_list.size() < 3) throw ValidationError("eps_list needs at least three values");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw ValidationError("eps_list must be decreasing");
  if (!(eps_list.front() / eps_list.back() >= 100.0 * (1.0 - 1e-12)))
    throw ValidationError("eps_list must span at least two decades");

  const Mat2 N2 = build_N_n(build_M(m, eq), build_J(m, eq), lambda_n);
  const auto slow = eigenvalues_2x2(N2);
  AsymptoticsResult res;
  res.r = detail::partials_at(m, eq).r();
  const std::array<double, 3> d = {m.p.d_a, m.p.d_b, m.p.d_v};

  for (double e : eps_list) {
    Model me = m;
    me.p.epsilon = e;
    const auto mu = eigenvalues_3x3(build_N_eps_n(build_M_eps(me, eq), d, lambda_n));
    std::array<bool, 3> used{};
    std::array<double, 2> gaps{};
    for (std::size_t i = 0; i < 2; ++i) {
      double best = INFINITY, second = INFINITY;
      std::size_t arg = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        if (used[j]) continue;
        const double dist = std::abs(mu[j] - slow[i]);
        if (dist < best) {
          second = best;
          best = dist;
          arg = j;
        } else if (dist < second) {
          second = dist;
        }
      }
      if (best > 0.0 && second / best < 2.0)
        throw MatchingError("ambiguous slow-eigenvalue pairing at eps=" + std::to_string(e));
      used[arg] = true;
      gaps[i] = best;
    }
    std::size_t fast = 0;
    while (used[fast]) ++fast;
    res.eps.push_back(e);
    res.slow_gaps.push_back(gaps);
    res.fast_scaled.push_back(e * mu[fast].real());
  }

  res.pass = true;
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<double> g;
    for (const auto& s : res.slow_gaps) g.push_back(s[i]);
    res.slopes[i] = loglog_slope(res.eps, g);
    if (!(res.slopes[i] >= 0.8 && res.slopes[i] <= 1.2)) res.pass = false;
  }
  res.r_estimate = -res.fast_scaled.back();
  if (!(std::abs(res.r_estimate - res.r) / res.r <= 0.2)) res.pass = false;
  return res;
}

struct MacroMode {
  int n = 0;
  double lambda_n = 0.0;
  Mat2 N;
  std::array<cplx, 2> eigenvalues;
  Verdict verdict = Verdict::undetermined;
};

struct MesoMode {
  int n = 0;
  double lambda_n = 0.0;
  Mat3 N;
  RouthHurwitz routh;
  std::array<cplx, 3> eigenvalues;
  Verdict verdict = Verdict::undetermined;
};

struct MesoBlock {
  double epsilon = 0.0;
  Mat3 M_eps;
  std::vector<MesoMode> modes;
};

struct StabilityEntry {
  Equilibrium equilibrium;
  std::optional<Mat2> M;
  std::optional<Mat2> J;
  std::vector<MacroMode> modes;
  std::vector<MesoBlock> meso;
  std::optional<AsymptoticsResult> asymptotics;
  std::optional<double> F_prime_value;  // v-extinct states only
  Verdict theory = Verdict::undetermined;   // classification from the sign structure
  Verdict overall = Verdict::undetermined;  // worst verdict over the computed spectra
  bool consistent = true;                   // theory and spectra agree
  std::vector<std::string> errors;
};

struct StabilityReport {
  double alpha = 0.0;
  double length = 1.0;
  int n_max = 64;
  std::vector<double> eps_list;
  std::vector<StabilityEntry> entries;
};

struct StabilityOptions {
  double length = 1.0;
  int n_max = 64;
  std::vector<double> eps_list;  // empty: no mesoscopic block
  int meso_n_max = -1;           // -1: same as n_max
  double lambda_max = 0.0;       // 0: default scan range
  int grid_n = 4096;
};

namespace detail {
inline Verdict worse(Verdict a, Verdict b) {
  auto rank = [](Verdict v) {
    switch (v) {
      case Verdict::stable: return 0;
      case Verdict::non_hyperbolic: return 1;
      case Verdict::unstable: return 2;
      default: return 3;
    }
  };
  return rank(a) >= rank(b) ? a : b;
}

inline Verdict theory_verdict(const Model& m, const Equilibrium& eq, double alpha,
                              std::optional<double> fprime) {
  switch (eq.kind) {
    case EquilibriumKind::trivial:
    case EquilibriumKind::semitrivial_u_extinct:
      return Verdict::unstable;
    case EquilibriumKind::coexistence:
      return Verdict::stable;
    case EquilibriumKind::semitrivial_v_extinct:
      if (alpha_is_one(alpha)) return Verdict::non_hyperbolic;
      if (alpha < 1.0) return Verdict::unstable;
      if (!fprime) return Verdict::undetermined;
      {
        const double scale = std::max(m.p.eta_a * m.p.a, m.p.eta_b * m.p.b);
        if (std::abs(*fprime) <= 1e-8 * scale) return Verdict::non_hyperbolic;
        return *fprime < 0.0 ? Verdict::stable : Verdict::unstable;
      }
  }
  return Verdict::undetermined;
}
}  // namespace detail

inline StabilityEntry analyze_equilibrium(const Model& m, const Equilibrium& eq, double alpha,
                                          const StabilityOptions& opt) {
  StabilityEntry e;
  e.equilibrium = eq;
  if (eq.kind == EquilibriumKind::semitrivial_v_extinct && !eq.on_discontinuity) {
    try {
      e.F_prime_value = F_prime(m, eq.lambda);
    } catch (const Error& err) {
      e.errors.emplace_back(err.what());
    }
  }
  e.theory = detail::theory_verdict(m, eq, alpha, e.F_prime_value);

  try {
    e.M = build_M(m, eq);
    e.J = build_J(m, eq);
    const auto lams = neumann_laplacian_eigenvalues(opt.length, opt.n_max);
    Verdict overall = Verdict::stable;
    for (int n = 0; n <= opt.n_max; ++n) {
      MacroMode mm;
      mm.n = n;
      mm.lambda_n = lams[static_cast<std::size_t>(n)];
      mm.N = build_N_n(*e.M, *e.J, mm.lambda_n);
      mm.eigenvalues = eigenvalues_2x2(mm.N);
      mm.verdict = classify_spectrum(mm.eigenvalues, mm.N.norm());
      overall = detail::worse(overall, mm.verdict);
      e.modes.push_back(mm);
    }
    e.overall = overall;

    if (eq.kind == EquilibriumKind::coexistence && !opt.eps_list.empty()) {
      const int mn = opt.meso_n_max >= 0 ? opt.meso_n_max : opt.n_max;
      const auto mlams = neumann_laplacian_eigenvalues(opt.length, mn);
      const std::array<double, 3> d = {m.p.d_a, m.p.d_b, m.p.d_v};
      for (double eps : opt.eps_list) {
        Model me = m;
        me.p.epsilon = eps;
        MesoBlock blk;
        blk.epsilon = eps;
        blk.M_eps = build_M_eps(me, eq);
        for (int n = 0; n <= mn; ++n) {
          MesoMode md;
          md.n = n;
          md.lambda_n = mlams[static_cast<std::size_t>(n)];
          md.N = build_N_eps_n(blk.M_eps, d, md.lambda_n);
          md.routh = routh_hurwitz_3x3(md.N);
          md.eigenvalues = eigenvalues_3x3(md.N);
          md.verdict = classify_spectrum(md.eigenvalues, md.N.norm());
          blk.modes.push_back(md);
        }
        e.meso.push_back(std::move(blk));
      }
      if (opt.eps_list.size() >= 3) {
        try {
          e.asymptotics = spectral_asymptotics_check(m, eq, 0.0, opt.eps_list);
        } catch (const Error& err) {
          e.errors.emplace_back(err.what());
        }
      }
    }
  } catch (const Error& err) {
    e.errors.emplace_back(err.what());
  }

  e.consistent = e.theory == Verdict::undetermined || e.overall == Verdict::undetermined ||
                 e.theory == e.overall;
  return e;
}

inline StabilityReport stability_report(const Model& m, const StabilityOptions& opt = {}) {
  StabilityReport rep;
  rep.length = opt.length;
  rep.n_max = opt.n_max;
  rep.eps_list = opt.eps_list;
  const EquilibriumSet set = enumerate_equilibria(m, opt.lambda_max, opt.grid_n);
  rep.alpha = set.alpha;
  for (const auto& eq : set.items) rep.entries.push_back(analyze_equilibrium(m, eq, set.alpha, opt));
  return rep;
}

}  // namespace fastswitch
