#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fastswitch/error.hpp"
#include "fastswitch/rate.hpp"

namespace fastswitch {

/// Scalar coefficients of the three-population system.
struct ModelParams {
  double a = 1.0;  // carrying capacity of the private resource
  double b = 1.0;  // carrying capacity of the shared resource
  double eta_a = 1.0;
  double eta_b = 1.0;
  double eta_v = 1.0;
  double d_a = 0.0;
  double d_b = 0.0;
  double d_v = 0.0;
  double epsilon = 1.0;  // ignored by the macroscopic equations

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Parameters plus the two conversion rates: phi drives u_b -> u_a, psi drives u_a -> u_b.
struct Model {
  ModelParams p;
  ConversionRate phi;
  ConversionRate psi;
  bool allow_h1_violation = false;

  bool continuous_rates() const { return phi.continuous() && psi.continuous(); }

  void collect_issues(std::vector<std::string>& issues) const {
    auto need = [&](bool ok, const char* what) {
      if (!ok) issues.emplace_back(what);
    };
    need(p.a > 0.0, "a must be > 0");
    need(p.b > 0.0, "b must be > 0");
    need(p.eta_a > 0.0, "eta_a must be > 0");
    need(p.eta_b > 0.0, "eta_b must be > 0");
    need(p.eta_v > 0.0, "eta_v must be > 0");
    need(p.d_a >= 0.0, "d_a must be >= 0");
    need(p.d_b >= 0.0, "d_b must be >= 0");
    need(p.d_v >= 0.0, "d_v must be >= 0");
    need(p.epsilon > 0.0, "epsilon must be > 0");
    phi.collect_issues("phi", issues);
    psi.collect_issues("psi", issues);
    if (!allow_h1_violation) {
      need(phi.satisfies_h1(), "phi is discontinuous; set allow_h1_violation to admit it");
      need(psi.satisfies_h1(), "psi is discontinuous; set allow_h1_violation to admit it");
    }
  }

  void validate() const {
    std::vector<std::string> issues;
    collect_issues(issues);
    if (!issues.empty()) {
      std::string msg = "invalid model:";
      for (const auto& i : issues) msg += "\n  " + i;
      throw ValidationError(msg);
    }
  }

  friend bool operator==(const Model&, const Model&) = default;
};

/// Population triple (u_a, u_b, v); T is double in ODE mode and a grid array in PDE mode.
template <class T>
struct MesoState {
  T u_a{};
  T u_b{};
  T v{};
  friend bool operator==(const MesoState&, const MesoState&) = default;
};

/// Total population u = u_a + u_b and competitor v.
template <class T>
struct MacroState {
  T u{};
  T v{};
  friend bool operator==(const MacroState&, const MacroState&) = default;
};

using MesoPoint = MesoState<double>;
using MacroPoint = MacroState<double>;
using MesoField = MesoState<std::vector<double>>;
using MacroField = MacroState<std::vector<double>>;

struct Reactions {
  double f_a = 0.0;
  double f_b = 0.0;
  double f_v = 0.0;
};

/// Logistic / competition reaction terms of order one.
inline Reactions eval_reactions(const ModelParams& p, double u_a, double u_b, double v) {
  const double crowd = 1.0 - (u_b + v) / p.b;
  return {p.eta_a * u_a * (1.0 - u_a / p.a), p.eta_b * u_b * crowd, p.eta_v * v * crowd};
}

/// Net conversion u_b -> u_a without the 1/epsilon factor.
inline double eval_Q(const Model& m, double u_a, double u_b, double v) {
  return m.phi.value((u_b + v) / m.p.b) * u_b - m.psi.value(u_a / m.p.a) * u_a;
}

/// Partial derivatives of Q in normalized form: dQ/du_a = -beta, dQ/du_b = gamma, dQ/dv = theta.
struct ClosurePartials {
  double beta = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
  double r() const { return beta + gamma; }
};

inline ClosurePartials closure_partials_normalized(const Model& m, double lambda, double sigma,
                                                   double delta) {
  const double s = sigma + delta;
  const double dphi = m.phi.derivative(s);
  return {m.psi.value(lambda) + lambda * m.psi.derivative(lambda),
          m.phi.value(s) + sigma * dphi, sigma * dphi};
}

inline ClosurePartials closure_partials(const Model& m, double u_a, double u_b, double v) {
  return closure_partials_normalized(m, u_a / m.p.a, u_b / m.p.b, v / m.p.b);
}

}  // namespace fastswitch
