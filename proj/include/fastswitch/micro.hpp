#pragma once

#include <array>
#include <string>
#include <vector>

#include "fastswitch/model.hpp"

namespace fastswitch {

/// Resource-explicit model: two logistic resources s1, s2 harvested by U1, U2 and V.
struct MicroParams {
  double r1 = 1.0, r2 = 1.0;  // resource growth rates
  double A1 = 1.0, A2 = 1.0;  // resource carrying capacities
  double p1 = 1.0, p2 = 1.0, pV = 1.0;  // harvesting rates
  double k1 = 1.0, k2 = 1.0, kV = 1.0;  // conversion efficiencies
  double D1 = 0.0, D2 = 0.0, DV = 0.0;
  double delta = 1e-3;  // resource time scale
  double epsilon = 1e-1;  // switching time scale
  double x_cap = 0.999;  // domain cap of the composed mesoscopic rates
  ConversionRate Phi = ConversionRate::constant(1.0);
  ConversionRate Psi = ConversionRate::constant(1.0);

  void validate() const {
    std::vector<std::string> issues;
    auto need = [&](bool ok, const char* what) {
      if (!ok) issues.emplace_back(what);
    };
    for (double x : {r1, r2, A1, A2, p1, p2, pV, k1, k2, kV}) need(x > 0.0, "micro rates must be > 0");
    need(D1 >= 0.0 && D2 >= 0.0 && DV >= 0.0, "micro diffusivities must be >= 0");
    need(delta > 0.0, "delta must be > 0");
    need(epsilon > 0.0, "epsilon must be > 0");
    need(delta < epsilon, "delta must be smaller than epsilon");
    need(x_cap > 0.0 && x_cap < 1.0, "x_cap must lie in (0,1)");
    Phi.collect_issues("Phi", issues);
    Psi.collect_issues("Psi", issues);
    if (!issues.empty()) {
      std::string msg = "invalid micro parameters:";
      for (const auto& i : issues) msg += "\n  " + i;
      throw ValidationError(msg);
    }
  }

  friend bool operator==(const MicroParams&, const MicroParams&) = default;
};

namespace detail {
inline ConversionRate compose_rate(double coeff, const ConversionRate& base, double cap) {
  if (auto aff = base.as_affine(); aff && aff->slope == 0.0)
    return ConversionRate::constant(aff->intercept);
  return ConversionRate::composed(coeff, base, cap);
}
}  // namespace detail

/// Mesoscopic model obtained in the limit delta -> 0.
inline Model map_micro_to_meso(const MicroParams& m) {
  Model out;
  out.p.eta_a = m.p1 * m.A1 * m.k1;
  out.p.eta_b = m.p2 * m.A2 * m.k2;
  out.p.eta_v = m.pV * m.A2 * m.kV;
  out.p.a = m.r1 / m.p1;
  out.p.b = m.r2 / m.p2;
  out.p.d_a = m.D1;
  out.p.d_b = m.D2;
  out.p.d_v = m.DV;
  out.p.epsilon = m.epsilon;
  out.phi = detail::compose_rate(m.r2 / m.A2, m.Phi, m.x_cap);
  out.psi = detail::compose_rate(m.r1 / m.A1, m.Psi, m.x_cap);
  return out;
}

/// State ordering: s1, s2, U1, U2, V.
using MicroVec = std::array<double, 5>;

inline MicroVec micro_rhs(const MicroParams& m, const MicroVec& y) {
  const auto [s1, s2, U1, U2, V] = y;
  const double conv = m.Phi.value((m.p2 * U2 + m.pV * V) / s2) * U2 - m.Psi.value(m.p1 * U1 / s1) * U1;
  return {(m.r1 * s1 * (1.0 - s1 / m.A1) - m.p1 * s1 * U1) / m.delta,
          (m.r2 * s2 * (1.0 - s2 / m.A2) - m.p2 * s2 * U2 - m.pV * s2 * V) / m.delta,
          m.k1 * m.p1 * s1 * U1 + conv / m.epsilon, m.k2 * m.p2 * s2 * U2 - conv / m.epsilon,
          m.kV * m.pV * s2 * V};
}

/// Quasi-steady resource levels (nontrivial branch).
inline std::array<double, 2> micro_slow_manifold(const MicroParams& m, double U1, double U2, double V) {
  return {m.A1 * (1.0 - m.p1 * U1 / m.r1), m.A2 * (1.0 - (m.p2 * U2 + m.pV * V) / m.r2)};
}

/// Right-hand side of the (U1, U2, V) system with resources slaved to the slow manifold.
inline std::array<double, 3> micro_slow_rhs(const MicroParams& m, double U1, double U2, double V) {
  const auto [s1, s2] = micro_slow_manifold(m, U1, U2, V);
  const double Phi = m.Phi.value(m.r2 / s2 - m.r2 / m.A2);
  const double Psi = m.Psi.value(m.r1 / s1 - m.r1 / m.A1);
  const double conv = (Phi * U2 - Psi * U1) / m.epsilon;
  const double crowd2 = 1.0 - (m.p2 * U2 + m.pV * V) / m.r2;
  return {m.A1 * m.k1 * m.p1 * U1 * (1.0 - m.p1 * U1 / m.r1) + conv,
          m.A2 * m.k2 * m.p2 * U2 * crowd2 - conv, m.A2 * m.kV * m.pV * V * crowd2};
}

inline MesoPoint micro_to_meso_state(const MicroParams& m, double U1, double U2, double V) {
  return {U1, U2, m.pV / m.p2 * V};
}

}  // namespace fastswitch
