#pragma once

#include <string>
#include <vector>

#include "fastswitch/config.hpp"

namespace fastswitch {

inline std::vector<std::string> preset_names() {
  return {"paper-coexistence",     "paper-extinction",     "paper-nonunique",
          "paper-pde-coexistence", "paper-pde-extinction", "micro-validation"};
}

namespace detail {
/// Linear rates phi(x) = x + 0.5, psi(x) = 5x + 1 with growth rates (3, 2, 40).
inline Model reference_model(double b) {
  Model m;
  m.p.a = 1.5;
  m.p.b = b;
  m.p.eta_a = 3.0;
  m.p.eta_b = 2.0;
  m.p.eta_v = 40.0;
  m.p.d_a = 2.0;
  m.p.d_b = 0.1;
  m.p.d_v = 0.1;
  m.p.epsilon = 1e-3;
  m.phi = ConversionRate::affine(1.0, 0.5);
  m.psi = ConversionRate::affine(5.0, 1.0);
  return m;
}

inline ScenarioConfig ode_reference(const std::string& name, double b) {
  ScenarioConfig c;
  c.name = name;
  c.mode = Mode::ode_meso;
  c.model = reference_model(b);
  c.init.kind = InitSpec::Kind::literal;
  c.init.values = {{4.0}, {2.0}, {2.5}};
  c.t_end = 30.0;
  c.outputs.dir = name;
  return c;
}

inline ScenarioConfig pde_reference(const std::string& name, double b) {
  ScenarioConfig c = ode_reference(name, b);
  c.mode = Mode::pde_meso;
  c.grid = Grid1D{1.0, 128};
  c.init = InitSpec{};
  c.init.kind = InitSpec::Kind::profile;
  c.init.profile = "oscillatory";
  return c;
}
}  // namespace detail

/// Built-in scenario by name; throws ValidationError for unknown names.
inline ScenarioConfig preset_config(const std::string& name) {
  if (name == "paper-coexistence") return detail::ode_reference(name, 8.0);
  if (name == "paper-extinction") return detail::ode_reference(name, 6.0);
  if (name == "paper-pde-coexistence") return detail::pde_reference(name, 8.0);
  if (name == "paper-pde-extinction") return detail::pde_reference(name, 6.0);
  if (name == "paper-nonunique") {
    ScenarioConfig c;
    c.name = name;
    c.mode = Mode::ode_macro;
    c.model.p.a = 1.0;
    c.model.p.b = 1.0;
    c.model.p.eta_a = 0.2;
    c.model.p.eta_b = 1.0;
    c.model.p.eta_v = 1.0;
    c.model.p.epsilon = 1e-3;
    c.model.phi = ConversionRate::constant(1.0);
    c.model.psi = ConversionRate::step(0.1, 0.3, 1.6);
    c.model.allow_h1_violation = true;
    c.init.kind = InitSpec::Kind::literal;
    c.init.values = {{2.0}, {0.0}};
    c.t_end = 30.0;
    c.stability.lambda_max = 2.0;
    c.stability.eps_list = {};
    c.outputs.dir = name;
    return c;
  }
  if (name == "micro-validation") {
    ScenarioConfig c;
    c.name = name;
    c.mode = Mode::ode_micro;
    MicroParams mp;
    mp.r1 = 1.5;
    mp.r2 = 8.0;
    mp.k1 = 3.0;
    mp.k2 = 2.0;
    mp.kV = 1.0;
    mp.delta = 1e-3;
    mp.epsilon = 1e-1;
    mp.Phi = ConversionRate::affine(0.1, 0.5);
    mp.Psi = ConversionRate::affine(0.5, 1.0);
    c.micro = mp;
    c.model = map_micro_to_meso(mp);
    const auto s = micro_slow_manifold(mp, 1.0, 2.0, 2.5);
    c.init.kind = InitSpec::Kind::literal;
    c.init.values = {{s[0]}, {s[1]}, {1.0}, {2.0}, {2.5}};
    c.t_end = 1.0;
    c.stability.eps_list = {};
    c.outputs.dir = name;
    return c;
  }
  std::string known;
  for (const auto& n : preset_names()) known += " " + n;
  throw ValidationError("unknown preset '" + name + "'; known:" + known);
}

}  // namespace fastswitch
