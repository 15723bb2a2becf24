#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fastswitch/error.hpp"
#include "fastswitch/io.hpp"
#include "fastswitch/micro.hpp"
#include "fastswitch/model.hpp"
#include "fastswitch/pde_sim.hpp"

namespace fastswitch {

enum class Mode { ode_meso, ode_macro, ode_micro, pde_meso, pde_macro };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::ode_meso: return "ode_meso";
    case Mode::ode_macro: return "ode_macro";
    case Mode::ode_micro: return "ode_micro";
    case Mode::pde_meso: return "pde_meso";
    case Mode::pde_macro: return "pde_macro";
  }
  return "?";
}

inline bool is_pde(Mode m) { return m == Mode::pde_meso || m == Mode::pde_macro; }

/// Component names of the state vector in each mode.
inline std::vector<std::string> mode_components(Mode m) {
  switch (m) {
    case Mode::ode_meso:
    case Mode::pde_meso: return {"u_a", "u_b", "v"};
    case Mode::ode_macro:
    case Mode::pde_macro: return {"u", "v"};
    case Mode::ode_micro: return {"s1", "s2", "U1", "U2", "V"};
  }
  return {};
}

/// Initial data: literal values per component, a named profile, or a CSV file.
struct InitSpec {
  enum class Kind { literal, profile, file };
  Kind kind = Kind::literal;
  std::vector<std::vector<double>> values;  // literal: per component, length 1 (broadcast) or n_cells
  std::string profile;                      // "oscillatory"
  std::string path;
  friend bool operator==(const InitSpec&, const InitSpec&) = default;
};

struct RunControls {
  double rtol = 1e-8;
  double atol = 1e-12;
  double cfl = 0.8;
  double tol_closure = 1e-12;
  double dt_max = 1e-3;
  std::string scheme = "rosenbrock";  // meso ODE: rosenbrock | strang
  bool neumann_u = false;
  friend bool operator==(const RunControls&, const RunControls&) = default;
};

struct OutputSettings {
  std::string dir = "out";
  std::vector<double> snapshot_times;  // empty: n_snapshots default cadence
  int n_snapshots = 200;
  std::vector<std::string> formats{"csv", "json"};
  friend bool operator==(const OutputSettings&, const OutputSettings&) = default;
};

struct StabilitySettings {
  int n_max = 64;
  std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
  int meso_n_max = 16;
  double lambda_max = 0.0;
  int grid_n = 4096;
  friend bool operator==(const StabilitySettings&, const StabilitySettings&) = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  Mode mode = Mode::ode_meso;
  Model model;
  std::optional<MicroParams> micro;  // when set, `model` is derived from it
  Grid1D grid;
  InitSpec init;
  double t_end = 1.0;
  RunControls controls;
  OutputSettings outputs;
  StabilitySettings stability;
  std::uint64_t seed = 0;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

// ---------------------------------------------------------------- emit

inline json rate_to_json(const ConversionRate& r) {
  return std::visit(
      [](const auto& f) -> json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConversionRate::Affine>) {
          return {{"form", "affine"}, {"slope", f.slope}, {"intercept", f.intercept}};
        } else if constexpr (std::is_same_v<T, ConversionRate::Scaled>) {
          return {{"form", "scaled"}, {"outer", f.outer}, {"inner", f.inner}, {"base", rate_to_json(*f.base)}};
        } else if constexpr (std::is_same_v<T, ConversionRate::Step>) {
          return {{"form", "step"}, {"low", f.low}, {"high", f.high}, {"threshold", f.threshold}};
        } else if constexpr (std::is_same_v<T, ConversionRate::Table>) {
          return {{"form", "table"}, {"x", f.x}, {"y", f.y}};
        } else {
          return {{"form", "composed"}, {"coeff", f.coeff}, {"cap", f.cap}, {"base", rate_to_json(*f.base)}};
        }
      },
      r.form());
}

inline json params_to_json(const ModelParams& p) {
  return {{"a", p.a},         {"b", p.b},         {"eta_a", p.eta_a}, {"eta_b", p.eta_b}, {"eta_v", p.eta_v},
          {"d_a", p.d_a},     {"d_b", p.d_b},     {"d_v", p.d_v},     {"epsilon", p.epsilon}};
}

inline json micro_to_json(const MicroParams& m) {
  return {{"r1", m.r1},       {"r2", m.r2},       {"A1", m.A1},       {"A2", m.A2},
          {"p1", m.p1},       {"p2", m.p2},       {"pV", m.pV},       {"k1", m.k1},
          {"k2", m.k2},       {"kV", m.kV},       {"D1", m.D1},       {"D2", m.D2},
          {"DV", m.DV},       {"delta", m.delta}, {"epsilon", m.epsilon}, {"x_cap", m.x_cap},
          {"Phi", rate_to_json(m.Phi)}, {"Psi", rate_to_json(m.Psi)}};
}

inline json emit_config(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["mode"] = to_string(c.mode);
  if (c.micro) {
    j["model"] = {{"micro", micro_to_json(*c.micro)}};
  } else {
    j["model"] = {{"params", params_to_json(c.model.p)},
                  {"phi", rate_to_json(c.model.phi)},
                  {"psi", rate_to_json(c.model.psi)},
                  {"allow_h1_violation", c.model.allow_h1_violation}};
  }
  j["grid"] = {{"length", c.grid.length}, {"n_cells", c.grid.n_cells}};
  switch (c.init.kind) {
    case InitSpec::Kind::literal: {
      json lit = json::object();
      const auto names = mode_components(c.mode);
      for (std::size_t i = 0; i < names.size() && i < c.init.values.size(); ++i) {
        const auto& v = c.init.values[i];
        lit[names[i]] = v.size() == 1 ? json(v[0]) : json(v);
      }
      j["init"] = {{"literal", lit}};
      break;
    }
    case InitSpec::Kind::profile: j["init"] = {{"profile", c.init.profile}}; break;
    case InitSpec::Kind::file: j["init"] = {{"file", c.init.path}}; break;
  }
  j["t_end"] = c.t_end;
  j["controls"] = {{"rtol", c.controls.rtol},     {"atol", c.controls.atol},
                   {"cfl", c.controls.cfl},       {"tol_closure", c.controls.tol_closure},
                   {"dt_max", c.controls.dt_max}, {"scheme", c.controls.scheme},
                   {"neumann_u", c.controls.neumann_u}};
  j["outputs"] = {{"dir", c.outputs.dir},
                  {"snapshot_times", c.outputs.snapshot_times},
                  {"n_snapshots", c.outputs.n_snapshots},
                  {"formats", c.outputs.formats}};
  j["stability"] = {{"n_max", c.stability.n_max},
                    {"eps_list", c.stability.eps_list},
                    {"meso_n_max", c.stability.meso_n_max},
                    {"lambda_max", c.stability.lambda_max},
                    {"grid_n", c.stability.grid_n}};
  j["seed"] = c.seed;
  return j;
}

// ---------------------------------------------------------------- parse

namespace detail {

/// Reads one JSON object, remembering which keys were consumed so leftovers can be reported.
class ObjReader {
 public:
  ObjReader(const json& j, std::string path, std::vector<std::string>& issues)
      : j_(j), path_(std::move(path)), issues_(issues) {
    if (!j_.is_object()) issues_.push_back(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* raw(const std::string& key) {
    if (!j_.is_object()) return nullptr;
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double num(const std::string& key, double def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number()) {
      issues_.push_back(child_path(key) + ": expected a number");
      return def;
    }
    return v->get<double>();
  }

  int integer(const std::string& key, int def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number_integer()) {
      issues_.push_back(child_path(key) + ": expected an integer");
      return def;
    }
    return v->get<int>();
  }

  std::uint64_t u64(const std::string& key, std::uint64_t def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      issues_.push_back(child_path(key) + ": expected a nonnegative integer");
      return def;
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_boolean()) {
      issues_.push_back(child_path(key) + ": expected true or false");
      return def;
    }
    return v->get<bool>();
  }

  std::string str(const std::string& key, const std::string& def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_string()) {
      issues_.push_back(child_path(key) + ": expected a string");
      return def;
    }
    return v->get<std::string>();
  }

  std::vector<double> nums(const std::string& key, const std::vector<double>& def) {
    const json* v = raw(key);
    if (!v) return def;
    return to_doubles(*v, child_path(key));
  }

  std::vector<std::string> strs(const std::string& key, const std::vector<std::string>& def) {
    const json* v = raw(key);
    if (!v) return def;
    std::vector<std::string> out;
    if (!v->is_array()) {
      issues_.push_back(child_path(key) + ": expected an array of strings");
      return def;
    }
    for (const auto& x : *v) {
      if (!x.is_string()) {
        issues_.push_back(child_path(key) + ": expected an array of strings");
        return def;
      }
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  std::vector<double> to_doubles(const json& v, const std::string& where) {
    std::vector<double> out;
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) {
      issues_.push_back(where + ": expected a number or an array of numbers");
      return out;
    }
    for (const auto& x : v) {
      if (!x.is_number()) {
        issues_.push_back(where + ": expected an array of numbers");
        return {};
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  /// Reports keys present in the object but never read.
  void finish() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) issues_.push_back(child_path(it.key()) + ": unknown key");
  }

  std::string where() const { return path_.empty() ? "<root>" : path_; }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& issues_;
  std::set<std::string> used_;
};

inline ConversionRate parse_rate(const json& j, const std::string& path, std::vector<std::string>& issues) {
  ObjReader r(j, path, issues);
  const std::string form = r.str("form", "");
  ConversionRate out;
  if (form == "affine") {
    out = ConversionRate::affine(r.num("slope", 0.0), r.num("intercept", 1.0));
  } else if (form == "scaled") {
    const double outer = r.num("outer", 1.0), inner = r.num("inner", 1.0);
    const json* b = r.raw("base");
    if (!b) issues.push_back(path + ".base: missing");
    out = ConversionRate::scaled(outer, inner, b ? parse_rate(*b, path + ".base", issues) : ConversionRate{});
  } else if (form == "step") {
    out = ConversionRate::step(r.num("low", 1.0), r.num("high", 1.0), r.num("threshold", 1.0));
  } else if (form == "table") {
    out = ConversionRate::table(r.nums("x", {}), r.nums("y", {}));
  } else if (form == "composed") {
    const double coeff = r.num("coeff", 1.0), cap = r.num("cap", 0.999);
    const json* b = r.raw("base");
    if (!b) issues.push_back(path + ".base: missing");
    out = ConversionRate::composed(coeff, b ? parse_rate(*b, path + ".base", issues) : ConversionRate{}, cap);
  } else {
    issues.push_back(path + ".form: expected affine, scaled, step, table or composed, got '" + form + "'");
  }
  r.finish();
  return out;
}

inline std::optional<Mode> parse_mode(const std::string& s) {
  for (Mode m : {Mode::ode_meso, Mode::ode_macro, Mode::ode_micro, Mode::pde_meso, Mode::pde_macro})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

inline std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Strict conversion of a JSON document; unknown keys and type errors raise ParseError.
inline ScenarioConfig config_from_json(const json& doc) {
  std::vector<std::string> issues;
  ScenarioConfig c;
  detail::ObjReader root(doc, "", issues);
  c.name = root.str("name", c.name);
  const std::string mode = root.str("mode", "");
  if (auto m = detail::parse_mode(mode)) {
    c.mode = *m;
  } else {
    issues.push_back("mode: expected ode_meso, ode_macro, ode_micro, pde_meso or pde_macro, got '" + mode + "'");
  }

  if (const json* mj = root.raw("model")) {
    detail::ObjReader mr(*mj, "model", issues);
    if (mr.has("micro")) {
      detail::ObjReader u(*mr.raw("micro"), "model.micro", issues);
      MicroParams mp;
      mp.r1 = u.num("r1", mp.r1), mp.r2 = u.num("r2", mp.r2);
      mp.A1 = u.num("A1", mp.A1), mp.A2 = u.num("A2", mp.A2);
      mp.p1 = u.num("p1", mp.p1), mp.p2 = u.num("p2", mp.p2), mp.pV = u.num("pV", mp.pV);
      mp.k1 = u.num("k1", mp.k1), mp.k2 = u.num("k2", mp.k2), mp.kV = u.num("kV", mp.kV);
      mp.D1 = u.num("D1", mp.D1), mp.D2 = u.num("D2", mp.D2), mp.DV = u.num("DV", mp.DV);
      mp.delta = u.num("delta", mp.delta);
      mp.epsilon = u.num("epsilon", mp.epsilon);
      mp.x_cap = u.num("x_cap", mp.x_cap);
      if (const json* r = u.raw("Phi")) mp.Phi = detail::parse_rate(*r, "model.micro.Phi", issues);
      if (const json* r = u.raw("Psi")) mp.Psi = detail::parse_rate(*r, "model.micro.Psi", issues);
      u.finish();
      c.micro = mp;
      c.model = map_micro_to_meso(mp);
      if (mr.has("params") || mr.has("phi") || mr.has("psi"))
        issues.push_back("model: give either micro or params/phi/psi, not both");
    } else {
      if (const json* pj = mr.raw("params")) {
        detail::ObjReader p(*pj, "model.params", issues);
        ModelParams& q = c.model.p;
        q.a = p.num("a", q.a), q.b = p.num("b", q.b);
        q.eta_a = p.num("eta_a", q.eta_a), q.eta_b = p.num("eta_b", q.eta_b), q.eta_v = p.num("eta_v", q.eta_v);
        q.d_a = p.num("d_a", q.d_a), q.d_b = p.num("d_b", q.d_b), q.d_v = p.num("d_v", q.d_v);
        q.epsilon = p.num("epsilon", q.epsilon);
        p.finish();
      } else {
        issues.push_back("model.params: missing");
      }
      if (const json* r = mr.raw("phi")) c.model.phi = detail::parse_rate(*r, "model.phi", issues);
      else issues.push_back("model.phi: missing");
      if (const json* r = mr.raw("psi")) c.model.psi = detail::parse_rate(*r, "model.psi", issues);
      else issues.push_back("model.psi: missing");
    }
    c.model.allow_h1_violation = mr.boolean("allow_h1_violation", false);
    mr.finish();
  } else {
    issues.push_back("model: missing");
  }

  if (const json* gj = root.raw("grid")) {
    detail::ObjReader g(*gj, "grid", issues);
    c.grid.length = g.num("length", c.grid.length);
    c.grid.n_cells = g.integer("n_cells", c.grid.n_cells);
    g.finish();
  }

  if (const json* ij = root.raw("init")) {
    detail::ObjReader ir(*ij, "init", issues);
    int kinds = 0;
    if (ir.has("literal")) {
      ++kinds;
      c.init.kind = InitSpec::Kind::literal;
      const json* lj = ir.raw("literal");
      detail::ObjReader lr(*lj, "init.literal", issues);
      for (const auto& name : mode_components(c.mode)) {
        const json* v = lr.raw(name);
        if (!v) {
          issues.push_back("init.literal." + name + ": missing");
          c.init.values.emplace_back();
        } else {
          c.init.values.push_back(lr.to_doubles(*v, "init.literal." + name));
        }
      }
      lr.finish();
    }
    if (ir.has("profile")) {
      ++kinds;
      c.init.kind = InitSpec::Kind::profile;
      c.init.profile = ir.str("profile", "");
    }
    if (ir.has("file")) {
      ++kinds;
      c.init.kind = InitSpec::Kind::file;
      c.init.path = ir.str("file", "");
    }
    if (kinds != 1) issues.push_back("init: give exactly one of literal, profile, file");
    ir.finish();
  } else {
    issues.push_back("init: missing");
  }

  c.t_end = root.num("t_end", c.t_end);

  if (const json* cj = root.raw("controls")) {
    detail::ObjReader r(*cj, "controls", issues);
    RunControls& k = c.controls;
    k.rtol = r.num("rtol", k.rtol);
    k.atol = r.num("atol", k.atol);
    k.cfl = r.num("cfl", k.cfl);
    k.tol_closure = r.num("tol_closure", k.tol_closure);
    k.dt_max = r.num("dt_max", k.dt_max);
    k.scheme = r.str("scheme", k.scheme);
    k.neumann_u = r.boolean("neumann_u", k.neumann_u);
    r.finish();
  }

  if (const json* oj = root.raw("outputs")) {
    detail::ObjReader r(*oj, "outputs", issues);
    OutputSettings& o = c.outputs;
    o.dir = r.str("dir", o.dir);
    o.snapshot_times = r.nums("snapshot_times", o.snapshot_times);
    o.n_snapshots = r.integer("n_snapshots", o.n_snapshots);
    o.formats = r.strs("formats", o.formats);
    r.finish();
  }

  if (const json* sj = root.raw("stability")) {
    detail::ObjReader r(*sj, "stability", issues);
    StabilitySettings& s = c.stability;
    s.n_max = r.integer("n_max", s.n_max);
    s.eps_list = r.nums("eps_list", s.eps_list);
    s.meso_n_max = r.integer("meso_n_max", s.meso_n_max);
    s.lambda_max = r.num("lambda_max", s.lambda_max);
    s.grid_n = r.integer("grid_n", s.grid_n);
    r.finish();
  }

  c.seed = root.u64("seed", c.seed);
  root.finish();

  if (!issues.empty()) {
    std::string msg = "config has " + std::to_string(issues.size()) + " problem(s):";
    for (const auto& i : issues) msg += "\n  " + i;
    throw ParseError(msg);
  }
  return c;
}

/// Semantic checks; every violation is listed in one ValidationError.
inline void validate_config(const ScenarioConfig& c) {
  std::vector<std::string> issues;
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) issues.push_back(what);
  };
  if (c.micro) {
    try {
      c.micro->validate();
    } catch (const ValidationError& e) {
      issues.emplace_back(e.what());
    }
  } else {
    c.model.collect_issues(issues);
  }
  if (c.mode == Mode::ode_micro) need(c.micro.has_value(), "mode ode_micro needs model.micro");
  need(c.t_end > 0.0 && std::isfinite(c.t_end), "t_end must be > 0");
  need(c.controls.rtol > 0.0, "controls.rtol must be > 0");
  need(c.controls.atol > 0.0, "controls.atol must be > 0");
  need(c.controls.cfl > 0.0 && c.controls.cfl <= 1.0, "controls.cfl must lie in (0, 1]");
  need(c.controls.tol_closure > 0.0, "controls.tol_closure must be > 0");
  need(c.controls.dt_max > 0.0, "controls.dt_max must be > 0");
  need(c.controls.scheme == "rosenbrock" || c.controls.scheme == "strang",
       "controls.scheme must be rosenbrock or strang");
  if (is_pde(c.mode)) {
    need(c.grid.n_cells >= 8, "grid.n_cells must be >= 8");
    need(c.grid.length > 0.0, "grid.length must be > 0");
  }
  need(c.outputs.n_snapshots >= 1, "outputs.n_snapshots must be >= 1");
  for (std::size_t i = 0; i < c.outputs.snapshot_times.size(); ++i) {
    const double t = c.outputs.snapshot_times[i];
    need(t > 0.0 && t <= c.t_end, "outputs.snapshot_times must lie in (0, t_end]");
    if (i > 0) need(t > c.outputs.snapshot_times[i - 1], "outputs.snapshot_times must increase");
  }
  for (const auto& f : c.outputs.formats) need(f == "csv" || f == "json", "outputs.formats: unknown format " + f);
  need(c.stability.n_max >= 0, "stability.n_max must be >= 0");
  need(c.stability.meso_n_max >= 0, "stability.meso_n_max must be >= 0");
  need(c.stability.grid_n >= 100, "stability.grid_n must be >= 100");
  need(c.stability.lambda_max >= 0.0, "stability.lambda_max must be >= 0");
  for (double e : c.stability.eps_list) need(e > 0.0, "stability.eps_list entries must be > 0");

  const auto names = mode_components(c.mode);
  switch (c.init.kind) {
    case InitSpec::Kind::literal: {
      need(c.init.values.size() == names.size(), "init.literal needs one entry per component");
      for (std::size_t i = 0; i < c.init.values.size(); ++i) {
        const auto& v = c.init.values[i];
        const std::string nm = i < names.size() ? names[i] : "?";
        if (is_pde(c.mode))
          need(v.size() == 1 || v.size() == static_cast<std::size_t>(c.grid.n_cells),
               "init.literal." + nm + " must have 1 or n_cells entries");
        else
          need(v.size() == 1, "init.literal." + nm + " must be a single number in ODE modes");
        for (double x : v) need(x >= 0.0 && std::isfinite(x), "init.literal." + nm + " must be finite and >= 0");
      }
      break;
    }
    case InitSpec::Kind::profile:
      need(c.init.profile == "oscillatory", "init.profile: unknown profile '" + c.init.profile + "'");
      need(is_pde(c.mode) && c.mode != Mode::ode_micro, "init.profile is only available in PDE modes");
      break;
    case InitSpec::Kind::file:
      need(std::filesystem::exists(c.init.path), "init.file: no such file '" + c.init.path + "'");
      break;
  }

  if (!issues.empty()) {
    std::string msg = "invalid config:";
    for (const auto& i : issues) msg += "\n  " + i;
    throw ValidationError(msg);
  }
}

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + detail::line_context(text, e.byte) + ": malformed JSON");
  }
}

inline ScenarioConfig parse_config_text(const std::string& text, const std::string& source = "<config>") {
  const json doc = parse_json_text(text, source);
  try {
    return config_from_json(doc);
  } catch (const ParseError& e) {
    throw ParseError(source + ": " + e.what());
  }
}

/// Reads, parses, and validates a scenario file.
inline ScenarioConfig parse_config(const std::filesystem::path& path) {
  ScenarioConfig c = parse_config_text(read_text_file(path), path.string());
  validate_config(c);
  return c;
}

/// Sets a dotted key path (e.g. model.params.epsilon) in a config document. The path must exist.
inline void apply_override(json& doc, const std::string& path, const json& value) {
  json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(key))
      throw ValidationError("override: no config key '" + path + "'");
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (cur->is_object()) throw ValidationError("override: '" + path + "' names a section, not a value");
  *cur = value;
}

/// Parses "key=value"; the value is read as JSON when possible and as a bare string otherwise.
inline std::pair<std::string, json> parse_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("override must look like key=value: " + kv);
  const std::string key = kv.substr(0, eq), text = kv.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  return {key, value};
}

inline ScenarioConfig with_overrides(const ScenarioConfig& c, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return c;
  json doc = emit_config(c);
  for (const auto& kv : overrides) {
    const auto [key, value] = parse_override(kv);
    apply_override(doc, key, value);
  }
  ScenarioConfig out = config_from_json(doc);
  validate_config(out);
  return out;
}

// ---------------------------------------------------------------- initial data

namespace detail {
inline std::vector<std::vector<double>> read_init_csv(const std::string& path,
                                                      const std::vector<std::string>& names) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = nl + 1;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t s = 0;
    while (true) {
      const std::size_t c = line.find(',', s);
      cells.push_back(line.substr(s, c == std::string::npos ? std::string::npos : c - s));
      if (c == std::string::npos) break;
      s = c + 1;
    }
    rows.push_back(std::move(cells));
  }
  if (rows.size() < 2) throw ParseError(path + ": needs a header row and at least one data row");
  std::vector<std::vector<double>> out;
  for (const auto& nm : names) {
    const auto it = std::find(rows[0].begin(), rows[0].end(), nm);
    if (it == rows[0].end()) throw ParseError(path + ": missing column " + nm);
    const auto col = static_cast<std::size_t>(it - rows[0].begin());
    std::vector<double> v;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (col >= rows[r].size()) throw ParseError(path + ": line " + std::to_string(r + 1) + " is short");
      const std::string& cell = rows[r][col];
      double x = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ParseError(path + ": line " + std::to_string(r + 1) + ": bad number '" + cell + "'");
      v.push_back(x);
    }
    out.push_back(std::move(v));
  }
  return out;
}
}  // namespace detail

/// Oscillatory reference profiles for (u_a, u_b, v) at position x.
inline std::array<double, 3> oscillatory_profile(double x) {
  constexpr double pi = std::numbers::pi;
  return {std::cos(4 * pi * x) + 4.0, (x - 1.0) * std::sin(4 * pi * x * x) + 2.0,
          std::cos(4 * pi * x) + std::cos(2 * pi * x) + 2.5};
}

/// Initial data as one array per component (length 1 in ODE modes, n_cells in PDE modes).
inline std::vector<std::vector<double>> resolve_init(const ScenarioConfig& c) {
  const auto names = mode_components(c.mode);
  const std::size_t n = is_pde(c.mode) ? static_cast<std::size_t>(c.grid.n_cells) : 1;
  std::vector<std::vector<double>> out;
  switch (c.init.kind) {
    case InitSpec::Kind::literal:
      out = c.init.values;
      break;
    case InitSpec::Kind::profile: {
      std::vector<std::vector<double>> meso(3, std::vector<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const auto p = oscillatory_profile(c.grid.x(static_cast<int>(i)));
        for (int k = 0; k < 3; ++k) meso[k][i] = p[k];
      }
      if (c.mode == Mode::pde_meso) {
        out = meso;
      } else {
        std::vector<double> u(n);
        for (std::size_t i = 0; i < n; ++i) u[i] = meso[0][i] + meso[1][i];
        out = {u, meso[2]};
      }
      break;
    }
    case InitSpec::Kind::file:
      out = detail::read_init_csv(c.init.path, names);
      break;
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k].size() == 1 && n > 1) out[k].assign(n, out[k][0]);
    if (out[k].size() != n)
      throw ValidationError("initial data for " + names[k] + " has " + std::to_string(out[k].size()) +
                            " entries, expected " + std::to_string(n));
    for (double x : out[k])
      if (!(x >= 0.0)) throw ValidationError("initial data for " + names[k] + " must be >= 0");
  }
  return out;
}

}  // namespace fastswitch
