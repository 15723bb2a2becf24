#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fastswitch/config.hpp"
#include "fastswitch/diagnostics.hpp"
#include "fastswitch/equilibria.hpp"
#include "fastswitch/io.hpp"
#include "fastswitch/ode_sim.hpp"
#include "fastswitch/pde_sim.hpp"
#include "fastswitch/stability.hpp"

#ifndef FASTSWITCH_VERSION_STRING
#define FASTSWITCH_VERSION_STRING "0.1.0+unknown"
#endif

namespace fastswitch {

inline const char* version_string() { return FASTSWITCH_VERSION_STRING; }

/// Process exit status for each error category.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::validation: return 2;
    case ErrorKind::numerics: return 3;
    case ErrorKind::io: return 4;
  }
  return 3;
}

struct RunOutcome {
  std::vector<std::string> files;  // relative to the output directory, manifest last
  std::vector<double> final_state;
  std::vector<std::string> columns;
  double q_accumulated = 0.0;  // meso modes only
  json summary;
};

namespace detail {

inline OdeControls ode_controls(const ScenarioConfig& c) {
  OdeControls k;
  k.step.rtol = c.controls.rtol;
  k.step.atol = c.controls.atol;
  k.tol_closure = c.controls.tol_closure;
  k.scheme = c.controls.scheme == "strang" ? MesoScheme::strang : MesoScheme::rosenbrock;
  return k;
}

inline PdeControls pde_controls(const ScenarioConfig& c) {
  PdeControls k;
  k.cfl = c.controls.cfl;
  k.dt_max = c.controls.dt_max;
  k.n_snapshots = c.outputs.n_snapshots;
  k.snapshot_times = c.outputs.snapshot_times;
  k.tol_closure = c.controls.tol_closure;
  k.neumann_u = c.controls.neumann_u;
  return k;
}

inline bool wants(const ScenarioConfig& c, const std::string& fmt) {
  return std::find(c.outputs.formats.begin(), c.outputs.formats.end(), fmt) != c.outputs.formats.end();
}

class Emitter {
 public:
  explicit Emitter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, const std::string& text) {
    write_text_file(dir_ / name, text);
    files_.push_back(name);
  }
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

inline std::string macro_lv_csv(const Model& m, const OdeTrajectory& tr, double tol) {
  CsvWriter w({"t", "lv_residual", "lv_scale"});
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double u = tr.states[k][0], v = tr.states[k][1];
    if (u > 0.0) {
      const LvResidual r = lv_residual_detail(m, u, v, tol);
      w.row({tr.times[k], r.residual, r.scale});
    } else {
      w.row({tr.times[k], 0.0, 0.0});
    }
  }
  return w.str();
}

inline std::string micro_manifold_csv(const MicroParams& mp, const OdeTrajectory& tr) {
  CsvWriter w({"t", "s1_gap", "s2_gap"});
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto& y = tr.states[k];
    const auto s = micro_slow_manifold(mp, y[2], y[3], y[4]);
    w.row({tr.times[k], y[0] - s[0], y[1] - s[1]});
  }
  return w.str();
}

}  // namespace detail

/// Integrates one scenario and writes trajectory, diagnostics, and manifest into `out_dir`.
inline RunOutcome run_scenario(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
  validate_config(c);
  const auto init = resolve_init(c);
  detail::Emitter em(out_dir);
  const bool csv = detail::wants(c, "csv");
  RunOutcome out;
  json man;
  man["version"] = version_string();
  man["config"] = emit_config(c);
  man["mode"] = to_string(c.mode);

  if (!is_pde(c.mode)) {
    const OdeControls ctl = detail::ode_controls(c);
    OdeTrajectory tr;
    std::string diag;
    switch (c.mode) {
      case Mode::ode_meso: {
        tr = integrate_meso_ode(c.model, {init[0][0], init[1][0], init[2][0]}, c.t_end, ctl);
        const QNormSeries q = q_norm_series(tr, c.model);
        out.q_accumulated = q.total();
        diag = q_series_csv(q);
        break;
      }
      case Mode::ode_macro:
        tr = integrate_macro_ode(c.model, {init[0][0], init[1][0]}, c.t_end, ctl);
        diag = detail::macro_lv_csv(c.model, tr, c.controls.tol_closure);
        break;
      default: {
        MicroVec y0;
        for (std::size_t i = 0; i < 5; ++i) y0[i] = init[i][0];
        tr = integrate_micro_ode(*c.micro, y0, c.t_end, ctl);
        diag = detail::micro_manifold_csv(*c.micro, tr);
        break;
      }
    }
    if (csv) {
      em.write("trajectory.csv", ode_csv(tr));
      em.write("diagnostics.csv", diag);
    }
    out.columns = tr.columns;
    out.final_state = tr.states.back();
    man["scheme"] = tr.scheme;
    man["stats"] = to_json(tr.stats);
    man["n_records"] = tr.size();
  } else {
    const PdeControls ctl = detail::pde_controls(c);
    PdeTrajectory tr;
    if (c.mode == Mode::pde_meso) {
      tr = integrate_meso_pde(c.model, c.grid, MesoField{init[0], init[1], init[2]}, c.t_end, ctl);
    } else {
      tr = integrate_macro_pde(c.model, c.grid, MacroField{init[0], init[1]}, c.t_end, ctl);
    }
    const QNormSeries q = q_norm_series(tr, c.model, c.controls.tol_closure);
    if (tr.is_meso()) out.q_accumulated = q.total();
    if (csv) {
      em.write("trajectory.csv", pde_csv(tr));
      em.write("q_series.csv", q_series_csv(q));
      if (tr.is_meso() && tr.size() >= 50) em.write("diagnostics.csv", budget_csv(energy_budget(tr, c.model)));
    }
    out.columns = tr.columns;
    for (const auto& f : tr.fields.back()) {
      double mean = 0.0;
      for (double x : f) mean += x;
      out.final_state.push_back(mean / static_cast<double>(f.size()));
    }
    man["scheme"] = tr.scheme;
    man["stats"] = to_json(tr.stats);
    man["grid"] = {{"length", tr.grid.length}, {"n_cells", tr.grid.n_cells}, {"dx", tr.grid.dx()}};
    json times = json::array();
    for (double t : tr.times) times.push_back(num(t));
    man["times"] = times;
  }

  json fin = json::object();
  for (std::size_t i = 0; i < out.columns.size(); ++i) fin[out.columns[i]] = num(out.final_state[i]);
  out.summary = {{"final", fin}, {"q_accumulated", num(out.q_accumulated)}};
  man["summary"] = out.summary;
  man["files"] = em.files();
  if (detail::wants(c, "json")) em.write("manifest.json", man.dump(2) + "\n");
  out.files = em.files();
  return out;
}

struct SweepItem {
  double value = 0.0;
  bool ok = false;
  std::string error;
  ErrorKind kind = ErrorKind::numerics;
  RunOutcome outcome;
  json stability;  // stability sweeps only
};

struct SweepResult {
  std::string path;
  std::vector<SweepItem> items;  // in value order
  std::vector<std::string> files;
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& i : items) n += i.ok ? 0 : 1;
    return n;
  }
};

namespace detail {

inline StabilityOptions stability_options(const ScenarioConfig& c) {
  StabilityOptions o;
  o.length = c.grid.length;
  o.n_max = c.stability.n_max;
  o.eps_list = c.stability.eps_list;
  o.meso_n_max = c.stability.meso_n_max;
  o.lambda_max = c.stability.lambda_max;
  o.grid_n = c.stability.grid_n;
  return o;
}

template <class F>
void parallel_for(std::size_t n, int jobs, F&& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  for (auto& t : pool) t.join();
}

/// Sign of det N_n per mode at the coexistence state, or empty when it does not exist.
inline json det_sign_table(const StabilityReport& rep) {
  for (const auto& e : rep.entries) {
    if (e.equilibrium.kind != EquilibriumKind::coexistence) continue;
    json row = json::array();
    for (const auto& m : e.modes) {
      const double d = m.N.determinant();
      row.push_back(d > 0.0 ? 1 : (d < 0.0 ? -1 : 0));
    }
    return {{"verdict", to_string(e.overall)}, {"det_sign", row}};
  }
  return json();
}

}  // namespace detail

/// One scenario per value of the scalar at `path`; failures are recorded, not propagated.
inline SweepResult run_sweep(const ScenarioConfig& base, const std::string& path, const std::vector<double>& values,
                             const std::filesystem::path& out_dir, int jobs = 1, bool stability_mode = false) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  validate_config(base);
  {
    json probe = emit_config(base);
    apply_override(probe, path, values.front());
  }
  SweepResult res;
  res.path = path;
  res.items.resize(values.size());
  detail::parallel_for(values.size(), jobs, [&](std::size_t i) {
    SweepItem& it = res.items[i];
    it.value = values[i];
    try {
      json doc = emit_config(base);
      apply_override(doc, path, values[i]);
      ScenarioConfig c = config_from_json(doc);
      validate_config(c);
      if (stability_mode) {
        it.stability = detail::det_sign_table(stability_report(c.model, detail::stability_options(c)));
      } else {
        char dir[32];
        std::snprintf(dir, sizeof dir, "run_%03zu", i);
        it.outcome = run_scenario(c, out_dir / dir);
      }
      it.ok = true;
    } catch (const Error& e) {
      it.error = e.what();
      it.kind = e.kind();
    } catch (const std::exception& e) {
      it.error = e.what();
    }
  });

  std::ostringstream csv;
  std::vector<std::string> cols;
  for (const auto& it : res.items)
    if (it.ok && !it.outcome.columns.empty()) {
      cols = it.outcome.columns;
      break;
    }
  csv << "index,value,status";
  if (stability_mode) {
    csv << ",coexistence_verdict,det_sign";
  } else {
    for (const auto& c : cols) csv << ',' << c;
    csv << ",q_accumulated";
  }
  csv << ",error\n";
  json runs = json::array();
  for (std::size_t i = 0; i < res.items.size(); ++i) {
    const auto& it = res.items[i];
    csv << i << ',' << format_double(it.value) << ',' << (it.ok ? "ok" : "failed");
    if (stability_mode) {
      std::string verdict, signs;
      if (it.ok && !it.stability.is_null()) {
        verdict = it.stability["verdict"].get<std::string>();
        for (const auto& s : it.stability["det_sign"]) signs += s.get<int>() > 0 ? '+' : (s.get<int>() < 0 ? '-' : '0');
      }
      csv << ',' << verdict << ',' << signs;
    } else {
      for (std::size_t k = 0; k < cols.size(); ++k)
        csv << ',' << (it.ok && k < it.outcome.final_state.size() ? format_double(it.outcome.final_state[k]) : "");
      csv << ',' << (it.ok ? format_double(it.outcome.q_accumulated) : "");
    }
    std::string err = it.error;
    std::replace(err.begin(), err.end(), '\n', ' ');
    std::replace(err.begin(), err.end(), ',', ';');
    csv << ',' << err << '\n';
    json r = {{"value", num(it.value)}, {"status", it.ok ? "ok" : "failed"}};
    if (!it.ok) r["error"] = it.error;
    if (it.ok && !stability_mode) {
      char dir[32];
      std::snprintf(dir, sizeof dir, "run_%03zu", i);
      r["manifest"] = std::string(dir) + "/manifest.json";
    }
    if (stability_mode) r["stability"] = it.stability;
    runs.push_back(r);
  }
  detail::Emitter em(out_dir);
  em.write("summary.csv", csv.str());
  json man = {{"version", version_string()},
              {"config", emit_config(base)},
              {"sweep", {{"path", path}, {"values", values}, {"stability", stability_mode}}},
              {"runs", runs}};
  man["files"] = em.files();
  em.write("sweep_manifest.json", man.dump(2) + "\n");
  res.files = em.files();
  return res;
}

/// Writes the stability report for the scenario model as JSON.
inline StabilityReport report_stability(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
  validate_config(c);
  const StabilityReport rep = stability_report(c.model, detail::stability_options(c));
  json doc = {{"version", version_string()},
              {"config", emit_config(c)},
              {"uniqueness", to_json(check_uniqueness_conditions(c.model))},
              {"report", to_json(rep)}};
  doc["files"] = {"stability.json"};
  write_text_file(out_dir / "stability.json", doc.dump(2) + "\n");
  return rep;
}

inline EquilibriumSet report_equilibria(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
  validate_config(c);
  const EquilibriumSet set = enumerate_equilibria(c.model, c.stability.lambda_max, c.stability.grid_n);
  json doc = {{"version", version_string()}, {"config", emit_config(c)}, {"result", to_json(set)}};
  doc["files"] = {"equilibria.json"};
  write_text_file(out_dir / "equilibria.json", doc.dump(2) + "\n");
  return set;
}

}  // namespace fastswitch
