// Command-line front end: run, sweep, stability, equilibria, validate.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fastswitch/fastswitch.hpp"

namespace fs = std::filesystem;
using namespace fastswitch;

namespace {

struct CommonArgs {
  std::string config;
  std::string preset;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_out = true) {
  auto* cfg = cmd->add_option("--config", a.config, "Scenario file (JSON)");
  auto* pre = cmd->add_option("--preset", a.preset, "Built-in scenario name");
  cfg->excludes(pre);
  if (with_out) cmd->add_option("--out", a.out, "Output directory");
  cmd->add_option("--override", a.overrides, "key.path=value, repeatable");
}

ScenarioConfig load(const CommonArgs& a) {
  if (a.config.empty() == a.preset.empty()) throw ValidationError("give exactly one of --config or --preset");
  ScenarioConfig c = a.config.empty() ? preset_config(a.preset) : parse_config(a.config);
  c = with_overrides(c, a.overrides);
  validate_config(c);
  return c;
}

fs::path out_dir(const CommonArgs& a, const ScenarioConfig& c) {
  if (!a.out.empty()) return a.out;
  if (const char* env = std::getenv("FASTSWITCH_OUT_DIR"); env && *env) return fs::path(env) / c.outputs.dir;
  return c.outputs.dir;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    double x = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), x);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size())
      throw ValidationError("bad sweep value '" + item + "'");
    out.push_back(x);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast-switching competition model toolkit"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  CommonArgs run_a, sweep_a, stab_a, eq_a, val_a;
  auto* run = app.add_subcommand("run", "Integrate a scenario and write trajectory files");
  add_common(run, run_a);

  auto* sweep = app.add_subcommand("sweep", "Run a scenario once per value of one parameter");
  add_common(sweep, sweep_a);
  std::string sweep_param, sweep_values;
  int jobs = 1;
  bool sweep_stability = false;
  sweep->add_option("--param", sweep_param, "Dotted key path, e.g. model.params.epsilon")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep->add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber);
  sweep->add_flag("--stability", sweep_stability, "Tabulate det N_n signs instead of integrating");

  auto* stab = app.add_subcommand("stability", "Write the linear stability report");
  add_common(stab, stab_a);
  auto* eq = app.add_subcommand("equilibria", "Enumerate homogeneous steady states");
  add_common(eq, eq_a);

  auto* val = app.add_subcommand("validate", "Check a scenario and print its resolved form");
  add_common(val, val_a, false);
  bool quiet = false;
  val->add_flag("--quiet", quiet, "Do not print the resolved config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const ScenarioConfig c = load(run_a);
      const fs::path dir = out_dir(run_a, c);
      const RunOutcome o = run_scenario(c, dir);
      std::cout << c.name << " (" << to_string(c.mode) << ") -> " << dir.string() << "\n";
      for (std::size_t i = 0; i < o.columns.size(); ++i)
        std::cout << "  final " << o.columns[i] << " = " << format_double(o.final_state[i]) << "\n";
      return 0;
    }
    if (*sweep) {
      const ScenarioConfig c = load(sweep_a);
      const fs::path dir = out_dir(sweep_a, c);
      const SweepResult r = run_sweep(c, sweep_param, parse_values(sweep_values), dir, jobs, sweep_stability);
      std::cout << "sweep over " << sweep_param << ": " << r.items.size() - r.failures() << " ok, " << r.failures()
                << " failed -> " << dir.string() << "\n";
      for (const auto& it : r.items)
        if (!it.ok) std::cerr << "  value " << format_double(it.value) << " failed: " << it.error << "\n";
      for (const auto& it : r.items)
        if (!it.ok) return exit_code(it.kind);
      return 0;
    }
    if (*stab) {
      const ScenarioConfig c = load(stab_a);
      const fs::path dir = out_dir(stab_a, c);
      const StabilityReport rep = report_stability(c, dir);
      std::cout << "alpha = " << format_double(rep.alpha) << "\n";
      for (const auto& e : rep.entries)
        std::cout << "  " << to_string(e.equilibrium.kind) << " (" << format_double(e.equilibrium.u_bar) << ", "
                  << format_double(e.equilibrium.v_bar) << "): " << to_string(e.overall)
                  << (e.F_prime_value ? ", F' = " + format_double(*e.F_prime_value) : std::string()) << "\n";
      std::cout << "-> " << (dir / "stability.json").string() << "\n";
      return 0;
    }
    if (*eq) {
      const ScenarioConfig c = load(eq_a);
      const fs::path dir = out_dir(eq_a, c);
      const EquilibriumSet set = report_equilibria(c, dir);
      std::cout << "alpha = " << format_double(set.alpha) << "\n";
      for (const auto& e : set.items)
        std::cout << "  " << to_string(e.kind) << " u = " << format_double(e.u_bar) << " v = " << format_double(e.v_bar)
                  << (e.on_discontinuity ? " [jump]" : "") << "\n";
      std::cout << "-> " << (dir / "equilibria.json").string() << "\n";
      return 0;
    }
    if (*val) {
      const ScenarioConfig c = load(val_a);
      if (!quiet) std::cout << emit_config(c).dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
