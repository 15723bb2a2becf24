#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "fastswitch/config.hpp"
#include "fastswitch/io.hpp"
#include "fastswitch/presets.hpp"
#include "fastswitch/runner.hpp"

using namespace fastswitch;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fastswitch_test_" + name);
  fs::remove_all(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FASTSWITCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

ScenarioConfig short_run(const std::string& preset, double t_end) {
  ScenarioConfig c = preset_config(preset);
  c.t_end = t_end;
  return c;
}
}  // namespace

TEST(Config, EveryPresetRoundTrips) {
  for (const auto& name : preset_names()) {
    const ScenarioConfig c = preset_config(name);
    EXPECT_NO_THROW(validate_config(c)) << name;
    const ScenarioConfig back = parse_config_text(emit_config(c).dump(2));
    EXPECT_TRUE(back == c) << name;
    EXPECT_EQ(emit_config(back), emit_config(c)) << name;
  }
}

TEST(Config, ShippedPresetFilesMatchBuiltIns) {
  for (const auto& name : preset_names()) {
    const fs::path p = fs::path(FASTSWITCH_PRESET_DIR) / (name + ".json");
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_TRUE(parse_config(p) == preset_config(name)) << name;
  }
}

TEST(Config, UnknownKeyRejected) {
  json doc = emit_config(preset_config("paper-coexistence"));
  doc["model"]["params"]["epsilom"] = 0.1;
  EXPECT_THROW(config_from_json(doc), ParseError);
  try {
    config_from_json(doc);
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("epsilom"), std::string::npos);
  }
}

TEST(Config, MalformedJsonReportsLine) {
  try {
    parse_config_text("{\n  \"name\": \"x\",\n  oops\n}", "broken.json");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, ValidationListsEveryViolation) {
  ScenarioConfig c = preset_config("paper-coexistence");
  c.model.p.a = -1.0;
  c.t_end = -2.0;
  try {
    validate_config(c);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("t_end"), std::string::npos) << msg;
    EXPECT_NE(msg.find("a"), std::string::npos) << msg;
  }
}

TEST(Config, OverridesApply) {
  const ScenarioConfig c = with_overrides(preset_config("paper-coexistence"),
                                          {"model.params.epsilon=0.05", "t_end=2", "controls.scheme=strang"});
  EXPECT_EQ(c.model.p.epsilon, 0.05);
  EXPECT_EQ(c.t_end, 2.0);
  EXPECT_EQ(c.controls.scheme, "strang");
  EXPECT_THROW(with_overrides(preset_config("paper-coexistence"), {"model.params.nope=1"}), ValidationError);
  EXPECT_THROW(with_overrides(preset_config("paper-coexistence"), {"model.params=1"}), ValidationError);
  EXPECT_THROW(parse_override("=3"), ValidationError);
}

TEST(Config, InitBroadcastAndProfile) {
  ScenarioConfig c = preset_config("paper-pde-coexistence");
  c.grid.n_cells = 8;
  const auto f = resolve_init(c);
  ASSERT_EQ(f.size(), 3u);
  ASSERT_EQ(f[0].size(), 8u);
  EXPECT_DOUBLE_EQ(f[0][0], oscillatory_profile(c.grid.x(0))[0]);
  c.init.kind = InitSpec::Kind::literal;
  c.init.values = {{1.0}, {2.0}, {3.0}};
  const auto g = resolve_init(c);
  for (double x : g[2]) EXPECT_EQ(x, 3.0);
}

TEST(Io, ShortestRoundTripNumbers) {
  for (double x : {0.1, 1.0 / 3.0, 6.02e23, -2.5e-300, 7.5}) EXPECT_EQ(std::stod(format_double(x)), x);
  EXPECT_EQ(format_double(7.5), "7.5");
}

TEST(Runner, RerunIsByteIdentical) {
  const ScenarioConfig c = short_run("paper-coexistence", 1.0);
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  const RunOutcome ra = run_scenario(c, a);
  run_scenario(c, b);
  ASSERT_FALSE(ra.files.empty());
  EXPECT_EQ(ra.files.back(), "manifest.json");
  for (const auto& f : ra.files) EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
}

TEST(Runner, ManifestDescribesRun) {
  const fs::path out = scratch("manifest");
  run_scenario(short_run("paper-coexistence", 0.5), out);
  const json man = json::parse(read_text_file(out / "manifest.json"));
  EXPECT_EQ(man["version"], version_string());
  EXPECT_EQ(man["mode"], "ode_meso");
  EXPECT_TRUE(parse_config_text(man["config"].dump()) == short_run("paper-coexistence", 0.5));
  for (const auto& f : man["files"]) EXPECT_TRUE(fs::exists(out / f.get<std::string>())) << f;
}

TEST(Runner, PdeRunWritesFieldsAndQSeries) {
  ScenarioConfig c = short_run("paper-pde-coexistence", 0.02);
  c.grid.n_cells = 16;
  c.model.p.epsilon = 1e-2;
  c.outputs.n_snapshots = 8;
  const fs::path out = scratch("pde");
  const RunOutcome r = run_scenario(c, out);
  EXPECT_TRUE(fs::exists(out / "trajectory.csv"));
  EXPECT_TRUE(fs::exists(out / "q_series.csv"));
  ASSERT_EQ(r.final_state.size(), 3u);  // spatial means
  for (double x : r.final_state) EXPECT_GT(x, 0.0);
}

TEST(Runner, SweepRecordsFailuresAndContinues) {
  const fs::path out = scratch("sweep");
  const SweepResult s = run_sweep(short_run("paper-coexistence", 0.5), "model.params.epsilon", {1e-1, -1.0, 1e-2}, out, 2);
  ASSERT_EQ(s.items.size(), 3u);
  EXPECT_TRUE(s.items[0].ok);
  EXPECT_FALSE(s.items[1].ok);
  EXPECT_EQ(s.items[1].kind, ErrorKind::validation);
  EXPECT_TRUE(s.items[2].ok);
  EXPECT_EQ(s.failures(), 1u);
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  EXPECT_TRUE(fs::exists(out / "run_002" / "manifest.json"));
  EXPECT_FALSE(fs::exists(out / "run_001" / "manifest.json"));
}

TEST(Runner, SweepNeedsValuesAndKnownPath) {
  const ScenarioConfig c = short_run("paper-coexistence", 0.5);
  EXPECT_THROW(run_sweep(c, "model.params.epsilon", {}, scratch("sweep_empty")), ValidationError);
  EXPECT_THROW(run_sweep(c, "model.params.zeta", {1.0}, scratch("sweep_bad")), ValidationError);
}

TEST(Runner, StabilitySweepTabulatesVerdicts) {
  const fs::path out = scratch("stab_sweep");
  const SweepResult s = run_sweep(preset_config("paper-coexistence"), "model.params.b", {6.0, 8.0}, out, 1, true);
  ASSERT_EQ(s.failures(), 0u);
  const std::string csv = read_text_file(out / "summary.csv");
  EXPECT_NE(csv.find("coexistence_verdict"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli");
  EXPECT_EQ(run_cli("validate --preset paper-coexistence"), 0);
  EXPECT_EQ(run_cli("validate --preset no-such-preset"), 2);
  EXPECT_EQ(run_cli("validate --preset paper-coexistence --override model.params.a=-1"), 2);
  EXPECT_EQ(run_cli("validate --preset paper-coexistence --override model.params.bogus=1"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("run --preset paper-coexistence --override t_end=0.5 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
  EXPECT_EQ(run_cli("validate --config " + (out / "missing.json").string()), 4);
  EXPECT_EQ(run_cli("stability --preset paper-nonunique --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "stability.json"));
}
