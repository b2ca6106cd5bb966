#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kmswkg/analysis.hpp"
#include "kmswkg/commands.hpp"
#include "kmswkg/config.hpp"
#include "kmswkg/ndjson.hpp"
#include "oracles.hpp"

using namespace kmswkg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.in.json";
  std::ofstream(p) << j.dump(2);
  return p.string();
}

json small_run_config(const fs::path& out) {
  return json{
      {"spec", {{"preset", "example-kms"}}},
      {"grid", {{"mode", "radial"}, {"h", 0.1}, {"cfl", 0.4}, {"t_max", 40}}},
      {"data",
       {{"epsilon", 0.3},
        {"support_radius", 2},
        {"f", {{{"shape", "poly"}, {"radius", 2}}, {{"shape", "poly"}, {"amplitude", 2}, {"radius", 2}}}},
        {"g", {{{"shape", "zero"}}, {{"shape", "zero"}}}}}},
      {"recorders",
       {{{"kind", "norms"}, {"every", 1}},
        {{"kind", "ray"}, {"every", 1}, {"start", 4}, {"sigma", {-1, 0, 1}}, {"theta", {0}}},
        {{"kind", "scattering"}, {"every", 2}, {"start", 5}, {"t_match", 5}}}},
      {"analysis", {{"ray_t1", {5}}, {"fit_t_a", 4}, {"fit_t_b", 40}}},
      {"seed", 3},
      {"output", out.string()}};
}

int run_simulate(const fs::path& dir, const json& cfg, std::string* stdout_text = nullptr) {
  CommandOptions o;
  o.config_path = write_config(dir, cfg);
  std::ostringstream out, err;
  const int code = cmd_simulate(o, out, err);
  if (stdout_text) *stdout_text = out.str();
  INFO(err.str());
  return code;
}

struct EnvGuard {
  explicit EnvGuard(const char* value) {
    if (value)
      setenv("KMSWKG_THREADS", value, 1);
    else
      unsetenv("KMSWKG_THREADS");
  }
  ~EnvGuard() { unsetenv("KMSWKG_THREADS"); }
};

}  // namespace

TEST_CASE("minimal config fills defaults") {
  const auto c = parse_config(R"({"spec": {"preset": "example-kms"}})");
  CHECK(c.spec.preset == "example-kms");
  CHECK(c.grid.mode == GridMode::radial);
  CHECK(c.weights.rho == 0.1);
  CHECK(c.weights.kappa == 0.01);
  CHECK(c.threads == 1);
  CHECK(c.spec.resolve().n_total() == 2);
  CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("config errors name the key and constraint") {
  auto expect = [](const std::string& text, const std::string& key, const std::string& fragment) {
    try {
      parse_config(text);
      FAIL("accepted: " << text);
    } catch (const ConfigError& e) {
      CHECK(e.key() == key);
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  expect(R"({"spec": {"preset": "example-kms"}, "weights": {"rho": 0.1, "kappa": 0.02}})", "weights.kappa", "8κ < ρ");
  expect(R"({"spec": {"preset": "example-kms"}, "gird": {}})", "gird", "unknown");
  expect(R"({"spec": {"preset": "nope"}})", "spec.preset", "nope");
  expect(R"({"spec": {"preset": "example-kms"}, "data": {"support_radius": 2},
             "recorders": [{"kind": "ray", "every": 1, "sigma": [1, 3]}]})",
         "recorders[0].sigma", "R");
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
}

TEST_CASE("config round trip") {
  const auto text = small_run_config("/tmp/x").dump();
  const auto a = parse_config(text);
  const auto b = parse_config(serialize_config(a));
  CHECK(a == b);
  CHECK(serialize_config(a) == serialize_config(b));

  json inline_spec = json::parse(text);
  inline_spec["spec"] = spec_to_json(make_preset("null-cubic"));
  inline_spec["data"] = json{{"support_radius", 1}, {"f", {{{"shape", "poly"}}}}, {"g", {{{"shape", "zero"}}}}};
  inline_spec["recorders"] = json::array();
  const auto c = parse_config(inline_spec.dump());
  CHECK(c.spec.inline_spec.has_value());
  CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("check command exit codes") {
  auto check = [](const std::string& preset, std::string* text = nullptr) {
    CommandOptions o;
    o.preset = preset;
    std::ostringstream out, err;
    const int code = cmd_check(o, out, err);
    if (text) *text = out.str();
    return code;
  };
  std::string text;
  CHECK(check("example-null", &text) == exit_ok);
  CHECK(json::parse(text)["null"]["verdict"] == "holds");
  CHECK(check("example-kms", &text) == exit_ok);
  const auto r = json::parse(text);
  CHECK(r["null"]["verdict"] == "fails");
  CHECK(r["kms"]["verdict"] == "holds");
  CHECK(check("kms-violating", &text) == exit_absent);
  CHECK(json::parse(text)["kms"]["verdict"] == "absent");
  CHECK(check("no-such-preset") == exit_config);

  const auto dir = oracle::scratch("check_j");
  CommandOptions o;
  o.config_path = write_config(dir, json{{"spec", {{"preset", "kms-violating"}}}, {"kms", {{"J", {{1.0}}}}}});
  std::ostringstream out, err;
  CHECK(cmd_check(o, out, err) == exit_fails);
  o.config_path = write_config(dir, json{{"spec", {{"preset", "example-kms"}}}, {"kms", {{"J", {{1.0}}}}}});
  CHECK(cmd_check(o, out, err) == exit_ok);
}

TEST_CASE("simulate with t_max = 0 writes the initial snapshot and status") {
  const auto dir = oracle::scratch("sim0");
  json cfg = small_run_config(dir / "run");
  cfg["grid"]["t_max"] = 0;
  cfg["recorders"] = json::array();
  std::string text;
  REQUIRE(run_simulate(dir, cfg, &text) == exit_ok);
  CHECK(json::parse(text)["status"] == "completed");
  CHECK(fs::exists(dir / "run" / "config.json"));
  CHECK(fs::exists(dir / "run" / "snapshots" / "snapshot_0.json"));
  CHECK(fs::exists(dir / "run" / "snapshots" / "snapshot_0.csv"));
  CHECK(!fs::exists(dir / "run" / "snapshots" / "snapshot_1.json"));
  const auto meta = json::parse(oracle::slurp(dir / "run" / "snapshots" / "snapshot_0.json"));
  CHECK(meta["t"] == 0.0);
  const auto status = json::parse(oracle::slurp(dir / "run" / "status.ndjson"));
  CHECK(status["status"] == "completed");
  CHECK(status["t_final"] == 0.0);
  CHECK(status["schema"] == schema_version);
}

TEST_CASE("profile on the example system passes the oracle") {
  const auto dir = oracle::scratch("profile");
  CommandOptions o;
  o.preset = "example-kms";
  o.out = (dir / "p").string();
  std::ostringstream out, err;
  REQUIRE(cmd_profile(o, out, err) == exit_ok);
  CHECK(json::parse(out.str())["verdict"] == "PASS");
  const auto summary = json::parse(oracle::slurp(dir / "p" / "summary.json"));
  CHECK(summary["verdict"] == "PASS");
  CHECK(summary["rays"][0]["max_relative_error"].get<double>() <= 1e-6);
  CHECK(fs::exists(dir / "p" / "trajectories.ndjson"));

  o.preset = "kms-violating";
  o.out = (dir / "v").string();
  std::ostringstream out2;
  CHECK(cmd_profile(o, out2, err) == exit_ok);  // blow-up before the pole is the expected outcome
  const auto s2 = json::parse(oracle::slurp(dir / "v" / "summary.json"));
  CHECK(s2["rays"][0]["blew_up"] == true);
}

TEST_CASE("simulate is deterministic and analyze reads the run") {
  const auto dir = oracle::scratch("determinism");
  REQUIRE(run_simulate(dir, small_run_config(dir / "a")) == exit_ok);
  REQUIRE(run_simulate(dir, small_run_config(dir / "b")) == exit_ok);
  json threaded = small_run_config(dir / "c");
  threaded["threads"] = 2;
  REQUIRE(run_simulate(dir, threaded) == exit_ok);
  for (const char* f : {"norms.ndjson", "rays.ndjson", "scattering.ndjson", "status.ndjson"}) {
    INFO(f);
    const auto a = oracle::slurp(dir / "a" / f);
    CHECK(!a.empty());
    CHECK(a == oracle::slurp(dir / "b" / f));
    CHECK(a == oracle::slurp(dir / "c" / f));
  }

  CommandOptions o;
  std::ostringstream out, err;
  const int code = cmd_analyze((dir / "a").string(), o, out, err);
  CHECK((code == exit_ok || code == exit_fails));
  const auto report = json::parse(oracle::slurp(dir / "a" / "report.json"));
  for (const char* key : {"status", "ray_consistency", "decay_fits", "scattering", "derivative_order", "pass"})
    CHECK(report.contains(key));
  CHECK(!report["ray_consistency"]["rows"].empty());

  // analyze refuses records written under another schema version
  fs::copy(dir / "a", dir / "bad", fs::copy_options::recursive);
  {
    std::string text = oracle::slurp(dir / "bad" / "norms.ndjson");
    const std::string from = "\"schema\":" + std::to_string(schema_version);
    text.replace(text.find(from), from.size(), "\"schema\":99");
    std::ofstream(dir / "bad" / "norms.ndjson", std::ios::binary) << text;
  }
  std::ostringstream out2, err2;
  CHECK(cmd_analyze((dir / "bad").string(), o, out2, err2) == exit_runtime);
  CHECK(err2.str().find("schema") != std::string::npos);
}

TEST_CASE("thread count precedence") {
  CommandOptions o;
  o.preset = "example-kms";
  {
    EnvGuard env(nullptr);
    CHECK(resolve_config(o).threads == 1);
  }
  {
    EnvGuard env("3");
    CHECK(resolve_config(o).threads == 3);
    o.threads = 2;
    CHECK(resolve_config(o).threads == 2);
    o.threads.reset();
  }
  {
    EnvGuard env("zero");
    CHECK_THROWS_AS(resolve_config(o), ConfigError);
  }
  CHECK_THROWS_AS(resolve_config(CommandOptions{}), ConfigError);
}

TEST_CASE("preset list") {
  std::ostringstream out;
  CHECK(cmd_preset_list(out) == exit_ok);
  for (const char* name : {"example-kms", "example-null", "kms-violating", "null-cubic"})
    CHECK(out.str().find(name) != std::string::npos);
}

#ifdef KMSWKG_CLI
TEST_CASE("command-line exit codes") {
  const std::string cli = KMSWKG_CLI;
  auto run = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("check example-null") == 0);
  CHECK(run("check --preset example-kms") == 0);
  CHECK(run("check kms-violating") == 3);
  CHECK(run("check --preset example-kms --threads 0") == 4);
  CHECK(run("frobnicate") == 4);
  CHECK(run("preset list") == 0);
  CHECK(run("analyze /nonexistent/run") == 1);
}
#endif
