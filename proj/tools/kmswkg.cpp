#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kmswkg/commands.hpp"

namespace {

void add_common(CLI::App* app, kmswkg::CommandOptions& o, int& threads, std::uint64_t& seed) {
  app->add_option("--config", o.config_path, "Experiment config (JSON)");
  app->add_option("--preset", o.preset, "Preset name");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--threads", threads, "Worker threads (falls back to KMSWKG_THREADS)")->check(CLI::PositiveNumber);
  app->add_option("--seed", seed, "Seed for randomized sampling");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wave / Klein-Gordon cubic systems: condition checks, profile ODEs, simulation"};
  app.require_subcommand(1);

  kmswkg::CommandOptions o;
  int threads = 0;
  std::uint64_t seed = 0;
  std::string target;

  auto* check = app.add_subcommand("check", "Null condition and KMS condition check");
  check->add_option("target", target, "Preset name (same as --preset)");
  add_common(check, o, threads, seed);

  auto* simulate = app.add_subcommand("simulate", "Run the finite-difference simulation");
  simulate->add_option("target", target, "Preset name (same as --preset)");
  add_common(simulate, o, threads, seed);

  auto* profile = app.add_subcommand("profile", "Integrate the profile ODE along rays");
  profile->add_option("target", target, "Preset name (same as --preset)");
  add_common(profile, o, threads, seed);

  std::string run_dir;
  auto* analyze = app.add_subcommand("analyze", "Fit decay laws and check a run directory");
  analyze->add_option("run_dir", run_dir, "Directory written by simulate")->required();
  analyze->add_option("--out", o.out, "Report path (default RUN_DIR/report.json)");

  auto* preset = app.add_subcommand("preset", "Preset catalog");
  preset->require_subcommand(1);
  auto* list = preset->add_subcommand("list", "List presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kmswkg::exit_config;
  }

  if (!target.empty()) {
    if (!o.preset.empty() && o.preset != target) {
      std::cerr << "config error: preset given twice ('" << target << "' and '" << o.preset << "')\n";
      return kmswkg::exit_config;
    }
    o.preset = target;
  }
  for (auto* sub : {check, simulate, profile}) {
    if (sub->count("--threads")) o.threads = threads;
    if (sub->count("--seed")) o.seed = seed;
  }

  if (check->parsed()) return kmswkg::cmd_check(o, std::cout, std::cerr);
  if (simulate->parsed()) return kmswkg::cmd_simulate(o, std::cout, std::cerr);
  if (profile->parsed()) return kmswkg::cmd_profile(o, std::cout, std::cerr);
  if (analyze->parsed()) return kmswkg::cmd_analyze(run_dir, o, std::cout, std::cerr);
  if (list->parsed()) return kmswkg::cmd_preset_list(std::cout);
  return kmswkg::exit_runtime;
}
