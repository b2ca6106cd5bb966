#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "kmswkg/condition_checker.hpp"
#include "kmswkg/config.hpp"

namespace kmswkg {

enum ExitCode : int { exit_ok = 0, exit_runtime = 1, exit_fails = 2, exit_absent = 3, exit_config = 4 };

/// Command-line overrides shared by the subcommands.
struct CommandOptions {
  std::string config_path;
  std::string preset;
  std::string out;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

/// Loads --config, or builds a default config around --preset, then applies
/// the overrides. KMSWKG_THREADS is consulted when --threads is absent.
ExperimentConfig resolve_config(const CommandOptions& options);

nlohmann::json to_json(const CheckReport& report);

/// Null check, then KMS with the configured J or a searched one. Returns the
/// exit code and fills `report`.
int run_check(const SystemSpec& spec, const KmsConfig& kms, std::uint64_t seed, nlohmann::json& report);

int cmd_check(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_simulate(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_profile(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_analyze(const std::string& run_dir, const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_preset_list(std::ostream& out);

}  // namespace kmswkg
