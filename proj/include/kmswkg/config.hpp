#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kmswkg/diagnostics.hpp"
#include "kmswkg/grid.hpp"
#include "kmswkg/nonlinearity.hpp"
#include "kmswkg/presets.hpp"
#include "kmswkg/simulator.hpp"

namespace kmswkg {

inline constexpr double unset = std::numeric_limits<double>::quiet_NaN();

/// Either a preset reference or an inline system. Inline component indices
/// in the file are 1-based.
struct SpecConfig {
  std::string preset;
  PresetParams params;
  std::optional<SystemSpec> inline_spec;

  SystemSpec resolve() const;
  bool operator==(const SpecConfig&) const = default;
};

struct GridSettings {
  GridMode mode = GridMode::radial;
  double h = 0.1;
  double cfl = 0.4;
  /// When set, overrides cfl.
  double dt = unset;
  double t_max = 10.0;
  /// When unset, the smallest causally safe radius.
  double extent = unset;
  int active_pad = 32;

  GridConfig build(double support_radius) const;
  bool operator==(const GridSettings& o) const;
};

struct BumpConfig {
  Bump::Shape shape = Bump::Shape::zero;
  double amplitude = 1.0;
  double radius = 1.0;
  int power = 4;
  double center1 = 0.0;
  double center2 = 0.0;
  std::vector<double> samples;
  double sample_h = 0.0;

  Bump build() const;
  bool operator==(const BumpConfig&) const = default;
};

struct DataConfig {
  double epsilon = 0.1;
  double support_radius = 1.0;
  bool compact = true;
  std::vector<BumpConfig> f;
  std::vector<BumpConfig> g;

  InitialData build() const;
  bool operator==(const DataConfig&) const = default;
};

/// Target times: explicit list, a cadence, or log-spaced.
struct ScheduleConfig {
  std::vector<double> times;
  double every = 0.0;
  double start = 0.0;
  /// Cadence end; unset means t_max.
  double end = unset;
  int log_count = 0;

  TimeSchedule build(double t_max) const;
  bool operator==(const ScheduleConfig& o) const;
};

struct RecorderConfig {
  std::string kind;  // snapshot | norms | ray | scattering
  ScheduleConfig schedule;
  std::vector<double> sigma;
  std::vector<double> theta;
  double t_match = 50.0;

  bool operator==(const RecorderConfig&) const = default;
};

struct ProfileConfig {
  std::vector<double> sigma{0.0};
  std::vector<double> theta{0.0};
  std::vector<double> w0{1.0};
  double t_end = 2000.0;
  double rtol = 1e-10;
  double atol = 1e-12;

  bool operator==(const ProfileConfig&) const = default;
};

struct FitConfig {
  std::string label;
  /// "norms:<name>" or "ray" (amplitude r^{1/2}|∂_t w| on the strongest ray).
  std::string source;
  FitModel model = FitModel::log_power;
  double t_a = 50.0;
  double t_b = 2000.0;
  double target = 0.0;
  double tolerance = 0.0;

  bool operator==(const FitConfig&) const = default;
};

struct AnalysisConfig {
  std::vector<double> ray_t1{100.0, 250.0};
  double ray_factor = 4.0;
  double ray_sigma_min = -2.0;
  /// Unset means R - 1.
  double ray_sigma_max = unset;
  double ray_tolerance = 0.1;
  /// When empty, analyze uses the default energy and ray-amplitude fits.
  std::vector<FitConfig> fits;
  double fit_t_a = 50.0;
  double fit_t_b = 2000.0;
  double scattering_tolerance = 0.05;

  bool operator==(const AnalysisConfig& o) const;
};

struct KmsConfig {
  std::vector<std::vector<double>> j;
  int n_omega = 64;
  int n_y = 16;
  int trig_order = 0;

  bool operator==(const KmsConfig&) const = default;
};

struct ExperimentConfig {
  SpecConfig spec;
  GridSettings grid;
  DataConfig data;
  WeightSpec weights;
  std::vector<RecorderConfig> recorders;
  std::optional<ProfileConfig> profile;
  AnalysisConfig analysis;
  KmsConfig kms;
  std::uint64_t seed = 0;
  std::string output = "run";
  int threads = 1;

  bool operator==(const ExperimentConfig& o) const;
};

/// Parses and validates; throws ConfigError naming the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& config);
std::string serialize_config(const ExperimentConfig& config);

/// Checks cross-section invariants (grid vs data, σ ≤ R, radial symmetry).
void validate_config(const ExperimentConfig& config);

nlohmann::json spec_to_json(const SystemSpec& spec);
SystemSpec spec_from_json(const nlohmann::json& j, const std::string& path = "spec");

}  // namespace kmswkg
