#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kmswkg/config.hpp"
#include "kmswkg/diagnostics.hpp"
#include "kmswkg/ray.hpp"

namespace kmswkg {

struct RayConsistencyOptions {
  std::vector<double> t1{100.0, 250.0};
  double factor = 4.0;
  double sigma_min = -2.0;
  double sigma_max = 1.0;
  double tolerance = 0.1;
  /// A record counts as taken at t if it lies within this fraction of t.
  double time_slack = 0.01;
  double rtol = 1e-10;
  double atol = 1e-12;
};

struct RayConsistencyRow {
  double sigma = 0.0;
  double theta = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  std::vector<double> w1;
  std::vector<double> extracted;
  std::vector<double> predicted;
  /// max_l |predicted - extracted| / scale(t2).
  double error = 0.0;
  bool pass = false;
};

struct RayConsistencyReport {
  std::vector<RayConsistencyRow> rows;
  /// Per t1: sup over the tested rays of |W(t2)|, the error normalisation.
  std::vector<double> scales;
  double max_error = 0.0;
  bool pass = false;
  std::vector<std::string> notices;
};

/// Evolves W extracted at t1 to factor·t1 with the profile ODE (H ≡ 0) and
/// compares with the extracted W there, for rays with σ in [sigma_min, sigma_max].
RayConsistencyReport ray_consistency(const SystemSpec& spec, const std::vector<RaySample>& samples,
                                     const RayConsistencyOptions& options);

/// max over wave components of |r^{1/2} ∂_t w| per record of the ray whose
/// mean amplitude over [t_a, t_b] is largest.
NormSeries ray_amplitude_series(const std::vector<RaySample>& samples, double t_a, double t_b,
                                double* sigma = nullptr, double* theta = nullptr);

struct FitCheck {
  FitConfig config;
  std::optional<FitResult> fit;
  bool pass = false;
  std::string note;
};

FitCheck check_fit(const FitConfig& config, const NormSeries& series);

/// Default fits: wave energy against -(1-μ)/4 within 40%, and the ray
/// amplitude against -1/2 within 0.2, both in log-power mode.
std::vector<FitConfig> default_fits(const AnalysisConfig& analysis, const WeightSpec& weights);

struct MonotoneCheck {
  std::vector<double> times;
  std::vector<double> values;
  double worst_ratio = 0.0;
  bool pass = false;
};

/// values[i+1] ≤ (1 + tolerance) values[i] at the samples nearest to `times`.
MonotoneCheck check_nonincreasing(const NormSeries& series, const std::vector<double>& times, double tolerance);

/// Contents of a run directory written by the simulate command.
struct RunArtifacts {
  ExperimentConfig config;
  nlohmann::json status;
  std::vector<NormBundle> norms;
  std::vector<RaySample> rays;
  NormSeries scattering;
  double t_match = 0.0;
};

RunArtifacts load_run(const std::filesystem::path& dir);

NormSeries norm_series(const std::vector<NormBundle>& bundles, const std::string& name);

/// Groups ray records by (σ, θ) in first-seen order.
std::vector<RaySample> group_ray_records(const std::vector<nlohmann::json>& records);

/// Report with sections status, ray_consistency, decay_fits, scattering.
nlohmann::json analyze_run(const RunArtifacts& run);

}  // namespace kmswkg
