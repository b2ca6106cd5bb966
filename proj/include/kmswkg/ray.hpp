#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "kmswkg/profile_ode.hpp"
#include "kmswkg/simulator.hpp"

namespace kmswkg {

/// Profile data at one point (t, (t+σ)ω). Vectors run over wave components.
struct RayRecord {
  double t = 0.0;
  double r = 0.0;
  /// W = D₋(r^{1/2} w), D₋ = (∂_r - ∂_t)/2.
  std::vector<double> w;
  /// r^{1/2} (∂_t w, ∂₁w, ∂₂w).
  std::vector<std::array<double, 3>> sqrt_r_dw;
  /// |w| + Σ_Γ |Γw| + ⟨t-r⟩ |∂w|.
  std::vector<double> bracket;
  /// H = ∂₊W + F_red(ω, W)/(2t), from the field equation at the point.
  std::vector<double> h;
};

struct RaySample {
  RayCoords ray;
  std::vector<RayRecord> records;
  std::vector<std::string> notices;
};

/// Λ_{T,R}: 1 ≤ t/2 ≤ r ≤ t + R.
bool in_light_cone_region(double t, double r, double support_radius);

/// Nodal fields of one state, interpolated to points on rays.
class RayProbe {
 public:
  RayProbe(const SystemSpec& spec, const Grid& grid, const FieldState& state);
  /// Record at r = t + σ; no region check.
  RayRecord at(const RayCoords& ray) const;

 private:
  const SystemSpec* spec_;
  const Grid* grid_;
  double t_;
  ReducedForm reduced_;
  RhsKernel kernel_;
  std::vector<std::vector<double>> u_, ut_, d1_, d2_, omega2_;
};

/// Extracts records along `ray` at the stored states nearest to each of
/// `times`. Points outside Λ_{T,R} or beyond the grid are skipped with a notice.
RaySample extract_ray(const SystemSpec& spec, const Grid& grid, const std::vector<FieldState>& history,
                      const RayCoords& ray, const std::vector<double>& times, double support_radius);

struct PolarProbe {
  double h = 0.05;
  double t = 10.0;
  double r_min = 5.0;
  double r_max = 10.0;
  int n_r = 32;
  int n_theta = 16;
};

/// max over the annulus of |r^{1/2}□φ - [∂₊∂₋(r^{1/2}φ) - (4Ω² + 1)φ / (4 r^{3/2})]|
/// with ∂₋ = ∂_t - ∂_r. The left side uses centered Cartesian differences of
/// step h; the right side centered differences in (t, r) and angular step h/r.
double polar_residual(const std::function<double(double, double, double)>& phi, const PolarProbe& probe);

}  // namespace kmswkg
