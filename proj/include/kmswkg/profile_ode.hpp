#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "kmswkg/condition_checker.hpp"
#include "kmswkg/nonlinearity.hpp"

namespace kmswkg {

/// t₀(σ) = max(-2σ, 2): first time the ray r = t + σ enters the region t/2 ≤ r.
double t0_of_sigma(double sigma);

/// Outgoing ray r = t + σ in direction ω.
struct RayCoords {
  double sigma = 0.0;
  Direction direction;
  double t0 = 2.0;

  static RayCoords make(double sigma, const Direction& direction);
};

/// Vector-valued forcing H(t): absent, a closed-form callback, or a sampled
/// series interpolated linearly (held constant outside the sample range).
class Forcing {
 public:
  using Callback = std::function<std::vector<double>(double)>;

  Forcing() = default;
  static Forcing none() { return {}; }
  static Forcing callback(Callback f);
  static Forcing sampled(std::vector<double> times, std::vector<std::vector<double>> values);

  bool is_none() const { return !fn_ && times_.empty(); }
  /// Writes H(t) into out (size n); throws ArgumentError on nonfinite values.
  void evaluate(double t, std::span<double> out) const;

 private:
  Callback fn_;
  std::vector<double> times_;
  std::vector<std::vector<double>> values_;
};

struct ProfileTrajectory {
  RayCoords ray;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
  std::vector<double> lyapunov;
  /// H(t) used at each sample, when a forcing was supplied.
  std::vector<std::vector<double>> forcing;
  bool blew_up = false;
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
};

struct StepControl {
  double rtol = 1e-9;
  double atol = 1e-12;
  double blowup_threshold = 1e8;
  /// Upper bound on accepted step size (infinite by default).
  double max_step = std::numeric_limits<double>::infinity();
  /// Start time; NaN means ray.t0.
  double t_start = std::numeric_limits<double>::quiet_NaN();
  /// Integrate in s = ln t instead of t (same ODE, autonomous when H ≡ 0).
  bool log_time = false;
  /// Extra times that the integrator must land on exactly.
  std::vector<double> stop_times;
};

/// dW/dt = -F_red(ω, W)/(2t) + H(t), adaptive Dormand–Prince 5(4).
ProfileTrajectory integrate_profile(const SystemSpec& spec, const RayCoords& ray,
                                    std::span<const double> w0, double t_end,
                                    const Forcing& forcing = {},
                                    const KmsCertificate* j = nullptr,
                                    const StepControl& control = {});

/// dWα/dt = -G(ω, W(t)) Wα/(2t) + Hα(t) along `base` (linear interpolation
/// between base samples) over the base time interval.
ProfileTrajectory integrate_variational(const SystemSpec& spec, const ProfileTrajectory& base,
                                        std::span<const double> w_alpha0,
                                        const Forcing& h_alpha = {},
                                        const StepControl& control = {});

/// A(t) = A₀ / sqrt(1 + A₀² ln(t/t₀)), the solution of dA/dt = -A³/(2t).
double explicit_cubic_profile(double a0, double t0, double t);

/// Solution of dA/dt = -λ A³/(2t); NaN past the pole when λ A₀² < 0.
double explicit_scalar_profile(double lambda, double a0, double t0, double t);

/// (W*)ᵀ J(ω) W* per sample.
std::vector<double> lyapunov_series(const ProfileTrajectory& trajectory, const KmsCertificate& j);

struct RayJob {
  RayCoords ray;
  std::vector<double> w0;
  double t_end = 0.0;
};

/// Integrates independent rays, possibly on several threads; output order
/// matches the input order.
std::vector<ProfileTrajectory> integrate_batch(const SystemSpec& spec, const std::vector<RayJob>& jobs,
                                               const KmsCertificate* j = nullptr,
                                               const StepControl& control = {}, int threads = 1);

}  // namespace kmswkg
