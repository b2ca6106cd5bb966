#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "kmswkg/grid.hpp"
#include "kmswkg/nonlinearity.hpp"

namespace kmswkg {

/// Closed-form or sampled bump b(x). Shapes, with s = |x - c| / radius:
///   poly:    amplitude (1 - s²)^power for s < 1
///   smooth:  amplitude exp(1 - 1/(1 - s²)) for s < 1
///   custom:  fn(x1, x2)
///   sampled: linear interpolation of samples[i] = b(i · sample_h) in |x - c|
struct Bump {
  enum class Shape { zero, poly, smooth, custom, sampled };

  Shape shape = Shape::zero;
  double amplitude = 1.0;
  double radius = 1.0;
  int power = 4;
  double center1 = 0.0;
  double center2 = 0.0;
  std::function<double(double, double)> custom;
  std::vector<double> samples;
  double sample_h = 0.0;

  static Bump zero() { return {}; }
  static Bump poly(double amplitude, double radius, int power = 4);
  static Bump smooth(double amplitude, double radius);

  double operator()(double x1, double x2) const;
  bool is_radial() const { return center1 == 0.0 && center2 == 0.0; }
};

std::string_view to_string(Bump::Shape s);
Bump::Shape parse_bump_shape(std::string_view s);

/// u_j(0) = ε f_j, ∂_t u_j(0) = ε g_j.
struct InitialData {
  double epsilon = 1.0;
  double support_radius = 1.0;
  /// When set, init() checks that the sampled data vanish for |x| > R.
  bool compact = true;
  std::vector<Bump> f;
  std::vector<Bump> g;

  static InitialData zero(int n_components, double support_radius = 1.0);
};

struct FieldState {
  double t = 0.0;
  std::int64_t step = 0;
  std::vector<std::vector<double>> u;
  std::vector<std::vector<double>> ut;
  /// t + R: radius outside which the exact solution vanishes.
  double support_bound = 0.0;

  int n_components() const { return static_cast<int>(u.size()); }
  double sup_abs(int j) const;
  bool all_finite() const;
};

/// Largest |x| at which some |u_j| exceeds rel_tol · max|u|; 0 for a zero state.
double numerical_support(const Grid& grid, const FieldState& state, double rel_tol = 1e-10);

/// Nonlinearity F_j(v, ∂u) at every node, using ∂_t u from the state and
/// centered spatial differences. Radial mode evaluates on θ = 0.
std::vector<std::vector<double>> rhs_fields(const SystemSpec& spec, const Grid& grid,
                                            const FieldState& state);

/// ∂_t² u_j = Δu_j - m_j² u_j + F_j at every node.
std::vector<std::vector<double>> acceleration(const SystemSpec& spec, const Grid& grid,
                                              const FieldState& state);

/// Throws ConfigError if F is not invariant under rotations of (∂₁u, ∂₂u),
/// which radial mode requires.
void check_rotation_invariance(const SystemSpec& spec, std::uint64_t seed = 7);

class Simulator;

/// Observer invoked after initialisation and after every accepted step.
class Recorder {
 public:
  virtual ~Recorder() = default;
  virtual void observe(const Simulator& sim) = 0;
  virtual void finish(const Simulator& /*sim*/) {}
};

/// Target times; a target fires on the step whose time is nearest to it.
class TimeSchedule {
 public:
  TimeSchedule() = default;
  explicit TimeSchedule(std::vector<double> targets);
  static TimeSchedule every(double interval, double start, double end);
  static TimeSchedule logspaced(double start, double end, int count);

  /// Consumes the targets nearest to t (within dt/2) and earlier; true if any fired.
  bool due(double t, double dt);
  /// True if some target would fire at time t without consuming it.
  bool peek(double t, double dt) const;
  bool exhausted() const { return next_ >= targets_.size(); }
  const std::vector<double>& targets() const { return targets_; }

 private:
  std::vector<double> targets_;
  std::size_t next_ = 0;
};

enum class RunStatus { running, completed, blowup };
std::string_view to_string(RunStatus s);

struct SimulatorOptions {
  int threads = 1;
  double blowup_threshold = 1e6;
};

/// Method-of-lines solver: centered second-order stencils in space, classical
/// RK4 in time. Only nodes within t + R + active_pad·h are updated; the rest
/// stay exactly zero.
class Simulator {
 public:
  Simulator(SystemSpec spec, GridConfig config, const InitialData& data, SimulatorOptions options = {});
  /// Continues from an existing state; R is the support radius of the data at t = 0.
  Simulator(SystemSpec spec, GridConfig config, FieldState state, double support_radius,
            SimulatorOptions options = {});

  const SystemSpec& spec() const { return spec_; }
  const GridConfig& config() const { return config_; }
  const Grid& grid() const { return grid_; }
  const FieldState& state() const { return state_; }
  double support_radius() const { return support_radius_; }
  double dt() const { return config_.dt; }

  RunStatus status() const { return status_; }
  bool blew_up() const { return status_ == RunStatus::blowup; }
  /// Time of the failed step; the state stays at the last good time.
  double blowup_time() const { return blowup_time_; }

  /// One RK4 step. Returns false, leaving the state unchanged, on blow-up.
  bool step();
  /// Steps until t_max or blow-up, calling recorders after init and each step.
  RunStatus run(const std::vector<Recorder*>& recorders = {});

 private:
  void setup();
  /// Number of radial nodes (or planar half-width in nodes) updated at time t.
  int active_extent(double t) const;
  void stage(const std::vector<std::vector<double>>& u, const std::vector<std::vector<double>>& p,
             std::vector<std::vector<double>>& acc, int extent) const;
  void stage_rows(const std::vector<std::vector<double>>& u, const std::vector<std::vector<double>>& p,
                  std::vector<std::vector<double>>& acc, int lo, int hi, int extent) const;

  SystemSpec spec_;
  GridConfig config_;
  Grid grid_;
  RhsKernel kernel_;
  SimulatorOptions options_;
  double support_radius_ = 0.0;
  FieldState state_;
  double t_origin_ = 0.0;
  std::int64_t step_origin_ = 0;
  RunStatus status_ = RunStatus::running;
  double blowup_time_ = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::vector<double>> us_, ps_, acc_, sum_u_, sum_p_, next_u_, next_p_;
};

/// Samples εf, εg onto the grid. Throws ConfigError if the grid config is
/// invalid for R or if compact data do not vanish outside B_R.
FieldState init(const SystemSpec& spec, const GridConfig& grid, const InitialData& data);

/// Single step on the whole grid (no active window).
FieldState step(const SystemSpec& spec, const GridConfig& grid, const FieldState& state);

struct RunResult {
  RunStatus status = RunStatus::running;
  double t_final = 0.0;
  std::int64_t steps = 0;
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
};

RunResult run(const SystemSpec& spec, const GridConfig& grid, const InitialData& data,
              const std::vector<Recorder*>& recorders = {}, SimulatorOptions options = {});

}  // namespace kmswkg
