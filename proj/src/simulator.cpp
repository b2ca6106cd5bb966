#include "kmswkg/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "kmswkg/errors.hpp"
#include "kmswkg/parallel.hpp"

namespace kmswkg {

Bump Bump::poly(double amplitude, double radius, int power) {
  Bump b;
  b.shape = Shape::poly;
  b.amplitude = amplitude;
  b.radius = radius;
  b.power = power;
  return b;
}

Bump Bump::smooth(double amplitude, double radius) {
  Bump b;
  b.shape = Shape::smooth;
  b.amplitude = amplitude;
  b.radius = radius;
  return b;
}

double Bump::operator()(double x1, double x2) const {
  const double d = std::hypot(x1 - center1, x2 - center2);
  switch (shape) {
    case Shape::zero:
      return 0.0;
    case Shape::poly: {
      const double s = d / radius;
      return s < 1.0 ? amplitude * std::pow(1.0 - s * s, power) : 0.0;
    }
    case Shape::smooth: {
      const double s = d / radius;
      return s < 1.0 ? amplitude * std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
    }
    case Shape::custom:
      return custom ? custom(x1, x2) : 0.0;
    case Shape::sampled: {
      if (samples.empty() || !(sample_h > 0.0)) return 0.0;
      const double s = d / sample_h;
      const auto i = static_cast<std::size_t>(std::floor(s));
      if (i + 1 >= samples.size()) return i + 1 == samples.size() && s == i ? samples.back() : 0.0;
      const double a = s - i;
      return (1.0 - a) * samples[i] + a * samples[i + 1];
    }
  }
  return 0.0;
}

std::string_view to_string(Bump::Shape s) {
  switch (s) {
    case Bump::Shape::zero: return "zero";
    case Bump::Shape::poly: return "poly";
    case Bump::Shape::smooth: return "smooth";
    case Bump::Shape::custom: return "custom";
    case Bump::Shape::sampled: return "sampled";
  }
  return "zero";
}

Bump::Shape parse_bump_shape(std::string_view s) {
  if (s == "zero") return Bump::Shape::zero;
  if (s == "poly") return Bump::Shape::poly;
  if (s == "smooth") return Bump::Shape::smooth;
  if (s == "sampled") return Bump::Shape::sampled;
  throw ConfigError("shape", "unknown bump shape '" + std::string(s) + "'");
}

InitialData InitialData::zero(int n_components, double support_radius) {
  InitialData d;
  d.support_radius = support_radius;
  d.f.assign(n_components, Bump::zero());
  d.g.assign(n_components, Bump::zero());
  return d;
}

double FieldState::sup_abs(int j) const {
  double m = 0.0;
  for (double x : u[j]) m = std::max(m, std::abs(x));
  return m;
}

bool FieldState::all_finite() const {
  for (const auto* fields : {&u, &ut})
    for (const auto& f : *fields)
      for (double x : f)
        if (!std::isfinite(x)) return false;
  return true;
}

double numerical_support(const Grid& grid, const FieldState& state, double rel_tol) {
  double peak = 0.0;
  for (const auto& f : state.u)
    for (double x : f) peak = std::max(peak, std::abs(x));
  if (peak == 0.0) return 0.0;
  double radius = 0.0;
  for (const auto& f : state.u)
    for (std::size_t k = 0; k < f.size(); ++k)
      if (std::abs(f[k]) > rel_tol * peak) radius = std::max(radius, grid.r(k));
  return radius;
}

namespace {

void check_shape(const FieldState& state, const SystemSpec& spec, const Grid& grid) {
  if (state.n_components() != spec.n_total() || static_cast<int>(state.ut.size()) != spec.n_total())
    throw ArgumentError("state has the wrong number of components");
  for (int j = 0; j < spec.n_total(); ++j)
    if (state.u[j].size() != grid.size() || state.ut[j].size() != grid.size())
      throw ArgumentError("state arrays do not match the grid");
}

}  // namespace

std::vector<std::vector<double>> rhs_fields(const SystemSpec& spec, const Grid& grid,
                                            const FieldState& state) {
  check_shape(state, spec, grid);
  const int n = spec.n_total();
  std::vector<std::vector<double>> d1(n), d2(n);
  for (int j = 0; j < n; ++j) spatial_gradient(grid, state.u[j], d1[j], d2[j]);
  RhsKernel kernel(spec);
  std::vector<std::vector<double>> out(n, std::vector<double>(grid.size(), 0.0));
  std::vector<double> v(std::max(spec.n_kg(), 1)), du(3 * n), f(n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (int j = 0; j < spec.n_kg(); ++j) v[j] = state.u[j][k];
    for (int j = 0; j < n; ++j) {
      du[3 * j] = state.ut[j][k];
      du[3 * j + 1] = d1[j][k];
      du[3 * j + 2] = d2[j][k];
    }
    kernel.evaluate(v.data(), du.data(), f.data());
    for (int j = 0; j < n; ++j) out[j][k] = f[j];
  }
  return out;
}

std::vector<std::vector<double>> acceleration(const SystemSpec& spec, const Grid& grid,
                                              const FieldState& state) {
  auto out = rhs_fields(spec, grid, state);
  std::vector<double> lap;
  for (int j = 0; j < spec.n_total(); ++j) {
    laplacian(grid, state.u[j], lap);
    const double m2 = spec.masses()[j] * spec.masses()[j];
    for (std::size_t k = 0; k < grid.size(); ++k) out[j][k] += lap[k] - m2 * state.u[j][k];
  }
  return out;
}

void check_rotation_invariance(const SystemSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  const int n = spec.n_total();
  RhsKernel kernel(spec);
  std::vector<double> v(std::max(spec.n_kg(), 1)), du(3 * n), rot(3 * n), f0(n), f1(n);
  for (int trial = 0; trial < 32; ++trial) {
    for (auto& x : v) x = normal(rng);
    for (auto& x : du) x = normal(rng);
    const double th = angle(rng), c = std::cos(th), s = std::sin(th);
    for (int j = 0; j < n; ++j) {
      rot[3 * j] = du[3 * j];
      rot[3 * j + 1] = c * du[3 * j + 1] - s * du[3 * j + 2];
      rot[3 * j + 2] = s * du[3 * j + 1] + c * du[3 * j + 2];
    }
    kernel.evaluate(v.data(), du.data(), f0.data());
    kernel.evaluate(v.data(), rot.data(), f1.data());
    for (int j = 0; j < n; ++j)
      if (std::abs(f0[j] - f1[j]) > 1e-9 * (1.0 + std::abs(f0[j])))
        throw ConfigError("grid.mode",
                          "radial mode requires a nonlinearity invariant under spatial rotations; "
                          "component " + std::to_string(j + 1) + " is not");
  }
}

TimeSchedule::TimeSchedule(std::vector<double> targets) : targets_(std::move(targets)) {
  std::sort(targets_.begin(), targets_.end());
}

TimeSchedule TimeSchedule::every(double interval, double start, double end) {
  if (!(interval > 0.0)) throw ArgumentError("schedule interval must be positive");
  std::vector<double> t;
  for (long k = 0;; ++k) {
    const double x = start + k * interval;
    if (x > end + 1e-9 * interval) break;
    t.push_back(x);
  }
  return TimeSchedule(std::move(t));
}

TimeSchedule TimeSchedule::logspaced(double start, double end, int count) {
  if (!(start > 0.0) || !(end > start) || count < 2)
    throw ArgumentError("log schedule needs 0 < start < end and count >= 2");
  std::vector<double> t(count);
  for (int k = 0; k < count; ++k) t[k] = start * std::pow(end / start, static_cast<double>(k) / (count - 1));
  t.back() = end;
  return TimeSchedule(std::move(t));
}

bool TimeSchedule::due(double t, double dt) {
  bool fired = false;
  while (next_ < targets_.size() && targets_[next_] <= t + 0.5 * dt) {
    ++next_;
    fired = true;
  }
  return fired;
}

bool TimeSchedule::peek(double t, double dt) const {
  return next_ < targets_.size() && targets_[next_] <= t + 0.5 * dt;
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::running: return "running";
    case RunStatus::completed: return "completed";
    case RunStatus::blowup: return "blowup";
  }
  return "running";
}

FieldState init(const SystemSpec& spec, const GridConfig& config, const InitialData& data) {
  config.validate(data.support_radius, data.compact);
  const int n = spec.n_total();
  auto check_list = [&](const std::vector<Bump>& list, const char* key) {
    if (!list.empty() && static_cast<int>(list.size()) != n)
      throw ConfigError(std::string("data.") + key, "needs one entry per component");
    if (config.mode == GridMode::radial)
      for (const auto& b : list)
        if (!b.is_radial() || b.shape == Bump::Shape::custom)
          throw ConfigError(std::string("data.") + key,
                            "radial mode needs centered closed-form or sampled radial data");
  };
  check_list(data.f, "f");
  check_list(data.g, "g");
  if (!(data.support_radius > 0.0)) throw ConfigError("data.support_radius", "must be positive");

  const Grid grid(config);
  FieldState s;
  s.support_bound = data.support_radius;
  s.u.assign(n, std::vector<double>(grid.size(), 0.0));
  s.ut.assign(n, std::vector<double>(grid.size(), 0.0));
  for (int j = 0; j < n; ++j)
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double x1 = grid.x1(k), x2 = grid.x2(k);
      if (!data.f.empty()) s.u[j][k] = data.epsilon * data.f[j](x1, x2);
      if (!data.g.empty()) s.ut[j][k] = data.epsilon * data.g[j](x1, x2);
    }
  if (!s.all_finite()) throw ConfigError("data", "initial data contain nonfinite values");
  if (data.compact) {
    for (int j = 0; j < n; ++j)
      for (std::size_t k = 0; k < grid.size(); ++k)
        if (grid.r(k) > data.support_radius * (1.0 + 1e-12) && (s.u[j][k] != 0.0 || s.ut[j][k] != 0.0))
          throw ConfigError("data.support_radius",
                            "data of component " + std::to_string(j + 1) + " do not vanish at |x| = " +
                                std::to_string(grid.r(k)) + " > R");
  }
  return s;
}

Simulator::Simulator(SystemSpec spec, GridConfig config, const InitialData& data, SimulatorOptions options)
    : spec_(std::move(spec)), config_(config), options_(options), support_radius_(data.support_radius) {
  if (config_.mode == GridMode::radial) check_rotation_invariance(spec_);
  state_ = init(spec_, config_, data);
  setup();
}

Simulator::Simulator(SystemSpec spec, GridConfig config, FieldState state, double support_radius,
                     SimulatorOptions options)
    : spec_(std::move(spec)), config_(config), options_(options), support_radius_(support_radius),
      state_(std::move(state)) {
  config_.validate(support_radius_, false);
  if (config_.mode == GridMode::radial) check_rotation_invariance(spec_);
  setup();
  check_shape(state_, spec_, grid_);
  if (!state_.all_finite()) throw ArgumentError("initial state is not finite");
}

void Simulator::setup() {
  grid_ = Grid(config_);
  kernel_ = RhsKernel(spec_);
  t_origin_ = state_.t;
  step_origin_ = state_.step;
  state_.support_bound = state_.t + support_radius_;
  const std::vector<std::vector<double>> zero(spec_.n_total(), std::vector<double>(grid_.size(), 0.0));
  us_ = ps_ = acc_ = sum_u_ = sum_p_ = next_u_ = next_p_ = zero;
}

int Simulator::active_extent(double t) const {
  const int cap = grid_.mode() == GridMode::radial ? grid_.n() - 1 : grid_.center() - 1;
  if (config_.active_pad < 0) return cap;
  const double reach = std::ceil((t + support_radius_) / grid_.h()) + config_.active_pad;
  return static_cast<int>(std::min<double>(cap, reach));
}

void Simulator::stage_rows(const std::vector<std::vector<double>>& u, const std::vector<std::vector<double>>& p,
                           std::vector<std::vector<double>>& acc, int lo, int hi, int extent) const {
  const int n = spec_.n_total();
  const int nk = spec_.n_kg();
  const double h = grid_.h();
  const double ih2 = 1.0 / (h * h);
  const double inv2h = 0.5 / h;
  double v[16], du[48], f[16];
  std::vector<double> vbuf, dubuf, fbuf;
  double* vp = v;
  double* dup = du;
  double* fp = f;
  if (n > 16) {
    vbuf.resize(n);
    dubuf.resize(3 * n);
    fbuf.resize(n);
    vp = vbuf.data();
    dup = dubuf.data();
    fp = fbuf.data();
  }
  const bool has_rhs = !kernel_.empty();
  if (grid_.mode() == GridMode::radial) {
    for (int i = lo; i < hi; ++i) {
      for (int j = 0; j < n; ++j) {
        const double* uj = u[j].data();
        double lap, ur;
        if (i == 0) {
          lap = 4.0 * (uj[1] - uj[0]) * ih2;
          ur = 0.0;
        } else {
          ur = (uj[i + 1] - uj[i - 1]) * inv2h;
          lap = (uj[i + 1] - 2.0 * uj[i] + uj[i - 1]) * ih2 + ur / (i * h);
        }
        const double m = spec_.masses()[j];
        acc[j][i] = lap - m * m * uj[i];
        if (j < nk) vp[j] = uj[i];
        dup[3 * j] = p[j][i];
        dup[3 * j + 1] = ur;
        dup[3 * j + 2] = 0.0;
      }
      if (has_rhs) {
        kernel_.evaluate(vp, dup, fp);
        for (int j = 0; j < n; ++j) acc[j][i] += fp[j];
      }
    }
    return;
  }
  const int c = grid_.center();
  const int stride = grid_.n();
  for (int row = lo; row < hi; ++row) {
    for (int col = c - extent; col <= c + extent; ++col) {
      const std::size_t k = grid_.index(col, row);
      for (int j = 0; j < n; ++j) {
        const double* uj = u[j].data();
        const double lap = (uj[k + 1] + uj[k - 1] + uj[k + stride] + uj[k - stride] - 4.0 * uj[k]) * ih2;
        const double m = spec_.masses()[j];
        acc[j][k] = lap - m * m * uj[k];
        if (j < nk) vp[j] = uj[k];
        dup[3 * j] = p[j][k];
        dup[3 * j + 1] = (uj[k + 1] - uj[k - 1]) * inv2h;
        dup[3 * j + 2] = (uj[k + stride] - uj[k - stride]) * inv2h;
      }
      if (has_rhs) {
        kernel_.evaluate(vp, dup, fp);
        for (int j = 0; j < n; ++j) acc[j][k] += fp[j];
      }
    }
  }
}

void Simulator::stage(const std::vector<std::vector<double>>& u, const std::vector<std::vector<double>>& p,
                      std::vector<std::vector<double>>& acc, int extent) const {
  int lo, hi;
  if (grid_.mode() == GridMode::radial) {
    lo = 0;
    hi = extent;
  } else {
    lo = grid_.center() - extent;
    hi = grid_.center() + extent + 1;
  }
  parallel_for(static_cast<std::size_t>(hi - lo), options_.threads, [&](std::size_t b, std::size_t e) {
    stage_rows(u, p, acc, lo + static_cast<int>(b), lo + static_cast<int>(e), extent);
  });
}

bool Simulator::step() {
  if (status_ == RunStatus::blowup) return false;
  const double dt = config_.dt;
  const int extent = active_extent(state_.t + dt);
  const int n = spec_.n_total();

  // Visits every updated node k.
  auto for_window = [&](auto&& fn) {
    if (grid_.mode() == GridMode::radial) {
      for (int i = 0; i < extent; ++i) fn(static_cast<std::size_t>(i));
    } else {
      const int c = grid_.center();
      for (int row = c - extent; row <= c + extent; ++row)
        for (int col = c - extent; col <= c + extent; ++col) fn(grid_.index(col, row));
    }
  };

  const auto& u = state_.u;
  const auto& p = state_.ut;
  stage(u, p, acc_, extent);
  for (int j = 0; j < n; ++j)
    for_window([&](std::size_t k) {
      sum_u_[j][k] = p[j][k];
      sum_p_[j][k] = acc_[j][k];
      us_[j][k] = u[j][k] + 0.5 * dt * p[j][k];
      ps_[j][k] = p[j][k] + 0.5 * dt * acc_[j][k];
    });
  for (int s = 2; s <= 3; ++s) {
    stage(us_, ps_, acc_, extent);
    const double c = s == 2 ? 0.5 * dt : dt;
    for (int j = 0; j < n; ++j)
      for_window([&](std::size_t k) {
        const double pk = ps_[j][k];
        sum_u_[j][k] += 2.0 * pk;
        sum_p_[j][k] += 2.0 * acc_[j][k];
        us_[j][k] = u[j][k] + c * pk;
        ps_[j][k] = p[j][k] + c * acc_[j][k];
      });
  }
  stage(us_, ps_, acc_, extent);
  const double w = dt / 6.0;
  const double limit = options_.blowup_threshold;
  bool ok = true;
  for (int j = 0; j < n; ++j)
    for_window([&](std::size_t k) {
      const double un = u[j][k] + w * (sum_u_[j][k] + ps_[j][k]);
      const double pn = p[j][k] + w * (sum_p_[j][k] + acc_[j][k]);
      next_u_[j][k] = un;
      next_p_[j][k] = pn;
      if (!(std::abs(un) <= limit) || !(std::abs(pn) <= limit)) ok = false;
    });
  if (!ok) {
    status_ = RunStatus::blowup;
    blowup_time_ = state_.t + dt;
    return false;
  }
  std::swap(state_.u, next_u_);
  std::swap(state_.ut, next_p_);
  ++state_.step;
  state_.t = t_origin_ + static_cast<double>(state_.step - step_origin_) * dt;
  state_.support_bound = state_.t + support_radius_;
  return true;
}

RunStatus Simulator::run(const std::vector<Recorder*>& recorders) {
  for (auto* r : recorders) r->observe(*this);
  while (status_ == RunStatus::running && state_.t < config_.t_max - 0.5 * config_.dt) {
    if (!step()) break;
    for (auto* r : recorders) r->observe(*this);
  }
  if (status_ == RunStatus::running) status_ = RunStatus::completed;
  for (auto* r : recorders) r->finish(*this);
  return status_;
}

FieldState step(const SystemSpec& spec, const GridConfig& grid, const FieldState& state) {
  GridConfig full = grid;
  full.active_pad = -1;
  Simulator sim(spec, full, state, 0.0);
  if (!sim.step())
    throw std::runtime_error("step produced nonfinite or oversized values at t = " +
                             std::to_string(sim.blowup_time()));
  return sim.state();
}

RunResult run(const SystemSpec& spec, const GridConfig& grid, const InitialData& data,
              const std::vector<Recorder*>& recorders, SimulatorOptions options) {
  Simulator sim(spec, grid, data, options);
  sim.run(recorders);
  RunResult r;
  r.status = sim.status();
  r.t_final = sim.state().t;
  r.steps = sim.state().step;
  r.blowup_time = sim.blowup_time();
  return r;
}

}  // namespace kmswkg
