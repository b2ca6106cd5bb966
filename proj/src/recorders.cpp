#include "kmswkg/recorders.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kmswkg {

SnapshotRecorder::SnapshotRecorder(std::filesystem::path dir, TimeSchedule schedule, std::vector<std::string> names)
    : dir_(std::move(dir)), schedule_(std::move(schedule)), names_(std::move(names)) {
  std::filesystem::create_directories(dir_);
}

void SnapshotRecorder::observe(const Simulator& sim) {
  const auto& s = sim.state();
  if (!schedule_.due(s.t, sim.dt())) return;
  const Grid& grid = sim.grid();
  const int n = s.n_components();
  std::vector<std::string> names = names_;
  for (int j = static_cast<int>(names.size()); j < n; ++j) names.push_back("u" + std::to_string(j + 1));

  std::vector<std::string> header;
  std::vector<std::vector<double>> cols;
  std::vector<double> x1(grid.size()), x2(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    x1[k] = grid.x1(k);
    x2[k] = grid.x2(k);
  }
  if (grid.mode() == GridMode::radial) {
    header.push_back("r");
    cols.push_back(std::move(x1));
  } else {
    header.insert(header.end(), {"x1", "x2"});
    cols.push_back(std::move(x1));
    cols.push_back(std::move(x2));
  }
  for (int j = 0; j < n; ++j) {
    header.push_back(names[j]);
    cols.push_back(s.u[j]);
    header.push_back(names[j] + "_t");
    cols.push_back(s.ut[j]);
  }
  const std::string stem = "snapshot_" + std::to_string(files_.size());
  const auto csv = dir_ / (stem + ".csv");
  write_csv(csv, header, cols);

  nlohmann::json meta{{"kind", "snapshot"},
                      {"schema", schema_version},
                      {"t", s.t},
                      {"step", s.step},
                      {"h", grid.h()},
                      {"dt", sim.dt()},
                      {"mode", std::string(to_string(grid.mode()))},
                      {"nodes", grid.n()},
                      {"components", names},
                      {"file", csv.filename().string()}};
  std::ofstream side(dir_ / (stem + ".json"), std::ios::binary);
  side << meta.dump(2) << '\n';
  if (!side) throw std::runtime_error("cannot write snapshot metadata in " + dir_.string());
  files_.push_back(csv);
}

HistoryRecorder::HistoryRecorder(TimeSchedule schedule, bool neighbours)
    : schedule_(std::move(schedule)), neighbours_(neighbours) {}

void HistoryRecorder::store(const FieldState& s) {
  if (!states_.empty() && states_.back().step >= s.step) return;
  states_.push_back(s);
}

void HistoryRecorder::observe(const Simulator& sim) {
  const auto& s = sim.state();
  const double dt = sim.dt();
  if (store_next_) {
    store(s);
    store_next_ = false;
  }
  if (schedule_.due(s.t, dt)) {
    if (neighbours_ && previous_ && previous_->step + 1 == s.step) store(*previous_);
    store(s);
    store_next_ = neighbours_;
  }
  if (neighbours_ && schedule_.peek(s.t + dt, dt))
    previous_ = s;
  else
    previous_.reset();
}

const FieldState& HistoryRecorder::nearest(double t) const {
  if (states_.empty()) throw std::out_of_range("history is empty");
  return *std::min_element(states_.begin(), states_.end(), [t](const FieldState& a, const FieldState& b) {
    return std::abs(a.t - t) < std::abs(b.t - t);
  });
}

const FieldState* HistoryRecorder::at_step(std::int64_t step) const {
  for (const auto& s : states_)
    if (s.step == step) return &s;
  return nullptr;
}

NormsRecorder::NormsRecorder(TimeSchedule schedule, WeightSpec weights, NdjsonWriter* out)
    : schedule_(std::move(schedule)), weights_(weights), out_(out) {
  weights_.validate();
}

void NormsRecorder::observe(const Simulator& sim) {
  const auto& s = sim.state();
  if (!schedule_.due(s.t, sim.dt())) return;
  auto bundle = weighted_norms(sim.spec(), sim.grid(), s, weights_);
  if (out_) {
    nlohmann::json rec{{"kind", "norms"}, {"t", s.t}, {"step", s.step}, {"values", bundle.values}};
    if (samples_.empty()) rec["notes"] = bundle.notes;
    out_->write(std::move(rec));
  }
  samples_.push_back(std::move(bundle));
}

NormSeries NormsRecorder::series(const std::string& name) const {
  NormSeries out;
  out.name = name;
  for (const auto& b : samples_) {
    auto it = b.values.find(name);
    if (it == b.values.end()) throw std::out_of_range("no norm named '" + name + "'");
    out.push(b.t, it->second);
  }
  return out;
}

nlohmann::json to_json(const RayRecord& rec, const RayCoords& ray) {
  nlohmann::json dw = nlohmann::json::array();
  for (const auto& a : rec.sqrt_r_dw) dw.push_back({a[0], a[1], a[2]});
  return {{"kind", "ray"},     {"sigma", ray.sigma},    {"theta", ray.direction.angle()},
          {"t0", ray.t0},      {"t", rec.t},            {"r", rec.r},
          {"W", rec.w},        {"sqrt_r_dw", dw},       {"bracket", rec.bracket},
          {"H", rec.h}};
}

RayRecorder::RayRecorder(std::vector<RayCoords> rays, TimeSchedule schedule, NdjsonWriter* out)
    : schedule_(std::move(schedule)), out_(out) {
  for (auto& r : rays) samples_.push_back(RaySample{r, {}, {}});
}

void RayRecorder::observe(const Simulator& sim) {
  const auto& s = sim.state();
  if (!schedule_.due(s.t, sim.dt())) return;
  const Grid& grid = sim.grid();
  const double r_limit = (grid.mode() == GridMode::radial ? grid.n() - 2 : grid.center() - 2) * grid.h();
  std::optional<RayProbe> probe;
  for (auto& sample : samples_) {
    const double r = s.t + sample.ray.sigma;
    if (!in_light_cone_region(s.t, r, sim.support_radius()) || r > r_limit) {
      if (sample.notices.size() < 8)
        sample.notices.push_back("skipped t = " + std::to_string(s.t) + ": r = " + std::to_string(r) +
                                 " outside 1 <= t/2 <= r <= t + R or the grid");
      continue;
    }
    if (!probe) probe.emplace(sim.spec(), grid, s);
    auto rec = probe->at(sample.ray);
    if (out_) out_->write(to_json(rec, sample.ray));
    sample.records.push_back(std::move(rec));
  }
}

ScatteringRecorder::ScatteringRecorder(double t_match, TimeSchedule schedule, NdjsonWriter* out)
    : t_match_(t_match), schedule_(std::move(schedule)), out_(out) {
  deficits_.name = "scattering_deficit";
}

void ScatteringRecorder::observe(const Simulator& sim) {
  if (disabled_) return;
  const auto& s = sim.state();
  const double dt = sim.dt();
  const SystemSpec& spec = sim.spec();
  if (!reference_) {
    if (s.t < t_match_ - 0.5 * dt) return;
    if (spec.n_kg() == 0) {
      notices_.push_back("no Klein-Gordon components: scattering deficit not computed");
      disabled_ = true;
      return;
    }
    const int nk = spec.n_kg();
    std::vector<double> masses(spec.masses().begin(), spec.masses().begin() + nk);
    SystemSpec free(nk, nk, masses, CubicTensor{});
    FieldState init;
    init.t = s.t;
    init.step = s.step;
    init.u.assign(s.u.begin(), s.u.begin() + nk);
    init.ut.assign(s.ut.begin(), s.ut.begin() + nk);
    reference_ = std::make_unique<Simulator>(free, sim.config(), std::move(init), sim.support_radius());
    t_matched_ = s.t;
  } else {
    reference_->step();
  }
  if (!schedule_.due(s.t, dt)) return;
  const auto& ref = reference_->state();
  if (std::abs(ref.t - s.t) > 1e-6 * dt) throw std::logic_error("scattering reference fell out of step");
  const int nk = spec.n_kg();
  const std::vector<std::vector<double>> v(s.u.begin(), s.u.begin() + nk), vt(s.ut.begin(), s.ut.begin() + nk);
  const double d = scattering_deficit(sim.grid(), v, vt, ref.u, ref.ut);
  deficits_.push(s.t, d);
  if (out_) out_->write({{"kind", "scattering"}, {"t", s.t}, {"t_match", t_matched_}, {"deficit", d}});
}

void StatusRecorder::finish(const Simulator& sim) {
  if (!out_) return;
  nlohmann::json rec{{"kind", "status"},
                     {"status", std::string(to_string(sim.status()))},
                     {"t_final", sim.state().t},
                     {"steps", sim.state().step}};
  rec["blowup_time"] = sim.blew_up() ? nlohmann::json(sim.blowup_time()) : nlohmann::json(nullptr);
  out_->write(std::move(rec));
  out_->flush();
}

}  // namespace kmswkg
