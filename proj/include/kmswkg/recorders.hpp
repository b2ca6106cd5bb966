#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kmswkg/diagnostics.hpp"
#include "kmswkg/ndjson.hpp"
#include "kmswkg/ray.hpp"
#include "kmswkg/simulator.hpp"

namespace kmswkg {

/// CSV matrix plus a JSON sidecar (t, h, dt, component names) per target time.
class SnapshotRecorder : public Recorder {
 public:
  SnapshotRecorder(std::filesystem::path dir, TimeSchedule schedule, std::vector<std::string> names = {});
  void observe(const Simulator& sim) override;
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  TimeSchedule schedule_;
  std::vector<std::string> names_;
  std::vector<std::filesystem::path> files_;
};

/// Keeps full states in memory at target times; with `neighbours`, also the
/// steps just before and after each target.
class HistoryRecorder : public Recorder {
 public:
  explicit HistoryRecorder(TimeSchedule schedule, bool neighbours = false);
  void observe(const Simulator& sim) override;

  const std::vector<FieldState>& states() const { return states_; }
  const FieldState& nearest(double t) const;
  const FieldState* at_step(std::int64_t step) const;

 private:
  void store(const FieldState& s);
  TimeSchedule schedule_;
  bool neighbours_;
  bool store_next_ = false;
  std::optional<FieldState> previous_;
  std::vector<FieldState> states_;
};

/// weighted_norms at target times, kept in memory and optionally streamed.
class NormsRecorder : public Recorder {
 public:
  NormsRecorder(TimeSchedule schedule, WeightSpec weights, NdjsonWriter* out = nullptr);
  void observe(const Simulator& sim) override;

  const std::vector<NormBundle>& samples() const { return samples_; }
  NormSeries series(const std::string& name) const;

 private:
  TimeSchedule schedule_;
  WeightSpec weights_;
  NdjsonWriter* out_;
  std::vector<NormBundle> samples_;
};

/// Ray records at target times for a fixed set of rays.
class RayRecorder : public Recorder {
 public:
  RayRecorder(std::vector<RayCoords> rays, TimeSchedule schedule, NdjsonWriter* out = nullptr);
  void observe(const Simulator& sim) override;
  const std::vector<RaySample>& samples() const { return samples_; }

 private:
  TimeSchedule schedule_;
  NdjsonWriter* out_;
  std::vector<RaySample> samples_;
};

/// Starts a linear Klein-Gordon reference from the Klein-Gordon components at
/// t_match, steps it alongside the run, and records scattering_deficit at
/// target times.
class ScatteringRecorder : public Recorder {
 public:
  ScatteringRecorder(double t_match, TimeSchedule schedule, NdjsonWriter* out = nullptr);
  void observe(const Simulator& sim) override;

  const NormSeries& deficits() const { return deficits_; }
  /// Time at which the reference was started.
  double matched_at() const { return t_matched_; }
  const std::vector<std::string>& notices() const { return notices_; }

 private:
  double t_match_;
  double t_matched_ = 0.0;
  TimeSchedule schedule_;
  NdjsonWriter* out_;
  std::unique_ptr<Simulator> reference_;
  NormSeries deficits_;
  std::vector<std::string> notices_;
  bool disabled_ = false;
};

/// Writes the terminal {status, t_final} record.
class StatusRecorder : public Recorder {
 public:
  explicit StatusRecorder(NdjsonWriter* out) : out_(out) {}
  void observe(const Simulator&) override {}
  void finish(const Simulator& sim) override;

 private:
  NdjsonWriter* out_;
};

nlohmann::json to_json(const RayRecord& rec, const RayCoords& ray);

}  // namespace kmswkg
