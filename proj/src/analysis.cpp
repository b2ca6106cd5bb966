#include "kmswkg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kmswkg/errors.hpp"
#include "kmswkg/ndjson.hpp"
#include "kmswkg/profile_ode.hpp"

namespace kmswkg {

using nlohmann::json;

namespace {

const RayRecord* record_near(const RaySample& s, double t, double slack) {
  const RayRecord* best = nullptr;
  for (const auto& r : s.records)
    if (!best || std::abs(r.t - t) < std::abs(best->t - t)) best = &r;
  if (!best || std::abs(best->t - t) > slack * t) return nullptr;
  return best;
}

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

RayConsistencyReport ray_consistency(const SystemSpec& spec, const std::vector<RaySample>& samples,
                                     const RayConsistencyOptions& o) {
  RayConsistencyReport rep;
  if (!(o.factor > 1.0)) throw ArgumentError("ray consistency factor must exceed 1");
  StepControl ctl;
  ctl.rtol = o.rtol;
  ctl.atol = o.atol;
  for (double t1 : o.t1) {
    const double t2 = o.factor * t1;
    std::vector<RayConsistencyRow> rows;
    double scale = 0.0;
    for (const auto& s : samples) {
      if (s.ray.sigma < o.sigma_min - 1e-12 || s.ray.sigma > o.sigma_max + 1e-12) continue;
      const RayRecord* a = record_near(s, t1, o.time_slack);
      const RayRecord* b = record_near(s, t2, o.time_slack);
      if (!a || !b) {
        rep.notices.push_back("ray sigma = " + format_double(s.ray.sigma) + ", theta = " +
                              format_double(s.ray.direction.angle()) + ": no records near t = " +
                              format_double(a ? t2 : t1));
        continue;
      }
      RayConsistencyRow row;
      row.sigma = s.ray.sigma;
      row.theta = s.ray.direction.angle();
      row.t1 = a->t;
      row.t2 = b->t;
      row.w1 = a->w;
      row.extracted = b->w;
      ctl.t_start = a->t;
      const auto traj = integrate_profile(spec, s.ray, a->w, b->t, Forcing::none(), nullptr, ctl);
      if (traj.blew_up || traj.values.empty()) {
        row.predicted.assign(a->w.size(), std::nan(""));
      } else {
        row.predicted = traj.values.back();
      }
      scale = std::max(scale, sup_abs(b->w));
      rows.push_back(std::move(row));
    }
    rep.scales.push_back(scale);
    for (auto& row : rows) {
      double e = 0.0;
      for (std::size_t l = 0; l < row.predicted.size(); ++l) {
        const double d = std::abs(row.predicted[l] - row.extracted[l]);
        e = std::isfinite(d) ? std::max(e, d) : std::numeric_limits<double>::infinity();
      }
      row.error = scale > 0.0 ? e / scale : (e == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      row.pass = row.error <= o.tolerance;
      rep.max_error = std::max(rep.max_error, row.error);
      rep.rows.push_back(std::move(row));
    }
  }
  rep.pass = !rep.rows.empty() && std::all_of(rep.rows.begin(), rep.rows.end(), [](const auto& r) { return r.pass; });
  if (rep.rows.empty()) rep.notices.push_back("no ray pairs available");
  return rep;
}

NormSeries ray_amplitude_series(const std::vector<RaySample>& samples, double t_a, double t_b, double* sigma,
                                double* theta) {
  auto amplitude = [](const RayRecord& r) {
    double m = 0.0;
    for (const auto& d : r.sqrt_r_dw) m = std::max(m, std::abs(d[0]));
    return m;
  };
  const RaySample* best = nullptr;
  double best_mean = -1.0;
  for (const auto& s : samples) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : s.records)
      if (r.t >= t_a && r.t <= t_b) {
        sum += amplitude(r);
        ++n;
      }
    if (n > 0 && sum / n > best_mean) {
      best_mean = sum / n;
      best = &s;
    }
  }
  NormSeries out;
  out.name = "ray_amplitude";
  if (!best) return out;
  if (sigma) *sigma = best->ray.sigma;
  if (theta) *theta = best->ray.direction.angle();
  for (const auto& r : best->records) out.push(r.t, amplitude(r));
  return out;
}

FitCheck check_fit(const FitConfig& config, const NormSeries& series) {
  FitCheck c;
  c.config = config;
  try {
    c.fit = fit_decay_exponent(series, config.t_a, config.t_b, config.model);
    c.pass = std::abs(c.fit->slope - config.target) <= config.tolerance;
  } catch (const std::exception& e) {
    c.note = e.what();
  }
  return c;
}

std::vector<FitConfig> default_fits(const AnalysisConfig& a, const WeightSpec& w) {
  FitConfig energy;
  energy.label = "wave_energy";
  energy.source = "norms:energy_wave";
  energy.model = FitModel::log_power;
  energy.t_a = a.fit_t_a;
  energy.t_b = a.fit_t_b;
  energy.target = -(1.0 - w.mu()) / 4.0;
  energy.tolerance = 0.4 * std::abs(energy.target);
  FitConfig ray = energy;
  ray.label = "ray_amplitude";
  ray.source = "ray";
  ray.target = -0.5;
  ray.tolerance = 0.2;
  return {energy, ray};
}

MonotoneCheck check_nonincreasing(const NormSeries& series, const std::vector<double>& times, double tolerance) {
  MonotoneCheck m;
  if (series.times.empty()) return m;
  for (double t : times) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < series.times.size(); ++i)
      if (std::abs(series.times[i] - t) < std::abs(series.times[best] - t)) best = i;
    m.times.push_back(series.times[best]);
    m.values.push_back(series.values[best]);
  }
  m.pass = m.values.size() >= 2;
  for (std::size_t i = 1; i < m.values.size(); ++i) {
    const double prev = m.values[i - 1];
    const double ratio = prev > 0.0 ? m.values[i] / prev : (m.values[i] > 0.0 ? INFINITY : 0.0);
    m.worst_ratio = std::max(m.worst_ratio, ratio);
    if (!(m.values[i] <= (1.0 + tolerance) * prev)) m.pass = false;
  }
  return m;
}

NormSeries norm_series(const std::vector<NormBundle>& bundles, const std::string& name) {
  NormSeries s;
  s.name = name;
  for (const auto& b : bundles) {
    auto it = b.values.find(name);
    if (it != b.values.end()) s.push(b.t, it->second);
  }
  return s;
}

std::vector<RaySample> group_ray_records(const std::vector<json>& records) {
  std::vector<RaySample> out;
  std::map<std::pair<double, double>, std::size_t> index;
  for (const auto& j : records) {
    if (j.value("kind", "") != "ray") continue;
    const double sigma = j.at("sigma").get<double>(), theta = j.at("theta").get<double>();
    auto [it, fresh] = index.emplace(std::make_pair(sigma, theta), out.size());
    if (fresh) out.push_back(RaySample{RayCoords::make(sigma, Direction::from_angle(theta)), {}, {}});
    RayRecord r;
    r.t = j.at("t").get<double>();
    r.r = j.at("r").get<double>();
    r.w = j.at("W").get<std::vector<double>>();
    for (const auto& d : j.at("sqrt_r_dw")) r.sqrt_r_dw.push_back({d[0].get<double>(), d[1].get<double>(), d[2].get<double>()});
    r.bracket = j.at("bracket").get<std::vector<double>>();
    for (const auto& h : j.at("H")) r.h.push_back(h.is_null() ? std::nan("") : h.get<double>());
    out[it->second].records.push_back(std::move(r));
  }
  return out;
}

RunArtifacts load_run(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("run directory " + dir.string() + " does not exist");
  RunArtifacts run;
  run.config = load_config((dir / "config.json").string());
  auto read = [&](const char* name) {
    const fs::path p = dir / name;
    return fs::exists(p) ? read_ndjson(p) : std::vector<json>{};
  };
  const auto status = read("status.ndjson");
  if (status.empty()) throw std::runtime_error("run directory " + dir.string() + " has no status record");
  run.status = status.back();
  for (const auto& j : read("norms.ndjson")) {
    NormBundle b;
    b.t = j.at("t").get<double>();
    for (const auto& [k, v] : j.at("values").items()) b.values[k] = v.is_null() ? std::nan("") : v.get<double>();
    if (j.contains("notes")) b.notes = j["notes"].get<std::vector<std::string>>();
    run.norms.push_back(std::move(b));
  }
  run.rays = group_ray_records(read("rays.ndjson"));
  run.scattering.name = "scattering_deficit";
  for (const auto& j : read("scattering.ndjson")) {
    run.scattering.push(j.at("t").get<double>(), j.at("deficit").get<double>());
    run.t_match = j.at("t_match").get<double>();
  }
  return run;
}

json analyze_run(const RunArtifacts& run) {
  const auto& cfg = run.config;
  const SystemSpec spec = cfg.spec.resolve();
  const auto& an = cfg.analysis;
  json report;
  bool all = true;

  report["status"] = run.status;
  const bool completed = run.status.value("status", "") == "completed";
  all = all && completed;

  json rc;
  if (run.rays.empty()) {
    rc = {{"pass", nullptr}, {"notices", {"no ray records"}}};
  } else {
    RayConsistencyOptions o;
    o.t1 = an.ray_t1;
    o.factor = an.ray_factor;
    o.sigma_min = an.ray_sigma_min;
    o.sigma_max = std::isnan(an.ray_sigma_max) ? cfg.data.support_radius - 1.0 : an.ray_sigma_max;
    o.tolerance = an.ray_tolerance;
    const auto r = ray_consistency(spec, run.rays, o);
    json rows = json::array();
    for (const auto& row : r.rows)
      rows.push_back({{"sigma", row.sigma},
                      {"theta", row.theta},
                      {"t1", row.t1},
                      {"t2", row.t2},
                      {"W_t1", row.w1},
                      {"W_extracted", row.extracted},
                      {"W_predicted", row.predicted},
                      {"error", number_or_null(row.error)},
                      {"pass", row.pass}});
    rc = {{"factor", o.factor},         {"sigma_min", o.sigma_min}, {"sigma_max", o.sigma_max},
          {"tolerance", o.tolerance},   {"t1", o.t1},               {"scales", r.scales},
          {"max_error", number_or_null(r.max_error)}, {"rows", rows}, {"pass", r.pass},
          {"notices", r.notices}};
    all = all && r.pass;
  }
  report["ray_consistency"] = rc;

  json fits = json::array();
  const auto configs = an.fits.empty() ? default_fits(an, cfg.weights) : an.fits;
  for (const auto& fc : configs) {
    NormSeries series;
    json extra;
    if (fc.source == "ray") {
      double sigma = 0.0, theta = 0.0;
      series = ray_amplitude_series(run.rays, fc.t_a, fc.t_b, &sigma, &theta);
      extra = {{"sigma", sigma}, {"theta", theta}};
    } else {
      series = norm_series(run.norms, fc.source.substr(6));
    }
    const auto c = check_fit(fc, series);
    json f{{"label", fc.label},   {"source", fc.source},       {"model", std::string(to_string(fc.model))},
           {"t_a", fc.t_a},       {"t_b", fc.t_b},             {"target", fc.target},
           {"tolerance", fc.tolerance}, {"pass", c.pass}};
    if (!extra.is_null()) f["ray"] = extra;
    if (c.fit) {
      f["slope"] = c.fit->slope;
      f["std_error"] = c.fit->std_error;
      f["intercept"] = c.fit->intercept;
      f["n"] = c.fit->n;
    } else {
      f["error"] = c.note;
    }
    all = all && c.pass;
    fits.push_back(f);
  }
  report["decay_fits"] = fits;
  report["derivative_order"] = {{"s", cfg.weights.s},
                                {"note", "weighted norms use derivative order s in place of the analytic order"}};

  if (run.scattering.times.empty()) {
    report["scattering"] = {{"pass", nullptr}, {"notices", {"no scattering records"}}};
  } else {
    std::vector<double> targets;
    for (double t = 2.0 * run.t_match; targets.size() < 3 && t <= run.scattering.times.back() * (1.0 + 1e-12); t *= 2.0)
      targets.push_back(t);
    const auto m = check_nonincreasing(run.scattering, targets, an.scattering_tolerance);
    report["scattering"] = {{"t_match", run.t_match},   {"times", m.times},
                            {"deficits", m.values},     {"tolerance", an.scattering_tolerance},
                            {"worst_ratio", m.worst_ratio}, {"pass", m.pass}};
    all = all && m.pass;
  }
  report["pass"] = all;
  return report;
}

}  // namespace kmswkg
