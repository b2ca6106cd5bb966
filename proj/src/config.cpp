#include "kmswkg/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "kmswkg/errors.hpp"
#include "kmswkg/ndjson.hpp"
#include "kmswkg/profile_ode.hpp"

namespace kmswkg {

using nlohmann::json;

namespace {

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected a table");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  require_object(j, path);
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(at(path, k), "unknown key");
}

double number(const json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(at(path, key), "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(at(path, key), "must be finite");
  return x;
}

int integer(const json& j, const std::string& key, const std::string& path, int fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(at(path, key), "expected an integer");
  return v.get<int>();
}

bool boolean(const json& j, const std::string& key, const std::string& path, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(at(path, key), "expected true or false");
  return j.at(key).get<bool>();
}

std::string text(const json& j, const std::string& key, const std::string& path, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(at(path, key), "expected a string");
  return j.at(key).get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& key, const std::string& path,
                            std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(at(path, key), "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(at(at(path, key), i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

void put(json& j, const char* key, double x) {
  if (!std::isnan(x)) j[key] = x;
}

std::vector<Factor> parse_factors(const json& arr, const std::string& path, int n_total) {
  if (!arr.is_array()) throw ConfigError(path, "expected an array of [component, derivative] pairs");
  std::vector<Factor> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& f = arr[i];
    const std::string p = at(path, i);
    if (!f.is_array() || f.size() != 2 || !f[0].is_number_integer() || !f[1].is_string())
      throw ConfigError(p, "expected [component, \"t\"|\"x1\"|\"x2\"|\"none\"]");
    const int c = f[0].get<int>();
    if (c < 1 || c > n_total) throw ConfigError(p, "component index must lie in 1.." + std::to_string(n_total));
    try {
      out.push_back(Factor{c - 1, parse_deriv(f[1].get<std::string>())});
    } catch (const ArgumentError& e) {
      throw ConfigError(p, e.what());
    }
  }
  return out;
}

json factors_to_json(const std::vector<Factor>& fs) {
  json arr = json::array();
  for (const auto& f : fs) arr.push_back({f.component + 1, std::string(to_string(f.deriv))});
  return arr;
}

BumpConfig parse_bump(const json& j, const std::string& path) {
  check_keys(j, path, {"shape", "amplitude", "radius", "power", "center", "samples", "sample_h"});
  BumpConfig b;
  try {
    b.shape = parse_bump_shape(text(j, "shape", path, "zero"));
  } catch (const ConfigError& e) {
    throw ConfigError(at(path, "shape"), e.what());
  }
  b.amplitude = number(j, "amplitude", path, 1.0);
  b.radius = number(j, "radius", path, 1.0);
  b.power = integer(j, "power", path, 4);
  const auto c = numbers(j, "center", path, {0.0, 0.0});
  if (c.size() != 2) throw ConfigError(at(path, "center"), "expected [x1, x2]");
  b.center1 = c[0];
  b.center2 = c[1];
  b.samples = numbers(j, "samples", path, {});
  b.sample_h = number(j, "sample_h", path, 0.0);
  if ((b.shape == Bump::Shape::poly || b.shape == Bump::Shape::smooth) && !(b.radius > 0.0))
    throw ConfigError(at(path, "radius"), "must be positive");
  if (b.shape == Bump::Shape::poly && b.power < 1) throw ConfigError(at(path, "power"), "must be >= 1");
  if (b.shape == Bump::Shape::sampled && (b.samples.size() < 2 || !(b.sample_h > 0.0)))
    throw ConfigError(path, "sampled bumps need at least two samples and sample_h > 0");
  return b;
}

json bump_to_json(const BumpConfig& b) {
  json j{{"shape", std::string(to_string(b.shape))}};
  if (b.shape == Bump::Shape::zero) return j;
  j["amplitude"] = b.amplitude;
  if (b.center1 != 0.0 || b.center2 != 0.0) j["center"] = {b.center1, b.center2};
  if (b.shape == Bump::Shape::sampled) {
    j["samples"] = b.samples;
    j["sample_h"] = b.sample_h;
  } else {
    j["radius"] = b.radius;
    if (b.shape == Bump::Shape::poly) j["power"] = b.power;
  }
  return j;
}

ScheduleConfig parse_schedule(const json& j, const std::string& path) {
  ScheduleConfig s;
  s.times = numbers(j, "times", path, {});
  s.every = number(j, "every", path, 0.0);
  s.start = number(j, "start", path, 0.0);
  s.end = number(j, "end", path, unset);
  s.log_count = integer(j, "log_count", path, 0);
  if (s.every < 0.0) throw ConfigError(at(path, "every"), "must be positive");
  if (s.log_count == 1 || s.log_count < 0) throw ConfigError(at(path, "log_count"), "must be >= 2");
  if (s.log_count >= 2 && !(s.start > 0.0)) throw ConfigError(at(path, "start"), "log schedules need start > 0");
  const int kinds = !s.times.empty() + (s.every > 0.0) + (s.log_count >= 2);
  if (kinds > 1) throw ConfigError(path, "give only one of times, every, log_count");
  return s;
}

void schedule_to_json(json& j, const ScheduleConfig& s) {
  if (!s.times.empty()) j["times"] = s.times;
  if (s.every > 0.0) j["every"] = s.every;
  if (s.every > 0.0 || s.log_count >= 2) j["start"] = s.start;
  put(j, "end", s.end);
  if (s.log_count >= 2) j["log_count"] = s.log_count;
}

SpecConfig parse_spec(const json& j) {
  SpecConfig s;
  if (j.is_string()) {
    s.preset = j.get<std::string>();
    find_preset(s.preset);
    return s;
  }
  require_object(j, "spec");
  if (j.contains("preset")) {
    check_keys(j, "spec", {"preset", "params"});
    s.preset = text(j, "preset", "spec", "");
    find_preset(s.preset);
    if (j.contains("params")) {
      require_object(j["params"], "spec.params");
      for (const auto& [k, v] : j["params"].items()) {
        if (!v.is_number()) throw ConfigError("spec.params." + k, "expected a number");
        s.params[k] = v.get<double>();
      }
    }
    return s;
  }
  s.inline_spec = spec_from_json(j, "spec");
  return s;
}

}  // namespace

SystemSpec spec_from_json(const json& j, const std::string& path) {
  check_keys(j, path, {"n_total", "n_kg", "masses", "cubic", "higher_order"});
  const int n = integer(j, "n_total", path, 0);
  const int nk = integer(j, "n_kg", path, 0);
  if (n < 1) throw ConfigError(at(path, "n_total"), "must be >= 1");
  const auto masses = numbers(j, "masses", path, {});
  CubicTensor cubic;
  if (j.contains("cubic")) {
    const auto& arr = j["cubic"];
    if (!arr.is_array()) throw ConfigError(at(path, "cubic"), "expected an array of terms");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = at(at(path, "cubic"), i);
      check_keys(arr[i], p, {"j", "factors", "coeff"});
      const int out = integer(arr[i], "j", p, 0);
      if (out < 1 || out > n) throw ConfigError(at(p, "j"), "output index must lie in 1.." + std::to_string(n));
      if (!arr[i].contains("factors")) throw ConfigError(at(p, "factors"), "missing");
      const auto fs = parse_factors(arr[i]["factors"], at(p, "factors"), n);
      if (fs.size() != 3) throw ConfigError(at(p, "factors"), "cubic terms have exactly three factors");
      cubic.add(out - 1, {fs[0], fs[1], fs[2]}, number(arr[i], "coeff", p, 0.0));
    }
  }
  std::vector<HigherOrderTerm> higher;
  if (j.contains("higher_order")) {
    const auto& arr = j["higher_order"];
    if (!arr.is_array()) throw ConfigError(at(path, "higher_order"), "expected an array of terms");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = at(at(path, "higher_order"), i);
      check_keys(arr[i], p, {"j", "factors", "coeff"});
      const int out = integer(arr[i], "j", p, 0);
      if (out < 1 || out > n) throw ConfigError(at(p, "j"), "output index must lie in 1.." + std::to_string(n));
      if (!arr[i].contains("factors")) throw ConfigError(at(p, "factors"), "missing");
      higher.push_back(HigherOrderTerm{out - 1, parse_factors(arr[i]["factors"], at(p, "factors"), n),
                                       number(arr[i], "coeff", p, 0.0)});
    }
  }
  try {
    return SystemSpec(n, nk, masses, std::move(cubic), std::move(higher));
  } catch (const ArgumentError& e) {
    throw ConfigError(path, e.what());
  }
}

json spec_to_json(const SystemSpec& spec) {
  json cubic = json::array();
  for (const auto& [key, c] : spec.cubic().entries())
    cubic.push_back({{"j", key.output + 1},
                     {"factors", factors_to_json({key.factors.begin(), key.factors.end()})},
                     {"coeff", c}});
  json j{{"n_total", spec.n_total()}, {"n_kg", spec.n_kg()}, {"masses", spec.masses()}, {"cubic", cubic}};
  if (!spec.higher_order().empty()) {
    json higher = json::array();
    for (const auto& t : spec.higher_order())
      higher.push_back({{"j", t.output + 1}, {"factors", factors_to_json(t.factors)}, {"coeff", t.coeff}});
    j["higher_order"] = higher;
  }
  return j;
}

SystemSpec SpecConfig::resolve() const {
  if (inline_spec) return *inline_spec;
  if (preset.empty()) throw ConfigError("spec", "missing preset name or inline system");
  return make_preset(preset, params);
}

GridConfig GridSettings::build(double support_radius) const {
  GridConfig g;
  if (std::isnan(dt)) {
    if (!(h > 0.0)) throw ConfigError("grid.h", "spacing must be positive");
    if (!(cfl > 0.0)) throw ConfigError("grid.cfl", "must be positive");
    if (!(t_max >= 0.0)) throw ConfigError("grid.t_max", "must be nonnegative");
    g = GridConfig::fitted(mode, h, cfl, t_max, support_radius);
  } else {
    g.mode = mode;
    g.h = h;
    g.dt = dt;
    g.t_max = t_max;
    g.extent = (std::ceil((t_max + support_radius) / h) + 5.0) * h;
  }
  if (!std::isnan(extent)) g.extent = extent;
  g.active_pad = active_pad;
  return g;
}

bool GridSettings::operator==(const GridSettings& o) const {
  return mode == o.mode && same(h, o.h) && same(cfl, o.cfl) && same(dt, o.dt) && same(t_max, o.t_max) &&
         same(extent, o.extent) && active_pad == o.active_pad;
}

Bump BumpConfig::build() const {
  Bump b;
  b.shape = shape;
  b.amplitude = amplitude;
  b.radius = radius;
  b.power = power;
  b.center1 = center1;
  b.center2 = center2;
  b.samples = samples;
  b.sample_h = sample_h;
  return b;
}

InitialData DataConfig::build() const {
  InitialData d;
  d.epsilon = epsilon;
  d.support_radius = support_radius;
  d.compact = compact;
  for (const auto& b : f) d.f.push_back(b.build());
  for (const auto& b : g) d.g.push_back(b.build());
  return d;
}

TimeSchedule ScheduleConfig::build(double t_max) const {
  const double stop = std::isnan(end) ? t_max : end;
  if (!times.empty()) return TimeSchedule(times);
  if (every > 0.0) return TimeSchedule::every(every, start, stop);
  if (log_count >= 2) return TimeSchedule::logspaced(start, stop, log_count);
  return TimeSchedule();
}

bool ScheduleConfig::operator==(const ScheduleConfig& o) const {
  return times == o.times && same(every, o.every) && same(start, o.start) && same(end, o.end) &&
         log_count == o.log_count;
}

bool AnalysisConfig::operator==(const AnalysisConfig& o) const {
  return ray_t1 == o.ray_t1 && same(ray_factor, o.ray_factor) && same(ray_sigma_min, o.ray_sigma_min) &&
         same(ray_sigma_max, o.ray_sigma_max) && same(ray_tolerance, o.ray_tolerance) && fits == o.fits &&
         same(fit_t_a, o.fit_t_a) && same(fit_t_b, o.fit_t_b) && same(scattering_tolerance, o.scattering_tolerance);
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return spec == o.spec && grid == o.grid && data == o.data && weights.rho == o.weights.rho &&
         weights.kappa == o.weights.kappa && weights.s == o.weights.s && recorders == o.recorders &&
         profile == o.profile && analysis == o.analysis && kms == o.kms && seed == o.seed && output == o.output &&
         threads == o.threads;
}

void validate_config(const ExperimentConfig& c) {
  const SystemSpec spec = c.spec.resolve();
  const int n = spec.n_total();
  c.weights.validate();
  const double R = c.data.support_radius;
  if (!(R > 0.0)) throw ConfigError("data.support_radius", "must be positive");
  if (!(c.data.epsilon >= 0.0)) throw ConfigError("data.epsilon", "must be nonnegative");
  auto check_bumps = [&](const std::vector<BumpConfig>& list, const char* key) {
    if (!list.empty() && static_cast<int>(list.size()) != n)
      throw ConfigError(std::string("data.") + key,
                        "needs " + std::to_string(n) + " entries (one per component), got " +
                            std::to_string(list.size()));
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& b = list[i];
      const std::string p = std::string("data.") + key + "[" + std::to_string(i) + "]";
      if (c.grid.mode == GridMode::radial && (b.center1 != 0.0 || b.center2 != 0.0))
        throw ConfigError(p + ".center", "radial mode needs centered data");
      const double reach = std::hypot(b.center1, b.center2) +
                           (b.shape == Bump::Shape::sampled ? b.sample_h * (b.samples.size() - 1) : b.radius);
      if (c.data.compact && b.shape != Bump::Shape::zero && reach > R * (1.0 + 1e-12))
        throw ConfigError(p, "bump reaches |x| = " + std::to_string(reach) + " beyond the support radius R = " +
                                 std::to_string(R));
    }
  };
  check_bumps(c.data.f, "f");
  check_bumps(c.data.g, "g");
  c.grid.build(R).validate(R, c.data.compact);
  if (c.grid.mode == GridMode::radial) check_rotation_invariance(spec);
  for (std::size_t i = 0; i < c.recorders.size(); ++i) {
    const auto& r = c.recorders[i];
    const std::string p = "recorders[" + std::to_string(i) + "]";
    if (r.kind != "snapshot" && r.kind != "norms" && r.kind != "ray" && r.kind != "scattering")
      throw ConfigError(p + ".kind", "unknown recorder kind '" + r.kind + "' (snapshot, norms, ray, scattering)");
    if (r.kind == "ray") {
      if (r.sigma.empty()) throw ConfigError(p + ".sigma", "ray recorders need at least one σ");
      for (double s : r.sigma)
        if (s > R) throw ConfigError(p + ".sigma", "constraint σ ≤ R violated (σ = " + std::to_string(s) + ")");
      if (spec.n_wave() == 0) throw ConfigError(p, "ray recorders need a wave component");
    }
    if (r.kind == "scattering" && !(r.t_match >= 0.0)) throw ConfigError(p + ".t_match", "must be >= 0");
  }
  if (c.profile) {
    const auto& pr = *c.profile;
    if (static_cast<int>(pr.w0.size()) != spec.n_wave())
      throw ConfigError("profile.w0", "needs one entry per wave component (" + std::to_string(spec.n_wave()) + ")");
    if (pr.sigma.empty() || pr.theta.empty()) throw ConfigError("profile", "sigma and theta must be nonempty");
    for (double s : pr.sigma)
      if (!(pr.t_end > t0_of_sigma(s))) throw ConfigError("profile.t_end", "must exceed t0(σ) for every ray");
    if (!(pr.rtol > 0.0) || !(pr.atol > 0.0)) throw ConfigError("profile", "tolerances must be positive");
  }
  if (!(c.analysis.ray_factor > 1.0)) throw ConfigError("analysis.ray_factor", "must exceed 1");
  if (!(c.analysis.ray_tolerance > 0.0)) throw ConfigError("analysis.ray_tolerance", "must be positive");
  if (!c.kms.j.empty()) {
    const std::size_t d = c.kms.j.size();
    if (static_cast<int>(d) != spec.n_wave()) throw ConfigError("kms.J", "must be N1 x N1");
    for (const auto& row : c.kms.j)
      if (row.size() != d) throw ConfigError("kms.J", "must be square");
  }
  if (c.kms.n_omega < 8) throw ConfigError("kms.n_omega", "must be >= 8");
  if (c.kms.n_y < 1) throw ConfigError("kms.n_y", "must be >= 1");
  if (c.kms.trig_order < 0) throw ConfigError("kms.trig_order", "must be >= 0");
  if (c.threads < 1) throw ConfigError("threads", "must be >= 1");
}

ExperimentConfig parse_config(const std::string& source) {
  json root;
  try {
    root = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
  check_keys(root, "", {"schema", "spec", "grid", "data", "weights", "recorders", "profile", "analysis", "kms",
                        "seed", "output", "threads"});
  if (root.contains("schema") && root["schema"] != schema_version)
    throw ConfigError("schema", "unsupported config schema " + root["schema"].dump());
  ExperimentConfig c;
  if (!root.contains("spec")) throw ConfigError("spec", "missing");
  c.spec = parse_spec(root["spec"]);

  if (root.contains("grid")) {
    const auto& g = root["grid"];
    check_keys(g, "grid", {"mode", "h", "cfl", "dt", "t_max", "extent", "active_pad"});
    c.grid.mode = parse_grid_mode(text(g, "mode", "grid", "radial"));
    c.grid.h = number(g, "h", "grid", c.grid.h);
    c.grid.cfl = number(g, "cfl", "grid", c.grid.cfl);
    c.grid.dt = number(g, "dt", "grid", unset);
    c.grid.t_max = number(g, "t_max", "grid", c.grid.t_max);
    c.grid.extent = number(g, "extent", "grid", unset);
    c.grid.active_pad = integer(g, "active_pad", "grid", c.grid.active_pad);
  }
  if (root.contains("data")) {
    const auto& d = root["data"];
    check_keys(d, "data", {"epsilon", "support_radius", "compact", "f", "g"});
    c.data.epsilon = number(d, "epsilon", "data", c.data.epsilon);
    c.data.support_radius = number(d, "support_radius", "data", c.data.support_radius);
    c.data.compact = boolean(d, "compact", "data", true);
    for (const char* key : {"f", "g"}) {
      if (!d.contains(key)) continue;
      if (!d[key].is_array()) throw ConfigError(std::string("data.") + key, "expected an array of bumps");
      auto& list = key[0] == 'f' ? c.data.f : c.data.g;
      for (std::size_t i = 0; i < d[key].size(); ++i)
        list.push_back(parse_bump(d[key][i], at(std::string("data.") + key, i)));
    }
  }
  if (root.contains("weights")) {
    const auto& w = root["weights"];
    check_keys(w, "weights", {"rho", "kappa", "s"});
    c.weights.rho = number(w, "rho", "weights", c.weights.rho);
    c.weights.kappa = number(w, "kappa", "weights", c.weights.kappa);
    c.weights.s = integer(w, "s", "weights", c.weights.s);
  }
  if (root.contains("recorders")) {
    const auto& arr = root["recorders"];
    if (!arr.is_array()) throw ConfigError("recorders", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = at(std::string("recorders"), i);
      check_keys(arr[i], p, {"kind", "times", "every", "start", "end", "log_count", "sigma", "theta", "t_match"});
      RecorderConfig r;
      r.kind = text(arr[i], "kind", p, "");
      r.schedule = parse_schedule(arr[i], p);
      r.sigma = numbers(arr[i], "sigma", p, {});
      r.theta = numbers(arr[i], "theta", p, {0.0});
      r.t_match = number(arr[i], "t_match", p, 50.0);
      c.recorders.push_back(std::move(r));
    }
  }
  if (root.contains("profile")) {
    const auto& p = root["profile"];
    check_keys(p, "profile", {"sigma", "theta", "w0", "t_end", "rtol", "atol"});
    ProfileConfig pr;
    pr.sigma = numbers(p, "sigma", "profile", pr.sigma);
    pr.theta = numbers(p, "theta", "profile", pr.theta);
    pr.w0 = numbers(p, "w0", "profile", pr.w0);
    pr.t_end = number(p, "t_end", "profile", pr.t_end);
    pr.rtol = number(p, "rtol", "profile", pr.rtol);
    pr.atol = number(p, "atol", "profile", pr.atol);
    c.profile = pr;
  }
  if (root.contains("analysis")) {
    const auto& a = root["analysis"];
    check_keys(a, "analysis", {"ray_t1", "ray_factor", "ray_sigma_min", "ray_sigma_max", "ray_tolerance", "fits",
                               "fit_t_a", "fit_t_b", "scattering_tolerance"});
    auto& an = c.analysis;
    an.ray_t1 = numbers(a, "ray_t1", "analysis", an.ray_t1);
    an.ray_factor = number(a, "ray_factor", "analysis", an.ray_factor);
    an.ray_sigma_min = number(a, "ray_sigma_min", "analysis", an.ray_sigma_min);
    an.ray_sigma_max = number(a, "ray_sigma_max", "analysis", unset);
    an.ray_tolerance = number(a, "ray_tolerance", "analysis", an.ray_tolerance);
    an.fit_t_a = number(a, "fit_t_a", "analysis", an.fit_t_a);
    an.fit_t_b = number(a, "fit_t_b", "analysis", an.fit_t_b);
    an.scattering_tolerance = number(a, "scattering_tolerance", "analysis", an.scattering_tolerance);
    if (a.contains("fits")) {
      if (!a["fits"].is_array()) throw ConfigError("analysis.fits", "expected an array");
      for (std::size_t i = 0; i < a["fits"].size(); ++i) {
        const auto& f = a["fits"][i];
        const std::string p = at(std::string("analysis.fits"), i);
        check_keys(f, p, {"label", "source", "model", "t_a", "t_b", "target", "tolerance"});
        FitConfig fc;
        fc.label = text(f, "label", p, "fit" + std::to_string(i));
        fc.source = text(f, "source", p, "");
        if (fc.source != "ray" && fc.source.rfind("norms:", 0) != 0)
          throw ConfigError(at(p, "source"), "expected \"ray\" or \"norms:<name>\"");
        const std::string model = text(f, "model", p, "log_power");
        if (model != "power" && model != "log_power")
          throw ConfigError(at(p, "model"), "expected power or log_power");
        fc.model = model == "power" ? FitModel::power : FitModel::log_power;
        fc.t_a = number(f, "t_a", p, fc.t_a);
        fc.t_b = number(f, "t_b", p, fc.t_b);
        fc.target = number(f, "target", p, 0.0);
        fc.tolerance = number(f, "tolerance", p, 0.0);
        an.fits.push_back(fc);
      }
    }
  }
  if (root.contains("kms")) {
    const auto& k = root["kms"];
    check_keys(k, "kms", {"J", "n_omega", "n_y", "trig_order"});
    if (k.contains("J")) {
      if (!k["J"].is_array()) throw ConfigError("kms.J", "expected a matrix");
      for (std::size_t i = 0; i < k["J"].size(); ++i) {
        const auto& row = k["J"][i];
        if (!row.is_array()) throw ConfigError("kms.J", "expected rows of numbers");
        std::vector<double> r;
        for (const auto& x : row) {
          if (!x.is_number()) throw ConfigError("kms.J", "expected numbers");
          r.push_back(x.get<double>());
        }
        c.kms.j.push_back(std::move(r));
      }
    }
    c.kms.n_omega = integer(k, "n_omega", "kms", c.kms.n_omega);
    c.kms.n_y = integer(k, "n_y", "kms", c.kms.n_y);
    c.kms.trig_order = integer(k, "trig_order", "kms", c.kms.trig_order);
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
    c.seed = root["seed"].get<std::uint64_t>();
  }
  c.output = text(root, "output", "", c.output);
  c.threads = integer(root, "threads", "", c.threads);
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json config_to_json(const ExperimentConfig& c) {
  json root;
  root["schema"] = schema_version;
  if (c.spec.inline_spec) {
    root["spec"] = spec_to_json(*c.spec.inline_spec);
  } else {
    root["spec"] = {{"preset", c.spec.preset}};
    if (!c.spec.params.empty()) root["spec"]["params"] = c.spec.params;
  }
  json g{{"mode", std::string(to_string(c.grid.mode))},
         {"h", c.grid.h},
         {"cfl", c.grid.cfl},
         {"t_max", c.grid.t_max},
         {"active_pad", c.grid.active_pad}};
  put(g, "dt", c.grid.dt);
  put(g, "extent", c.grid.extent);
  root["grid"] = g;
  json d{{"epsilon", c.data.epsilon}, {"support_radius", c.data.support_radius}, {"compact", c.data.compact}};
  for (const char* key : {"f", "g"}) {
    const auto& list = key[0] == 'f' ? c.data.f : c.data.g;
    if (list.empty()) continue;
    json arr = json::array();
    for (const auto& b : list) arr.push_back(bump_to_json(b));
    d[key] = arr;
  }
  root["data"] = d;
  root["weights"] = {{"rho", c.weights.rho}, {"kappa", c.weights.kappa}, {"s", c.weights.s}};
  json recs = json::array();
  for (const auto& r : c.recorders) {
    json j{{"kind", r.kind}};
    schedule_to_json(j, r.schedule);
    if (r.kind == "ray") {
      j["sigma"] = r.sigma;
      j["theta"] = r.theta;
    }
    if (r.kind == "scattering") j["t_match"] = r.t_match;
    recs.push_back(j);
  }
  root["recorders"] = recs;
  if (c.profile) {
    const auto& p = *c.profile;
    root["profile"] = {{"sigma", p.sigma}, {"theta", p.theta}, {"w0", p.w0},
                       {"t_end", p.t_end}, {"rtol", p.rtol},   {"atol", p.atol}};
  }
  const auto& a = c.analysis;
  json an{{"ray_t1", a.ray_t1},
          {"ray_factor", a.ray_factor},
          {"ray_sigma_min", a.ray_sigma_min},
          {"ray_tolerance", a.ray_tolerance},
          {"fit_t_a", a.fit_t_a},
          {"fit_t_b", a.fit_t_b},
          {"scattering_tolerance", a.scattering_tolerance}};
  put(an, "ray_sigma_max", a.ray_sigma_max);
  if (!a.fits.empty()) {
    json fits = json::array();
    for (const auto& f : a.fits)
      fits.push_back({{"label", f.label},
                      {"source", f.source},
                      {"model", std::string(to_string(f.model))},
                      {"t_a", f.t_a},
                      {"t_b", f.t_b},
                      {"target", f.target},
                      {"tolerance", f.tolerance}});
    an["fits"] = fits;
  }
  root["analysis"] = an;
  json k{{"n_omega", c.kms.n_omega}, {"n_y", c.kms.n_y}, {"trig_order", c.kms.trig_order}};
  if (!c.kms.j.empty()) k["J"] = c.kms.j;
  root["kms"] = k;
  root["seed"] = c.seed;
  root["output"] = c.output;
  root["threads"] = c.threads;
  return root;
}

std::string serialize_config(const ExperimentConfig& c) { return config_to_json(c).dump(2) + "\n"; }

}  // namespace kmswkg
