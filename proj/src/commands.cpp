#include "kmswkg/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>

#include "kmswkg/analysis.hpp"
#include "kmswkg/errors.hpp"
#include "kmswkg/ndjson.hpp"
#include "kmswkg/presets.hpp"
#include "kmswkg/profile_ode.hpp"
#include "kmswkg/recorders.hpp"
#include "kmswkg/simulator.hpp"

namespace kmswkg {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime;
  }
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json certificate_json(const KmsCertificate& c) {
  json j{{"kind", c.kind() == KmsCertificate::Kind::constant ? "constant" : "trigonometric"},
         {"J0", matrix_json(c.mean())}};
  if (c.order() > 0) {
    json cs = json::array(), sn = json::array();
    for (const auto& m : c.cos_terms()) cs.push_back(matrix_json(m));
    for (const auto& m : c.sin_terms()) sn.push_back(matrix_json(m));
    j["cos"] = cs;
    j["sin"] = sn;
  }
  const auto& v = c.verification;
  j["verification"] = {{"n_omega", v.n_omega},
                       {"n_y", v.n_y},
                       {"min_eigenvalue", v.min_eigenvalue},
                       {"min_margin", v.min_margin},
                       {"verified", v.verified}};
  return j;
}

std::vector<std::string> component_names(const SystemSpec& spec) {
  std::vector<std::string> names;
  for (int j = 0; j < spec.n_total(); ++j)
    names.push_back(spec.is_wave(j) ? "w" + std::to_string(j - spec.n_kg() + 1) : "v" + std::to_string(j + 1));
  return names;
}

}  // namespace

ExperimentConfig resolve_config(const CommandOptions& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) {
    c = load_config(o.config_path);
    if (!o.preset.empty()) {
      c.spec = SpecConfig{};
      c.spec.preset = o.preset;
    }
  } else if (!o.preset.empty()) {
    c.spec.preset = o.preset;
  } else {
    throw ConfigError("spec", "give --config or --preset");
  }
  if (!o.out.empty()) c.output = o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.threads) {
    c.threads = *o.threads;
  } else if (const char* env = std::getenv("KMSWKG_THREADS"); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1 || n > 1024) throw ConfigError("KMSWKG_THREADS", "expected a positive integer");
    c.threads = static_cast<int>(n);
  }
  validate_config(c);
  return c;
}

json to_json(const CheckReport& r) {
  json j{{"check", r.check},
         {"verdict", std::string(to_string(r.verdict))},
         {"min_value", r.min_value},
         {"min_eigenvalue", r.min_eigenvalue},
         {"n_omega", r.n_omega},
         {"n_y", r.n_y},
         {"tie_count", r.tie_count},
         {"notes", r.notes}};
  if (!r.surviving_terms.empty()) j["surviving_terms"] = r.surviving_terms;
  if (r.witness) {
    const auto& w = *r.witness;
    j["witness"] = {{"theta", w.theta}, {"y", w.y}, {"value", w.value}};
    if (w.component >= 0) j["witness"]["component"] = w.component + 1;
  }
  return j;
}

int run_check(const SystemSpec& spec, const KmsConfig& kms, std::uint64_t seed, json& report) {
  const auto null = check_null(spec, seed);
  report["null"] = to_json(null);
  if (null.verdict == Verdict::holds) {
    report["kms"] = {{"verdict", "holds"}, {"note", "implied by the null condition (J = identity)"}};
    report["exit_code"] = exit_ok;
    return exit_ok;
  }
  int code = exit_ok;
  if (!kms.j.empty()) {
    const int d = static_cast<int>(kms.j.size());
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) m(i, k) = kms.j[i][k];
    const auto cert = KmsCertificate::constant(m);
    const auto r = verify_kms(spec, cert, kms.n_omega, kms.n_y);
    json k = to_json(r);
    k["J"] = matrix_json(m);
    k["source"] = "supplied";
    report["kms"] = k;
    code = r.verdict == Verdict::holds ? exit_ok : exit_fails;
  } else {
    auto found = search_constant_kms(spec, kms.n_omega, kms.n_y);
    json k{{"source", "constant search"}, {"iterations", found.iterations}};
    if (!found.certificate && kms.trig_order > 0) {
      k["constant_note"] = found.note;
      found = search_trig_kms(spec, kms.trig_order, kms.n_omega, kms.n_y);
      k["source"] = "trigonometric search";
      k["iterations"] = found.iterations;
    }
    if (found.certificate) {
      k["verdict"] = "holds";
      k["certificate"] = certificate_json(*found.certificate);
      k["fine_check"] = to_json(found.fine_check);
    } else {
      k["verdict"] = "absent";
      k["note"] = found.note;
      code = exit_absent;
    }
    report["kms"] = k;
  }
  report["exit_code"] = code;
  return code;
}

int cmd_check(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto c = resolve_config(o);
    json report;
    report["spec"] = c.spec.inline_spec ? json("inline") : json(c.spec.preset);
    const int code = run_check(c.spec.resolve(), c.kms, c.seed, report);
    out << report.dump(2) << "\n";
    return code;
  });
}

int cmd_simulate(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto c = resolve_config(o);
    const SystemSpec spec = c.spec.resolve();
    const double R = c.data.support_radius;
    const GridConfig grid = c.grid.build(R);
    const fs::path dir = c.output;
    fs::create_directories(dir / "snapshots");
    {
      std::ofstream cfg(dir / "config.json", std::ios::binary);
      if (!cfg) throw std::runtime_error("cannot write " + (dir / "config.json").string());
      cfg << serialize_config(c);
    }
    NdjsonWriter norms(dir / "norms.ndjson"), rays(dir / "rays.ndjson"), scattering(dir / "scattering.ndjson"),
        status(dir / "status.ndjson");

    std::vector<std::unique_ptr<Recorder>> owned;
    bool have_snapshot = false;
    for (const auto& r : c.recorders) {
      TimeSchedule sched = r.schedule.build(grid.t_max);
      if (r.kind == "snapshot") {
        owned.push_back(std::make_unique<SnapshotRecorder>(dir / "snapshots", sched, component_names(spec)));
        have_snapshot = true;
      } else if (r.kind == "norms") {
        owned.push_back(std::make_unique<NormsRecorder>(sched, c.weights, &norms));
      } else if (r.kind == "ray") {
        std::vector<RayCoords> list;
        for (double th : r.theta)
          for (double s : r.sigma) list.push_back(RayCoords::make(s, Direction::from_angle(th)));
        owned.push_back(std::make_unique<RayRecorder>(list, sched, &rays));
      } else if (r.kind == "scattering") {
        owned.push_back(std::make_unique<ScatteringRecorder>(r.t_match, sched, &scattering));
      }
    }
    if (!have_snapshot)
      owned.push_back(std::make_unique<SnapshotRecorder>(dir / "snapshots", TimeSchedule({0.0, grid.t_max}),
                                                         component_names(spec)));
    owned.push_back(std::make_unique<StatusRecorder>(&status));
    std::vector<Recorder*> recs;
    for (auto& r : owned) recs.push_back(r.get());

    SimulatorOptions so;
    so.threads = c.threads;
    Simulator sim(spec, grid, c.data.build(), so);
    const RunStatus st = sim.run(recs);
    json summary{{"status", std::string(to_string(st))},
                 {"t_final", sim.state().t},
                 {"steps", sim.state().step},
                 {"output", dir.string()}};
    if (sim.blew_up()) summary["blowup_time"] = sim.blowup_time();
    out << summary.dump() << "\n";
    return exit_ok;
  });
}

int cmd_profile(const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto c = resolve_config(o);
    const SystemSpec spec = c.spec.resolve();
    if (spec.n_wave() == 0) throw ConfigError("spec", "profile integration needs a wave component");
    ProfileConfig p = c.profile.value_or(ProfileConfig{});
    if (!c.profile && static_cast<int>(p.w0.size()) != spec.n_wave()) p.w0.assign(spec.n_wave(), 1.0);

    std::vector<RayJob> jobs;
    for (double th : p.theta)
      for (double s : p.sigma) jobs.push_back(RayJob{RayCoords::make(s, Direction::from_angle(th)), p.w0, p.t_end});
    std::optional<KmsCertificate> cert;
    if (!c.kms.j.empty()) {
      const int d = static_cast<int>(c.kms.j.size());
      Eigen::MatrixXd m(d, d);
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) m(i, k) = c.kms.j[i][k];
      cert = KmsCertificate::constant(m);
    }
    StepControl ctl;
    ctl.rtol = p.rtol;
    ctl.atol = p.atol;
    const auto trajs = integrate_batch(spec, jobs, cert ? &*cert : nullptr, ctl, c.threads);

    const fs::path dir = c.output;
    fs::create_directories(dir);
    {
      std::ofstream cfg(dir / "config.json", std::ios::binary);
      cfg << serialize_config(c);
    }
    NdjsonWriter writer(dir / "trajectories.ndjson");
    const ReducedForm reduced = reduced_form(spec);
    json rays = json::array();
    bool any_oracle = false, all_pass = true;
    for (const auto& tr : trajs) {
      json rec{{"kind", "trajectory"},
               {"sigma", tr.ray.sigma},
               {"theta", tr.ray.direction.angle()},
               {"t0", tr.ray.t0},
               {"times", tr.times},
               {"W", tr.values},
               {"blew_up", tr.blew_up}};
      rec["blowup_time"] = tr.blew_up ? json(tr.blowup_time) : json(nullptr);
      if (!tr.lyapunov.empty()) rec["lyapunov"] = tr.lyapunov;
      writer.write(rec);

      json row{{"sigma", tr.ray.sigma}, {"theta", tr.ray.direction.angle()}, {"blew_up", tr.blew_up}};
      double lambda = 0.0;
      if (reduced.at(tr.ray.direction).is_scalar_cubic(&lambda)) {
        any_oracle = true;
        const double a0 = p.w0[0], t0 = tr.ray.t0;
        row["lambda"] = lambda;
        bool pass;
        if (lambda * a0 * a0 < 0.0) {
          const double pole = t0 * std::exp(-1.0 / (lambda * a0 * a0));
          row["pole_time"] = pole;
          if (pole <= p.t_end) {
            pass = tr.blew_up && tr.blowup_time <= pole * 1.01;
            row["blowup_time"] = tr.blew_up ? json(tr.blowup_time) : json(nullptr);
            row["pass"] = pass;
            all_pass = all_pass && pass;
            rays.push_back(row);
            continue;
          }
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < tr.times.size(); ++i) {
          const double exact = explicit_scalar_profile(lambda, a0, t0, tr.times[i]);
          const double e = exact != 0.0 ? std::abs(tr.values[i][0] - exact) / std::abs(exact)
                                        : std::abs(tr.values[i][0]);
          worst = std::isfinite(e) ? std::max(worst, e) : INFINITY;
        }
        pass = !tr.blew_up && worst <= 1e-6;
        row["max_relative_error"] = std::isfinite(worst) ? json(worst) : json(nullptr);
        row["pass"] = pass;
        all_pass = all_pass && pass;
      } else {
        row["oracle"] = "none";
      }
      if (!tr.lyapunov.empty()) {
        double worst_rise = 0.0;
        for (std::size_t i = 1; i < tr.lyapunov.size(); ++i)
          worst_rise = std::max(worst_rise, tr.lyapunov[i] - tr.lyapunov[i - 1]);
        const bool mono = worst_rise <= 1e-9;
        row["lyapunov_max_increase"] = worst_rise;
        row["lyapunov_nonincreasing"] = mono;
        all_pass = all_pass && mono;
        any_oracle = true;
      }
      rays.push_back(row);
    }
    const std::string verdict = !any_oracle ? "NO_ORACLE" : (all_pass ? "PASS" : "FAIL");
    json summary{{"schema", schema_version}, {"verdict", verdict}, {"tolerance", 1e-6}, {"rays", rays}};
    {
      std::ofstream s(dir / "summary.json", std::ios::binary);
      s << summary.dump(2) << "\n";
    }
    out << json{{"verdict", verdict}, {"output", dir.string()}}.dump() << "\n";
    return verdict == "FAIL" ? exit_fails : exit_ok;
  });
}

int cmd_analyze(const std::string& run_dir, const CommandOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto run = load_run(run_dir);
    json report = analyze_run(run);
    report["schema"] = schema_version;
    const fs::path target = o.out.empty() ? fs::path(run_dir) / "report.json" : fs::path(o.out);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::ofstream f(target, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + target.string());
    f << report.dump(2) << "\n";
    out << json{{"pass", report["pass"]}, {"report", target.string()}}.dump() << "\n";
    return report["pass"].get<bool>() ? exit_ok : exit_fails;
  });
}

int cmd_preset_list(std::ostream& out) {
  for (const auto& p : preset_catalog()) {
    out << p.name << "\n  " << p.doc << "\n";
    if (!p.defaults.empty()) {
      out << "  defaults:";
      for (const auto& [k, v] : p.defaults) out << " " << k << "=" << format_double(v);
      out << "\n";
    }
  }
  return exit_ok;
}

}  // namespace kmswkg
