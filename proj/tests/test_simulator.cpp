#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kmswkg/presets.hpp"
#include "kmswkg/recorders.hpp"
#include "kmswkg/simulator.hpp"
#include "oracles.hpp"

using namespace kmswkg;

namespace {

SystemSpec linear_kg(double m) { return SystemSpec(1, 1, {m}, CubicTensor{}); }
SystemSpec linear_wave() { return SystemSpec(1, 0, {0.0}, CubicTensor{}); }

InitialData bump_data(int n, double eps, double R, int which = -1) {
  InitialData d = InitialData::zero(n, R);
  d.epsilon = eps;
  for (int j = 0; j < n; ++j)
    if (which < 0 || which == j) d.f[j] = Bump::poly(1.0, R, 4);
  return d;
}

double sup_diff_on_coarse(const Grid& coarse, const std::vector<double>& a, const Grid& fine,
                          const std::vector<double>& b) {
  // radial grids with fine.h = coarse.h / 2
  double m = 0.0;
  for (int i = 0; i < coarse.n() && 2 * i < fine.n(); ++i) m = std::max(m, std::abs(a[i] - b[2 * i]));
  return m;
}

}  // namespace

TEST_CASE("grid config invariants") {
  GridConfig g = GridConfig::fitted(GridMode::radial, 0.1, 0.4, 20.0, 2.0);
  CHECK(g.cfl() <= 0.4 + 1e-12);
  CHECK(std::abs(std::round(g.t_max / g.dt) * g.dt - g.t_max) < 1e-12);
  CHECK(g.extent >= g.t_max + 2.0 + 4 * g.h);
  CHECK_NOTHROW(g.validate(2.0));
  GridConfig p{GridMode::planar2d, 0.1, 0.04, 10.0, 30.0};
  CHECK_THROWS_AS(p.validate(1.0), ConfigError);  // CFL 0.4 > 0.35
  p.dt = 0.03;
  p.extent = 10.5;
  CHECK_THROWS_AS(p.validate(1.0), ConfigError);  // domain too small for t_max + R
  CHECK_THROWS_AS(parse_grid_mode("polar"), ConfigError);
}

TEST_CASE("init samples data") {
  const SystemSpec spec = linear_wave();
  const GridConfig g = GridConfig::fitted(GridMode::radial, 0.05, 0.4, 1.0, 1.0);
  const FieldState zero = init(spec, g, InitialData::zero(1, 1.0));
  CHECK(zero.sup_abs(0) == 0.0);
  const FieldState s = init(spec, g, bump_data(1, 0.1, 1.0));
  CHECK(s.sup_abs(0) == doctest::Approx(0.1));
  CHECK(s.u[0][0] == doctest::Approx(0.1));
  CHECK(s.t == 0.0);

  InitialData wide = bump_data(1, 1.0, 1.0);
  wide.f[0] = Bump::poly(1.0, 2.0);
  CHECK_THROWS_AS(init(spec, g, wide), ConfigError);

  InitialData off = bump_data(1, 1.0, 1.0);
  off.f[0].center1 = 0.5;
  CHECK_THROWS_AS(init(spec, g, off), ConfigError);
}

TEST_CASE("radial mode rejects systems that are not rotation invariant") {
  CHECK_THROWS_AS(check_rotation_invariance(make_preset("example-kms", {{"a", 1.0}})), ConfigError);
  CHECK_NOTHROW(check_rotation_invariance(make_preset("example-kms")));
  const GridConfig g = GridConfig::fitted(GridMode::radial, 0.1, 0.4, 1.0, 1.0);
  CHECK_THROWS_AS(Simulator(make_preset("example-kms", {{"a", 2.0}}), g, bump_data(2, 0.1, 1.0)), ConfigError);
}

TEST_CASE("uniform Klein-Gordon data oscillate as A cos(mt)") {
  const double m = 1.3, A = 0.7;
  GridConfig g{GridMode::radial, 0.1, 0.04, 10.0, 40.0, -1};
  InitialData d = InitialData::zero(1, 1.0);
  d.compact = false;
  d.f[0].shape = Bump::Shape::sampled;
  d.f[0].samples = {A, A};
  d.f[0].sample_h = 100.0;
  Simulator sim(linear_kg(m), g, d);
  double worst = 0.0;
  while (sim.state().t < g.t_max - 1e-9) {
    REQUIRE(sim.step());
    worst = std::max(worst, std::abs(sim.state().u[0][0] - A * std::cos(m * sim.state().t)));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("linear energy is conserved") {
  for (GridMode mode : {GridMode::radial, GridMode::planar2d}) {
    const double t_max = mode == GridMode::radial ? 50.0 : 10.0;
    const GridConfig g = GridConfig::fitted(mode, 0.1, 0.3, t_max, 2.0);
    for (double m : {0.0, 1.0}) {
      const SystemSpec spec = m > 0 ? linear_kg(m) : linear_wave();
      InitialData d = bump_data(1, 1.0, 2.0);
      d.g[0] = Bump::smooth(0.5, 2.0);
      Simulator sim(spec, g, d);
      const double e0 = discrete_energy(sim.grid(), sim.state().u[0], sim.state().ut[0], m);
      double drift = 0.0;
      while (sim.state().t < t_max - 1e-9) {
        REQUIRE(sim.step());
        const double e = discrete_energy(sim.grid(), sim.state().u[0], sim.state().ut[0], m);
        drift = std::max(drift, std::abs(e - e0) / e0);
      }
      CHECK(drift <= 1e-4);
    }
  }
}

TEST_CASE("planar plane wave translates with second order accuracy") {
  const double width = 1.0, t_end = 2.0;
  std::vector<double> errors;
  for (double h : {0.1, 0.05, 0.025}) {
    GridConfig g{GridMode::planar2d, h, 0.25 * h, t_end, 8.0, -1};
    InitialData d = InitialData::zero(1, 100.0);
    d.compact = false;
    d.f[0].shape = Bump::Shape::custom;
    d.f[0].custom = [&](double x1, double) { return oracle::gaussian(x1, width); };
    d.g[0].shape = Bump::Shape::custom;
    d.g[0].custom = [&](double x1, double) { return -oracle::gaussian_d(x1, width); };
    Simulator sim(linear_wave(), g, d);
    sim.run();
    const Grid& grid = sim.grid();
    double err = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (std::abs(grid.x1(k)) > 4.0 || std::abs(grid.x2(k)) > 2.0) continue;
      err = std::max(err, std::abs(sim.state().u[0][k] - oracle::gaussian(grid.x1(k) - sim.state().t, width)));
    }
    errors.push_back(err);
  }
  const double p = oracle::richardson_order(errors);
  CHECK(p >= 1.8);
  CHECK(p <= 2.2);
}

TEST_CASE("numerical support stays within the light cone margin") {
  const SystemSpec spec = make_preset("example-kms");
  const double R = 2.0;
  const GridConfig g = GridConfig::fitted(GridMode::radial, 0.1, 0.4, 30.0, R);
  InitialData d = bump_data(2, 0.5, R);
  Simulator sim(spec, g, d);
  // RK4 spreads roundoff-level values ahead of the front; allow c h per step.
  const double c_scheme = 0.1;
  while (sim.state().t < g.t_max - 1e-9) {
    REQUIRE(sim.step());
    const double bound = sim.state().t + R + 5 * g.h + c_scheme * g.h * static_cast<double>(sim.state().step);
    CHECK(numerical_support(sim.grid(), sim.state(), 1e-10) <= bound);
  }
}

TEST_CASE("radial and planar runs agree") {
  const SystemSpec spec = make_preset("example-kms");
  const double R = 2.0, T = 10.0;
  InitialData d = bump_data(2, 0.5, R);
  const GridConfig gr = GridConfig::fitted(GridMode::radial, 0.05, 0.3, T, R);
  const GridConfig gp = GridConfig::fitted(GridMode::planar2d, 0.05, 0.3, T, R);
  Simulator rad(spec, gr, d), pla(spec, gp, d);
  rad.run();
  pla.run();
  for (int j = 0; j < 2; ++j) {
    double diff = 0.0, ref = 0.0;
    for (int i = 0; i < rad.grid().n(); ++i) {
      const double r = rad.grid().r(i);
      if (r < 1.0 || r > 8.0) continue;
      const double a = rad.state().u[j][i];
      for (double th : {0.0, 0.7, 2.0}) {
        const double b = interpolate(pla.grid(), pla.state().u[j], r * std::cos(th), r * std::sin(th));
        diff = std::max(diff, std::abs(a - b));
      }
      ref = std::max(ref, std::abs(a));
    }
    REQUIRE(ref > 0.0);
    CHECK(diff / ref <= 0.03);
  }
}

TEST_CASE("nonlinear grid refinement is second order") {
  const SystemSpec spec = make_preset("example-kms");
  const double R = 3.0, T = 20.0;
  InitialData d = InitialData::zero(2, R);
  d.epsilon = 0.5;
  d.f[0] = Bump::poly(1.0, R, 6);
  d.f[1] = Bump::poly(2.0, R, 6);
  std::vector<FieldState> states;
  std::vector<Grid> grids;
  for (double h : {0.1, 0.05, 0.025}) {
    const GridConfig g = GridConfig::fitted(GridMode::radial, h, 0.4, T, R);
    Simulator sim(spec, g, d);
    sim.run();
    REQUIRE(sim.status() == RunStatus::completed);
    states.push_back(sim.state());
    grids.push_back(sim.grid());
  }
  for (int j = 0; j < 2; ++j) {
    const double d1 = sup_diff_on_coarse(grids[0], states[0].u[j], grids[1], states[1].u[j]);
    const double d2 = sup_diff_on_coarse(grids[1], states[1].u[j], grids[2], states[2].u[j]);
    const double factor = d1 / d2;
    CHECK(factor >= 3.4);
    CHECK(factor <= 4.6);
  }
}

TEST_CASE("t_max = 0 writes the initial snapshot only") {
  const auto dir = oracle::scratch("snap0");
  const GridConfig g = GridConfig::fitted(GridMode::radial, 0.1, 0.4, 0.0, 1.0);
  SnapshotRecorder snap(dir, TimeSchedule({0.0}), {"w"});
  const auto res = run(linear_wave(), g, bump_data(1, 0.1, 1.0), {&snap});
  CHECK(res.status == RunStatus::completed);
  CHECK(res.steps == 0);
  CHECK(res.t_final == 0.0);
  CHECK(snap.files().size() == 1);
  CHECK(std::filesystem::exists(dir / "snapshot_0.json"));
}

TEST_CASE("blow-up keeps the last good state") {
  // □w = +(dt w)^3 with large data.
  const SystemSpec spec = SystemSpec(1, 0, {0.0}, oracle::dt_cubed(0, 1.0));
  const GridConfig g = GridConfig::fitted(GridMode::radial, 0.1, 0.4, 5.0, 1.0);
  InitialData d = InitialData::zero(1, 1.0);
  d.epsilon = 1.0;
  d.g[0] = Bump::poly(10.0, 1.0);
  Simulator sim(spec, g, d);
  CHECK(sim.run() == RunStatus::blowup);
  CHECK(sim.blew_up());
  CHECK(sim.state().all_finite());
  CHECK(sim.blowup_time() == doctest::Approx(sim.state().t + sim.dt()));
  CHECK_THROWS(step(spec, g, sim.state()));
}

TEST_CASE("free step matches the simulator step") {
  const SystemSpec spec = make_preset("example-kms");
  GridConfig g = GridConfig::fitted(GridMode::radial, 0.1, 0.4, 1.0, 1.0);
  g.active_pad = -1;
  const InitialData d = bump_data(2, 0.5, 1.0);
  Simulator sim(spec, g, d);
  const FieldState s0 = sim.state();
  sim.step();
  const FieldState s1 = step(spec, g, s0);
  CHECK(s1.u == sim.state().u);
  CHECK(s1.ut == sim.state().ut);
  CHECK(s1.t == sim.state().t);
}

TEST_CASE("active window does not change the result") {
  const SystemSpec spec = make_preset("example-kms");
  GridConfig g = GridConfig::fitted(GridMode::radial, 0.1, 0.4, 15.0, 1.0);
  const InitialData d = bump_data(2, 0.5, 1.0);
  Simulator windowed(spec, g, d);
  g.active_pad = -1;
  Simulator full(spec, g, d);
  windowed.run();
  full.run();
  double diff = 0.0;
  for (int j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < full.grid().size(); ++k)
      diff = std::max(diff, std::abs(windowed.state().u[j][k] - full.state().u[j][k]));
  CHECK(diff <= 1e-12 * std::max(1.0, full.state().sup_abs(1)));
}

TEST_CASE("threads give identical states") {
  const SystemSpec spec = make_preset("example-kms");
  const GridConfig g = GridConfig::fitted(GridMode::planar2d, 0.1, 0.3, 3.0, 1.0);
  const InitialData d = bump_data(2, 0.5, 1.0);
  SimulatorOptions two;
  two.threads = 2;
  Simulator a(spec, g, d), b(spec, g, d, two);
  a.run();
  b.run();
  CHECK(a.state().u == b.state().u);
}

TEST_CASE("time schedules fire at the nearest step") {
  TimeSchedule s({0.0, 0.25, 1.0});
  CHECK(s.due(0.0, 0.1));
  CHECK(!s.due(0.1, 0.1));
  CHECK(!s.due(0.15, 0.1));
  CHECK(s.due(0.25, 0.1));
  CHECK(s.peek(1.0, 0.1));
  CHECK(s.due(1.0, 0.1));
  CHECK(s.exhausted());
  const auto e = TimeSchedule::every(10.0, 0.0, 30.0);
  CHECK(e.targets() == std::vector<double>{0.0, 10.0, 20.0, 30.0});
  const auto l = TimeSchedule::logspaced(1.0, 100.0, 3);
  CHECK(l.targets()[1] == doctest::Approx(10.0));
}
