#include <doctest.h>

#include <cmath>

#include "kmswkg/presets.hpp"
#include "kmswkg/profile_ode.hpp"
#include "oracles.hpp"

using namespace kmswkg;

namespace {

SystemSpec scalar_cubic(double lambda) {
  // □w = -lambda (dt w)^3 has F_red = -lambda (-Y)^3 = lambda Y^3.
  return SystemSpec(1, 0, {0.0}, oracle::dt_cubed(0, -lambda));
}

}  // namespace

TEST_CASE("t0 of sigma") {
  CHECK(t0_of_sigma(0.0) == 2.0);
  CHECK(t0_of_sigma(-5.0) == 10.0);
  CHECK(t0_of_sigma(3.0) == 2.0);
}

TEST_CASE("scalar cubic profile matches the closed form") {
  const SystemSpec spec = scalar_cubic(1.0);
  const RayCoords ray = RayCoords::make(0.0, Direction::from_angle(0.0));
  for (double a0 : {0.1, 1.0, 3.0}) {
    StepControl ctl;
    ctl.rtol = 1e-11;
    ctl.atol = 1e-13;
    const std::vector<double> w0{a0};
    const auto tr = integrate_profile(spec, ray, w0, 2000.0, {}, nullptr, ctl);
    REQUIRE(!tr.blew_up);
    CHECK(tr.times.front() == 2.0);
    CHECK(tr.times.back() == doctest::Approx(2000.0));
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const double exact = oracle::cubic_profile(1.0, a0, 2.0, tr.times[i]);
      worst = std::max(worst, std::abs(tr.values[i][0] - exact) / std::abs(exact));
    }
    CHECK(worst <= 1e-6);
    CHECK(explicit_cubic_profile(a0, 2.0, 700.0) ==
          doctest::Approx(oracle::cubic_profile(1.0, a0, 2.0, 700.0)).epsilon(1e-14));
  }
}

TEST_CASE("log-time integration agrees with t integration") {
  const SystemSpec spec = scalar_cubic(1.0);
  const RayCoords ray = RayCoords::make(-3.0, Direction::from_angle(1.0));
  StepControl ctl;
  ctl.log_time = true;
  const auto tr = integrate_profile(spec, ray, std::vector<double>{1.5}, 1e6, {}, nullptr, ctl);
  CHECK(tr.values.back()[0] == doctest::Approx(oracle::cubic_profile(1.0, 1.5, 6.0, 1e6)).epsilon(1e-7));
}

TEST_CASE("sign-flipped profile blows up before the pole") {
  const SystemSpec spec = scalar_cubic(-1.0);
  const RayCoords ray = RayCoords::make(0.0, Direction::from_angle(0.0));
  const double a0 = 1.0;
  const double pole = oracle::pole_time(-1.0, a0, 2.0);
  const auto tr = integrate_profile(spec, ray, std::vector<double>{a0}, 2000.0);
  REQUIRE(tr.blew_up);
  CHECK(tr.blowup_time <= pole * 1.01);
  CHECK(tr.blowup_time > 2.0);
  CHECK(std::isnan(explicit_scalar_profile(-1.0, a0, 2.0, pole * 1.1)));
}

TEST_CASE("Lyapunov function is nonincreasing for KMS presets") {
  for (const char* name : {"example-kms", "example-null", "null-cubic"}) {
    const SystemSpec spec = make_preset(name);
    const auto cert = KmsCertificate::constant(Eigen::MatrixXd::Identity(spec.n_wave(), spec.n_wave()));
    for (double theta : {0.0, 0.9}) {
      const auto ray = RayCoords::make(-1.0, Direction::from_angle(theta));
      const auto tr = integrate_profile(spec, ray, std::vector<double>(spec.n_wave(), 2.0), 2000.0, {}, &cert);
      REQUIRE(tr.lyapunov.size() == tr.times.size());
      for (std::size_t i = 1; i < tr.lyapunov.size(); ++i) CHECK(tr.lyapunov[i] <= tr.lyapunov[i - 1] + 1e-9);
    }
  }
}

TEST_CASE("sampled and callback forcing") {
  const SystemSpec spec = SystemSpec(1, 0, {0.0}, CubicTensor{});
  const RayCoords ray = RayCoords::make(0.0, Direction::from_angle(0.0));
  // dW/dt = 1/t^2 from t = 2: W = W0 + 1/2 - 1/t.
  const auto cb = Forcing::callback([](double t) { return std::vector<double>{1.0 / (t * t)}; });
  const auto tr = integrate_profile(spec, ray, std::vector<double>{0.0}, 10.0, cb);
  CHECK(tr.values.back()[0] == doctest::Approx(0.5 - 0.1).epsilon(1e-9));
  // constant sampled forcing of 0.25 over [2, 10]
  const auto s = Forcing::sampled({0.0, 100.0}, {{0.25}, {0.25}});
  const auto tr2 = integrate_profile(spec, ray, std::vector<double>{1.0}, 10.0, s);
  CHECK(tr2.values.back()[0] == doctest::Approx(1.0 + 0.25 * 8.0).epsilon(1e-10));
  const auto bad = Forcing::callback([](double) { return std::vector<double>{NAN}; });
  CHECK_THROWS_AS(integrate_profile(spec, ray, std::vector<double>{0.0}, 10.0, bad), ArgumentError);
}

TEST_CASE("batch integration matches serial and ignores thread count") {
  const SystemSpec spec = make_preset("example-kms");
  std::vector<RayJob> jobs;
  for (int i = 0; i < 6; ++i)
    jobs.push_back(RayJob{RayCoords::make(-2.0 + i, Direction::from_angle(0.3 * i)), {0.5 + 0.2 * i}, 500.0});
  const auto one = integrate_batch(spec, jobs, nullptr, {}, 1);
  const auto three = integrate_batch(spec, jobs, nullptr, {}, 3);
  REQUIRE(one.size() == jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    CHECK(one[i].values == three[i].values);
    const auto serial = integrate_profile(spec, jobs[i].ray, jobs[i].w0, jobs[i].t_end);
    CHECK(serial.values == one[i].values);
  }
}

TEST_CASE("bad arguments") {
  const SystemSpec spec = scalar_cubic(1.0);
  const RayCoords ray = RayCoords::make(0.0, Direction::from_angle(0.0));
  CHECK_THROWS_AS(integrate_profile(spec, ray, std::vector<double>{1.0, 2.0}, 10.0), ArgumentError);
  CHECK_THROWS_AS(integrate_profile(spec, ray, std::vector<double>{1.0}, 1.0), ArgumentError);
}
