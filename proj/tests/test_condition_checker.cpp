#include <doctest.h>

#include <cmath>
#include <random>

#include "kmswkg/condition_checker.hpp"
#include "kmswkg/presets.hpp"
#include "oracles.hpp"

using namespace kmswkg;

TEST_CASE("null condition on the example family") {
  CHECK(check_null(make_preset("example-null")).verdict == Verdict::holds);
  CHECK(check_null(make_preset("null-cubic")).verdict == Verdict::holds);

  const SystemSpec spec = make_preset("example-kms");
  const auto r = check_null(spec, 11);
  REQUIRE(r.verdict == Verdict::fails);
  REQUIRE(r.witness);
  // Witness is reproducible and really nonzero: F_red = omega_0^2 Y^3 = Y^3.
  const double y = r.witness->y.at(0);
  CHECK(reevaluate_witness(spec, *r.witness) == doctest::Approx(y * y * y));
  CHECK(std::abs(r.witness->value) > 1e-6);
  const auto again = check_null(spec, 11);
  CHECK(again.witness->theta == r.witness->theta);
  CHECK(again.witness->y == r.witness->y);
}

TEST_CASE("KMS with J = [1] on the example system") {
  const SystemSpec spec = make_preset("example-kms");
  const auto cert = KmsCertificate::constant(Eigen::MatrixXd::Identity(1, 1));
  const auto r = verify_kms(spec, cert, 64, 16);
  CHECK(r.verdict == Verdict::holds);
  CHECK(r.min_value >= -1e-12);
  // Y F_red = c omega_a^2 Y^4 vanishes for a = 1 along omega_1 = 0: still holds.
  const auto r1 = verify_kms(make_preset("example-kms", {{"a", 1.0}}), cert, 64, 16);
  CHECK(r1.verdict == Verdict::holds);
  CHECK(r1.min_value >= -1e-12);
}

TEST_CASE("KMS fails for the sign-flipped system") {
  const SystemSpec spec = make_preset("kms-violating");
  const auto cert = KmsCertificate::constant(Eigen::MatrixXd::Identity(1, 1));
  const auto r = verify_kms(spec, cert, 32, 8);
  CHECK(r.verdict == Verdict::fails);
  REQUIRE(r.witness);
  CHECK(reevaluate_witness(spec, *r.witness, &cert) < 0.0);
  CHECK(!search_constant_kms(spec, 32, 8).certificate);
}

TEST_CASE("non positive J is rejected") {
  Eigen::MatrixXd j(1, 1);
  j << -1.0;
  const auto r = verify_kms(make_preset("example-kms"), KmsCertificate::constant(j), 16, 8);
  CHECK(r.verdict != Verdict::holds);
}

TEST_CASE("constant search finds a certificate for the example system") {
  const auto res = search_constant_kms(make_preset("example-kms"), 32, 8);
  REQUIRE(res.certificate);
  CHECK(res.certificate->verification.verified);
  CHECK(res.certificate->mean()(0, 0) > 0.0);
}

TEST_CASE("two-wave system needs a non diagonal J") {
  // F_red = (Y0^3, Y1^3 + 3 Y0^3): Y^T F = Y0^4 + Y1^4 + 3 Y1 Y0^3, which is
  // indefinite for J = I but nonnegative for J = diag(1, 1/10).
  CubicTensor t;
  const Factor a{0, Deriv::t}, b{1, Deriv::t};
  t.add(0, {a, a, a}, -1.0);
  t.add(1, {b, b, b}, -1.0);
  t.add(1, {a, a, a}, -3.0);
  const SystemSpec spec(2, 0, {0.0, 0.0}, t);
  const auto id = verify_kms(spec, KmsCertificate::constant(Eigen::MatrixXd::Identity(2, 2)), 16, 24);
  CHECK(id.verdict == Verdict::fails);
  Eigen::MatrixXd j(2, 2);
  j << 1.0, 0.0, 0.0, 0.1;
  CHECK(verify_kms(spec, KmsCertificate::constant(j), 16, 24).verdict == Verdict::holds);
  const auto found = search_constant_kms(spec, 16, 24);
  REQUIRE(found.certificate);
  CHECK(verify_kms(spec, *found.certificate, 32, 48).verdict == Verdict::holds);
}

TEST_CASE("null-satisfying systems satisfy KMS with identity J") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 50; ++i) {
    const SystemSpec spec = oracle::random_null_spec(rng);
    CHECK(check_null(spec).verdict == Verdict::holds);
    const auto cert = KmsCertificate::constant(Eigen::MatrixXd::Identity(spec.n_wave(), spec.n_wave()));
    const auto r = verify_kms(spec, cert, 24, 8);
    CHECK(r.verdict == Verdict::holds);
    CHECK(std::abs(r.min_value) <= 1e-12);
  }
}

TEST_CASE("sphere grid sizes") {
  CHECK(sphere_grid(1, 8).size() == 2);
  CHECK(sphere_grid(2, 8).size() == 8);
  CHECK(sphere_grid(3, 8).size() == 64);
  for (const auto& p : sphere_grid(3, 6)) {
    double n = 0;
    for (double x : p) n += x * x;
    CHECK(n == doctest::Approx(1.0));
  }
}

TEST_CASE("normal form reduces omega_1 squared") {
  NormalForm f(1);
  f.add(2, 0, {0}, 1.0);
  f.add(0, 2, {0}, 1.0);
  f.add(0, 0, {0}, -1.0);
  f.prune();
  CHECK(f.is_zero());
}
