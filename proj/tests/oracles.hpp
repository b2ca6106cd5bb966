#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's numerics.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kmswkg/nonlinearity.hpp"

namespace oracle {

/// Solution of dA/dt = -lambda A^3 / (2t): A^{-2}(t) = A0^{-2} + lambda ln(t/t0).
inline double cubic_profile(double lambda, double a0, double t0, double t) {
  const double inv = 1.0 / (a0 * a0) + lambda * std::log(t / t0);
  if (inv <= 0.0) return NAN;
  return std::copysign(1.0 / std::sqrt(inv), a0);
}

inline double pole_time(double lambda, double a0, double t0) { return t0 * std::exp(-1.0 / (lambda * a0 * a0)); }

/// Ordinary least-squares slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Observed order from errors at h, h/2, h/4 (least squares on log2).
inline double richardson_order(const std::vector<double>& errors) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    x.push_back(-static_cast<double>(i) * std::log(2.0));
    y.push_back(std::log(errors[i]));
  }
  return ols_slope(x, y);
}

inline double gaussian(double x, double width) { return std::exp(-x * x / (width * width)); }
inline double gaussian_d(double x, double width) { return -2.0 * x / (width * width) * gaussian(x, width); }

/// F = c0 * (dt w)^3 on one wave component, written out factor by factor.
inline kmswkg::CubicTensor dt_cubed(int component, double c0) {
  using kmswkg::Deriv;
  using kmswkg::Factor;
  kmswkg::CubicTensor t;
  t.add(component, {Factor{component, Deriv::t}, Factor{component, Deriv::t}, Factor{component, Deriv::t}}, c0);
  return t;
}

/// Adds c * (d_a phi)(Q0(psi, chi)) to output j, Q0 = dt dt - d1 d1 - d2 d2.
inline void add_q0_term(kmswkg::CubicTensor& t, int j, double c, int phi, kmswkg::Deriv a, int psi, int chi) {
  using kmswkg::Deriv;
  using kmswkg::Factor;
  t.add(j, {Factor{phi, a}, Factor{psi, Deriv::t}, Factor{chi, Deriv::t}}, c);
  t.add(j, {Factor{phi, a}, Factor{psi, Deriv::x1}, Factor{chi, Deriv::x1}}, -c);
  t.add(j, {Factor{phi, a}, Factor{psi, Deriv::x2}, Factor{chi, Deriv::x2}}, -c);
}

/// Random system whose wave outputs are sums of Q0-type cubic terms in the
/// wave components; Klein-Gordon outputs get arbitrary cubic terms.
inline kmswkg::SystemSpec random_null_spec(std::mt19937_64& rng) {
  using kmswkg::Deriv;
  std::uniform_int_distribution<int> pick_n(1, 3), pick_k(0, 2), pick_d(0, 3);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  const int n_wave = pick_n(rng);
  const int n_kg = pick_k(rng);
  const int n = n_wave + n_kg;
  std::vector<double> masses(n, 0.0);
  for (int j = 0; j < n_kg; ++j) masses[j] = 0.5 + j;
  kmswkg::CubicTensor t;
  std::uniform_int_distribution<int> pick_wave(n_kg, n - 1), pick_any(0, n - 1);
  for (int j = n_kg; j < n; ++j) {
    const int terms = 1 + pick_k(rng);
    for (int q = 0; q < terms; ++q)
      add_q0_term(t, j, coeff(rng), pick_wave(rng), static_cast<Deriv>(1 + pick_k(rng)), pick_wave(rng),
                  pick_wave(rng));
  }
  auto factor = [&] {
    const int c = pick_any(rng);
    // undifferentiated factors only for Klein-Gordon components
    const int d = c < n_kg ? pick_d(rng) : 1 + pick_k(rng);
    return kmswkg::Factor{c, static_cast<Deriv>(d)};
  };
  for (int j = 0; j < n_kg; ++j) t.add(j, {factor(), factor(), factor()}, coeff(rng));
  return kmswkg::SystemSpec(n, n_kg, masses, t);
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("kmswkg_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
