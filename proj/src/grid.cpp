#include "kmswkg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kmswkg/errors.hpp"

namespace kmswkg {

std::string_view to_string(GridMode m) { return m == GridMode::planar2d ? "planar2d" : "radial"; }

GridMode parse_grid_mode(std::string_view s) {
  if (s == "planar2d") return GridMode::planar2d;
  if (s == "radial") return GridMode::radial;
  throw ConfigError("grid.mode", "unknown mode '" + std::string(s) + "' (expected planar2d or radial)");
}

GridConfig GridConfig::fitted(GridMode mode, double h, double cfl, double t_max, double support_radius) {
  GridConfig g;
  g.mode = mode;
  g.h = h;
  g.t_max = t_max;
  g.dt = cfl * h;
  if (t_max > 0.0) {
    const double steps = std::ceil(t_max / (cfl * h) - 1e-9);
    g.dt = t_max / steps;
  }
  g.extent = (std::ceil((t_max + support_radius) / h) + 5.0) * h;
  return g;
}

void GridConfig::validate(double support_radius, bool compact_support) const {
  if (!(h > 0.0)) throw ConfigError("grid.h", "spacing must be positive");
  if (!(dt > 0.0)) throw ConfigError("grid.dt", "time step must be positive");
  if (!(t_max >= 0.0)) throw ConfigError("grid.t_max", "must be nonnegative");
  const double limit = max_cfl(mode);
  if (dt / h > limit + 1e-12)
    throw ConfigError("grid.cfl", "dt/h = " + std::to_string(dt / h) + " exceeds " +
                                      std::to_string(limit) + " for mode " + std::string(to_string(mode)));
  if (compact_support && extent < t_max + support_radius + 4.0 * h)
    throw ConfigError("grid.extent", "domain radius " + std::to_string(extent) +
                                         " < t_max + R + 4h = " +
                                         std::to_string(t_max + support_radius + 4.0 * h) +
                                         "; the boundary would be causally reached");
}

Grid::Grid(const GridConfig& config) : mode_(config.mode), h_(config.h) {
  const int half = static_cast<int>(std::ceil(config.extent / config.h - 1e-9));
  if (mode_ == GridMode::radial) {
    n_ = half + 1;
    center_ = 0;
  } else {
    n_ = 2 * half + 1;
    center_ = half;
  }
  if (n_ < 3) throw ConfigError("grid.extent", "domain must span at least three nodes");
}

std::size_t Grid::size() const {
  return mode_ == GridMode::radial ? static_cast<std::size_t>(n_)
                                   : static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
}

double Grid::x1(std::size_t idx) const {
  if (mode_ == GridMode::radial) return static_cast<double>(idx) * h_;
  return (static_cast<double>(idx % n_) - center_) * h_;
}

double Grid::x2(std::size_t idx) const {
  if (mode_ == GridMode::radial) return 0.0;
  return (static_cast<double>(idx / n_) - center_) * h_;
}

double Grid::r(std::size_t idx) const { return std::hypot(x1(idx), x2(idx)); }

void spatial_gradient(const Grid& grid, const std::vector<double>& f, std::vector<double>& d1,
                      std::vector<double>& d2) {
  const int n = grid.n();
  const double inv2h = 0.5 / grid.h();
  d1.assign(grid.size(), 0.0);
  d2.assign(grid.size(), 0.0);
  if (grid.mode() == GridMode::radial) {
    for (int i = 1; i < n - 1; ++i) d1[i] = (f[i + 1] - f[i - 1]) * inv2h;
    return;
  }
  for (int j = 1; j < n - 1; ++j)
    for (int i = 1; i < n - 1; ++i) {
      const std::size_t k = grid.index(i, j);
      d1[k] = (f[k + 1] - f[k - 1]) * inv2h;
      d2[k] = (f[k + n] - f[k - n]) * inv2h;
    }
}

void spatial_hessian(const Grid& grid, const std::vector<double>& f, std::vector<double>& d11,
                     std::vector<double>& d12, std::vector<double>& d22) {
  const int n = grid.n();
  const double h = grid.h();
  const double ih2 = 1.0 / (h * h);
  d11.assign(grid.size(), 0.0);
  d12.assign(grid.size(), 0.0);
  d22.assign(grid.size(), 0.0);
  if (grid.mode() == GridMode::radial) {
    d11[0] = d22[0] = 2.0 * (f[1] - f[0]) * ih2;
    for (int i = 1; i < n - 1; ++i) {
      d11[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * ih2;
      d22[i] = (f[i + 1] - f[i - 1]) / (2.0 * h) / (i * h);
    }
    return;
  }
  for (int j = 1; j < n - 1; ++j)
    for (int i = 1; i < n - 1; ++i) {
      const std::size_t k = grid.index(i, j);
      d11[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) * ih2;
      d22[k] = (f[k + n] - 2.0 * f[k] + f[k - n]) * ih2;
      d12[k] = (f[k + n + 1] - f[k + n - 1] - f[k - n + 1] + f[k - n - 1]) * 0.25 * ih2;
    }
}

void laplacian(const Grid& grid, const std::vector<double>& f, std::vector<double>& out) {
  const int n = grid.n();
  const double h = grid.h();
  const double ih2 = 1.0 / (h * h);
  out.assign(grid.size(), 0.0);
  if (grid.mode() == GridMode::radial) {
    out[0] = 4.0 * (f[1] - f[0]) * ih2;
    for (int i = 1; i < n - 1; ++i)
      out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * ih2 + (f[i + 1] - f[i - 1]) / (2.0 * h * i * h);
    return;
  }
  for (int j = 1; j < n - 1; ++j)
    for (int i = 1; i < n - 1; ++i) {
      const std::size_t k = grid.index(i, j);
      out[k] = (f[k + 1] + f[k - 1] + f[k + n] + f[k - n] - 4.0 * f[k]) * ih2;
    }
}

std::vector<double> quadrature_weights(const Grid& grid) {
  const double h = grid.h();
  std::vector<double> w(grid.size(), h * h);
  if (grid.mode() == GridMode::radial) {
    w[0] = h * h / 8.0;
    for (int i = 1; i < grid.n(); ++i) w[i] = i * h * h;
  }
  return w;
}

double discrete_energy(const Grid& grid, const std::vector<double>& u, const std::vector<double>& ut,
                       double mass) {
  const int n = grid.n();
  const double h = grid.h();
  const auto w = quadrature_weights(grid);
  double e = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) e += w[k] * (ut[k] * ut[k] + mass * mass * u[k] * u[k]);
  if (grid.mode() == GridMode::radial) {
    for (int i = 0; i + 1 < n; ++i) {
      const double d = u[i + 1] - u[i];
      e += (i + 0.5) * h * h * (d / h) * (d / h);
    }
    return 2.0 * std::numbers::pi * e;
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i + 1 < n; ++i) {
      const double dx = u[grid.index(i + 1, j)] - u[grid.index(i, j)];
      const double dy = u[grid.index(j, i + 1)] - u[grid.index(j, i)];
      e += dx * dx + dy * dy;
    }
  return e;
}

double interpolate(const Grid& grid, const std::vector<double>& f, double x1, double x2) {
  const double h = grid.h();
  if (grid.mode() == GridMode::radial) {
    const double r = std::hypot(x1, x2);
    const double s = r / h;
    const int i = std::min(static_cast<int>(std::floor(s)), grid.n() - 2);
    if (i < 0) return f[0];
    const double a = s - i;
    return (1.0 - a) * f[i] + a * f[i + 1];
  }
  const double s1 = x1 / h + grid.center(), s2 = x2 / h + grid.center();
  const int i = std::clamp(static_cast<int>(std::floor(s1)), 0, grid.n() - 2);
  const int j = std::clamp(static_cast<int>(std::floor(s2)), 0, grid.n() - 2);
  const double a = s1 - i, b = s2 - j;
  return (1 - a) * (1 - b) * f[grid.index(i, j)] + a * (1 - b) * f[grid.index(i + 1, j)] +
         (1 - a) * b * f[grid.index(i, j + 1)] + a * b * f[grid.index(i + 1, j + 1)];
}

}  // namespace kmswkg
