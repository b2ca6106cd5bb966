#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

namespace kmswkg {

enum class GridMode { planar2d, radial };
std::string_view to_string(GridMode m);
GridMode parse_grid_mode(std::string_view s);

struct GridConfig {
  GridMode mode = GridMode::radial;
  double h = 0.05;
  double dt = 0.02;
  double t_max = 0.0;
  /// Domain radius: r_max in radial mode, half-width of the square in planar2d.
  double extent = 0.0;
  /// Cells beyond t + R that are updated each step; negative updates the whole grid.
  int active_pad = 32;

  double cfl() const { return dt / h; }
  static double max_cfl(GridMode mode) { return mode == GridMode::planar2d ? 0.35 : 0.45; }

  /// Smallest domain that the signal from B_R cannot reach by t_max, with
  /// dt adjusted downward so that t_max is a whole number of steps.
  static GridConfig fitted(GridMode mode, double h, double cfl, double t_max, double support_radius);

  /// Throws ConfigError on CFL or domain-size violations.
  void validate(double support_radius, bool compact_support = true) const;
};

/// Node layout. Radial: r_i = i h for i < n. Planar: n × n nodes with
/// x = (i - c) h, c = (n - 1)/2, stored row-major with x₂ as the row index.
class Grid {
 public:
  Grid() = default;
  explicit Grid(const GridConfig& config);

  GridMode mode() const { return mode_; }
  double h() const { return h_; }
  int n() const { return n_; }
  int center() const { return center_; }
  std::size_t size() const;

  double x1(std::size_t idx) const;
  double x2(std::size_t idx) const;
  double r(std::size_t idx) const;
  std::size_t index(int i1, int i2) const { return static_cast<std::size_t>(i2) * n_ + i1; }

  bool operator==(const Grid&) const = default;

 private:
  GridMode mode_ = GridMode::radial;
  double h_ = 0.0;
  int n_ = 0;
  int center_ = 0;
};

/// Centered first derivatives. Radial mode: d1 = ∂_r f (0 on the axis), d2 = 0.
void spatial_gradient(const Grid& grid, const std::vector<double>& f, std::vector<double>& d1,
                      std::vector<double>& d2);

/// Second derivatives (∂₁₁, ∂₁₂, ∂₂₂). Radial mode evaluates them on the
/// ray θ = 0: ∂₁₁ = f_rr, ∂₂₂ = f_r / r (→ f_rr on the axis), ∂₁₂ = 0.
void spatial_hessian(const Grid& grid, const std::vector<double>& f, std::vector<double>& d11,
                     std::vector<double>& d12, std::vector<double>& d22);

/// Discrete Laplacian: 5-point stencil, or u_rr + u_r/r with 2 u_rr on the axis.
void laplacian(const Grid& grid, const std::vector<double>& f, std::vector<double>& out);

/// Quadrature weights of the discrete L² inner product (h² in planar mode;
/// r_i h and h²/8 on the axis in radial mode, per radian).
std::vector<double> quadrature_weights(const Grid& grid);

/// Energy ∫ (|∂_t u|² + |∇u|² + m² u²) dx in the discrete form conserved by
/// the semi-discrete linear scheme (gradient on cell edges).
double discrete_energy(const Grid& grid, const std::vector<double>& u, const std::vector<double>& ut,
                       double mass);

/// Value of f at (x1, x2) by linear (radial) or bilinear (planar) interpolation.
double interpolate(const Grid& grid, const std::vector<double>& f, double x1, double x2);

}  // namespace kmswkg
