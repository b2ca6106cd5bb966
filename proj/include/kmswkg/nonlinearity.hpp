#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "kmswkg/errors.hpp"

namespace kmswkg {

/// Which derivative a factor carries. `t`, `x1`, `x2` map to the
/// coordinate index a = 0, 1, 2.
enum class Deriv : std::uint8_t { none = 0, t = 1, x1 = 2, x2 = 3 };

/// Coordinate index a in {0,1,2} of a differentiated factor.
inline int coordinate_index(Deriv d) { return static_cast<int>(d) - 1; }
inline Deriv deriv_from_coordinate(int a) { return static_cast<Deriv>(a + 1); }

std::string_view to_string(Deriv d);
Deriv parse_deriv(std::string_view s);

/// One factor ∂^α u_k of a monomial; `component` is 0-based.
struct Factor {
  int component = 0;
  Deriv deriv = Deriv::none;
  auto operator<=>(const Factor&) const = default;
};

struct CubicKey {
  int output = 0;
  std::array<Factor, 3> factors{};
  auto operator<=>(const CubicKey&) const = default;
};

/// Sparse cubic coefficient tensor C^{αβγ}_{jklm}.
///
/// Factor triples are stored sorted, so the same monomial entered in any
/// order accumulates into one coefficient. Entries that cancel to exactly
/// zero are removed.
class CubicTensor {
 public:
  void add(int output, std::array<Factor, 3> factors, double coeff);

  const std::map<CubicKey, double>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  bool operator==(const CubicTensor&) const = default;

 private:
  std::map<CubicKey, double> entries_;
};

/// A higher-order monomial coeff * Π factors (degree ≥ 4) contributing to F_output.
struct HigherOrderTerm {
  int output = 0;
  std::vector<Factor> factors;
  double coeff = 0.0;
  bool operator==(const HigherOrderTerm&) const = default;
};

/// The coupled system (□ + m_j²) u_j = F_j(v, ∂u), j = 0..N-1.
/// Components 0..n_kg-1 are Klein-Gordon (m > 0), the rest are waves (m = 0).
class SystemSpec {
 public:
  SystemSpec() = default;
  SystemSpec(int n_total, int n_kg, std::vector<double> masses, CubicTensor cubic,
             std::vector<HigherOrderTerm> higher_order = {});

  int n_total() const { return n_total_; }
  int n_kg() const { return n_kg_; }
  int n_wave() const { return n_total_ - n_kg_; }
  bool is_wave(int component) const { return component >= n_kg_; }
  const std::vector<double>& masses() const { return masses_; }
  const CubicTensor& cubic() const { return cubic_; }
  const std::vector<HigherOrderTerm>& higher_order() const { return higher_order_; }

  /// Same masses and split with a different right-hand side.
  SystemSpec with_rhs(CubicTensor cubic, std::vector<HigherOrderTerm> higher_order = {}) const;

  bool operator==(const SystemSpec&) const = default;

 private:
  int n_total_ = 0;
  int n_kg_ = 0;
  std::vector<double> masses_;
  CubicTensor cubic_;
  std::vector<HigherOrderTerm> higher_order_;
};

/// Point ω on the unit circle, stored as the angle θ with ω = (cos θ, sin θ).
class Direction {
 public:
  Direction() = default;
  static Direction from_angle(double theta);
  /// Throws ArgumentError unless ω₁² + ω₂² = 1 within 1e-12.
  static Direction from_components(double omega1, double omega2);

  double angle() const { return theta_; }
  double omega1() const;
  double omega2() const;
  /// ω̂_a for a = 0, 1, 2 with ω̂₀ = -1.
  double hat(int a) const;
  std::array<double, 3> hat() const { return {-1.0, omega1(), omega2()}; }

 private:
  explicit Direction(double theta) : theta_(theta) {}
  double theta_ = 0.0;
};

/// Compiled form of F used in inner loops. Factor values are read from the
/// pair (v, du) with du row-major N×3 holding (∂₀u_j, ∂₁u_j, ∂₂u_j).
class RhsKernel {
 public:
  RhsKernel() = default;
  explicit RhsKernel(const SystemSpec& spec, bool include_higher_order = true);
  static RhsKernel from_tensor(const SystemSpec& spec, const CubicTensor& tensor);

  /// out[j] = F_j(v, du); `out` has n_total entries and is overwritten.
  void evaluate(const double* v, const double* du, double* out) const;
  bool empty() const { return cubic_.empty() && higher_.empty(); }
  int n_total() const { return n_total_; }

 private:
  struct CubicTerm {
    int output;
    std::array<int, 3> slots;
    double coeff;
  };
  struct HigherTerm {
    int output;
    std::vector<int> slots;
    double coeff;
  };
  int slot_of(const Factor& f) const;

  int n_total_ = 0;
  int n_kg_ = 0;
  std::vector<CubicTerm> cubic_;
  std::vector<HigherTerm> higher_;
};

/// F(v, ∂u) = F^cubic + F^h.
std::vector<double> eval_rhs(const SystemSpec& spec, std::span<const double> v,
                             std::span<const double> du);

/// The four interaction classes of the cubic tensor, by number of
/// Klein-Gordon factors: 3 → kl, 2 → kkw, 1 → kww, 0 → ww.
struct InteractionParts {
  CubicTensor kl;
  CubicTensor kkw;
  CubicTensor kww;
  CubicTensor ww;
};

InteractionParts classify_parts(const SystemSpec& spec);

/// One term coeff · ω̂_a ω̂_b ω̂_c Y_k Y_l Y_m with wave-local indices k, l, m.
struct ReducedMonomial {
  std::array<int, 3> y{};
  std::array<int, 3> a{};
  double coeff = 0.0;
};

/// Y ↦ F_red(ω, Y) with ω frozen: sum of coeff Y_k Y_l Y_m per output.
class DirectionalCubic {
 public:
  struct Term {
    int output;
    std::array<int, 3> y;
    double coeff;
  };
  DirectionalCubic() = default;
  DirectionalCubic(int n_wave, std::vector<Term> terms);

  int n_wave() const { return n_wave_; }
  const std::vector<Term>& terms() const { return terms_; }
  void evaluate(const double* y, double* out) const;
  std::vector<double> evaluate(std::span<const double> y) const;
  Eigen::MatrixXd jacobian(std::span<const double> y) const;
  /// True when the map is λ·Y³ with N₁ = 1; writes λ.
  bool is_scalar_cubic(double* lambda) const;

 private:
  int n_wave_ = 0;
  std::vector<Term> terms_;
};

/// Reduced nonlinearity F_red_j(ω, Y) for each wave output j (wave-local index).
class ReducedForm {
 public:
  ReducedForm() = default;
  ReducedForm(int n_wave, std::vector<std::vector<ReducedMonomial>> outputs);

  int n_wave() const { return n_wave_; }
  const std::vector<std::vector<ReducedMonomial>>& outputs() const { return outputs_; }

  std::vector<double> evaluate(const Direction& omega, std::span<const double> y) const;
  DirectionalCubic at(const Direction& omega) const;
  bool empty() const;

 private:
  int n_wave_ = 0;
  std::vector<std::vector<ReducedMonomial>> outputs_;
};

ReducedForm reduced_form(const SystemSpec& spec);

/// G_jk = ∂F_red_j/∂Y_k, N₁×N₁.
Eigen::MatrixXd reduced_jacobian(const SystemSpec& spec, const Direction& omega,
                                 std::span<const double> y);

}  // namespace kmswkg
