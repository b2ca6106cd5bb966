#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "kmswkg/grid.hpp"
#include "kmswkg/nonlinearity.hpp"
#include "kmswkg/simulator.hpp"

namespace kmswkg {

/// Exponents of E[u]: ρ ∈ (0, ½), 8κ < ρ, derivative order s ∈ {1, 2}.
struct WeightSpec {
  double rho = 0.1;
  double kappa = 0.01;
  int s = 1;

  /// Throws ConfigError naming the violated constraint.
  void validate() const;
  double mu() const { return rho / (1.0 - rho); }
};

struct NormSeries {
  std::string name;
  std::vector<double> times;
  std::vector<double> values;

  void push(double t, double v);
};

/// Japanese bracket ⟨x⟩ = sqrt(1 + x²).
inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

enum class GammaField { L1, L2, Omega, d0, d1, d2 };
std::string_view to_string(GammaField g);
inline constexpr std::array<GammaField, 6> all_gamma_fields = {GammaField::L1, GammaField::L2, GammaField::Omega,
                                                               GammaField::d0, GammaField::d1, GammaField::d2};

/// Polynomial in (t, x₁, x₂).
class Poly {
 public:
  using Exp = std::array<int, 3>;
  Poly() = default;
  static Poly constant(double c);
  static Poly variable(int index);

  Poly operator+(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly derivative(int index) const;
  double operator()(double t, double x1, double x2) const;
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exp, double>& terms() const { return terms_; }

 private:
  void add(const Exp& e, double c);
  std::map<Exp, double> terms_;
};

/// Linear differential operator Σ_β p_β(t, x) ∂^β with polynomial coefficients.
class DiffOp {
 public:
  using Multi = std::array<int, 3>;
  static DiffOp identity();
  static DiffOp partial(int a);
  static DiffOp gamma(GammaField g);

  /// g ∘ this.
  DiffOp then(GammaField g) const;
  int order() const;
  const std::map<Multi, Poly>& terms() const { return terms_; }

 private:
  void add(const Multi& beta, const Poly& p);
  std::map<Multi, Poly> terms_;
};

/// All derivatives of order ≤ 2 of a field at one time. Time derivatives
/// come from φ_t and φ_tt; spatial ones from centered differences. Radial
/// fields are evaluated on the ray θ = 0.
class Jet {
 public:
  Jet(const Grid& grid, const std::vector<double>& phi, const std::vector<double>& phi_t,
      const std::vector<double>* phi_tt = nullptr);
  /// ∂^β φ at every node; throws ArgumentError if unavailable.
  const std::vector<double>& at(const DiffOp::Multi& beta) const;

 private:
  std::map<DiffOp::Multi, std::vector<double>> fields_;
};

/// (op φ)(t, x) at every node.
std::vector<double> apply_op(const Grid& grid, double t, const DiffOp& op, const Jet& jet);

/// Γφ from (φ, ∂_tφ). Ω on radial data is identically zero and returns a
/// zero field, appending a notice when `notices` is given.
std::vector<double> apply_gamma(const Grid& grid, double t, const std::vector<double>& phi,
                                const std::vector<double>& phi_t, GammaField which,
                                std::vector<std::string>* notices = nullptr);

/// Products Γ^α for all words of length ≤ order (1 + 6 + 36 operators for order 2).
std::vector<DiffOp> gamma_words(int order, const DiffOp& base = DiffOp::identity());

/// |φ|_s = Σ_{|α| ≤ s} |Γ^α φ| at every node.
std::vector<double> gamma_norm(const Grid& grid, double t, const Jet& jet, int s,
                               const DiffOp& base = DiffOp::identity());

struct NormBundle {
  double t = 0.0;
  std::map<std::string, double> values;
  std::vector<std::string> notes;
};

/// Constituents of E[u] with |·|_{I+1} → |·|_s and |·|_I → |·|_{s-1}:
///   kg_weighted        sup ⟨t+r⟩ |v|_s
///   kg_weighted_0      sup ⟨t+r⟩ |v| (no vector fields)
///   wave_weighted      sup ⟨r⟩^{1/2} ⟨t-r⟩^{1-ρ} |∂w|
///   wave_weighted_high sup ⟨t+r⟩^{-κ} ⟨r⟩^{1/2} ⟨t-r⟩^{1-ρ} |∂w|_{s-1}
///   E                  their sum
/// plus energy norms (energy_kg, energy_wave, energy), sup norms
/// (sup_kg, sup_wave, sup_dw) and bracket_wave = sup [w]_s.
NormBundle weighted_norms(const SystemSpec& spec, const Grid& grid, const FieldState& state,
                          const WeightSpec& weights);

enum class FitModel { power, log_power };
std::string_view to_string(FitModel m);

struct FitResult {
  FitModel model = FitModel::power;
  double t_a = 0.0;
  double t_b = 0.0;
  int n = 0;
  double slope = 0.0;
  double std_error = 0.0;
  double intercept = 0.0;
};

/// Least-squares slope of ln value against ln t (power) or ln ln t
/// (log_power) over samples with t in [t_a, t_b]. Requires t_b ≥ 2 t_a.
FitResult fit_decay_exponent(const NormSeries& series, double t_a, double t_b,
                             FitModel model = FitModel::power);

/// Q₀(φ, ψ) = φ_t ψ_t - ∇φ·∇ψ at every node.
std::vector<double> null_form_q0(const Grid& grid, const std::vector<double>& phi,
                                 const std::vector<double>& phi_t, const std::vector<double>& psi,
                                 const std::vector<double>& psi_t);

/// ṽ_j = v_j - m_j⁻² F_j^w(∂w) for Klein-Gordon components j (0-based).
/// An empty list selects every Klein-Gordon component.
std::vector<std::vector<double>> tilde_transform(const SystemSpec& spec, const Grid& grid,
                                                 const FieldState& state,
                                                 const std::vector<int>& components = {});

struct TildeResidual {
  /// sup |(□+m_j²)ṽ_j - (F_j - F_j^w)| per Klein-Gordon component.
  std::vector<double> transformed;
  /// sup |(□+m_j²)v_j - F_j| for comparison.
  std::vector<double> plain;
};

/// Discrete residuals from three consecutive, equally spaced states; □ uses
/// the second time difference and the grid Laplacian at interior nodes.
TildeResidual tilde_residual(const SystemSpec& spec, const Grid& grid, const FieldState& prev,
                             const FieldState& cur, const FieldState& next);

/// sup over interior nodes of |(□_h + m²)(Γφ)| for component j, with Γφ
/// formed at each of three consecutive states.
double commutator_residual(const Grid& grid, const FieldState& prev, const FieldState& cur,
                           const FieldState& next, int component, GammaField which, double mass);

/// Discrete L² and H¹ norms using the energy quadrature.
double l2_norm(const Grid& grid, const std::vector<double>& f);
double h1_norm(const Grid& grid, const std::vector<double>& f);

/// ‖v - φ‖_{H¹} + ‖∂_t v - ∂_t φ‖_{L²}, summed over components in quadrature.
double scattering_deficit(const Grid& grid, const std::vector<std::vector<double>>& v,
                          const std::vector<std::vector<double>>& v_t,
                          const std::vector<std::vector<double>>& phi,
                          const std::vector<std::vector<double>>& phi_t);

}  // namespace kmswkg
