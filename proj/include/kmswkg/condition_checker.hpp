#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kmswkg/nonlinearity.hpp"

namespace kmswkg {

/// Polynomial in (ω₁, ω₂, Y_0..Y_{N₁-1}) reduced modulo ω₁² + ω₂² - 1.
///
/// Exponent vectors index [ω₁, ω₂, Y_0, ...]; no stored monomial has an ω₁
/// exponent above 1, so the monomials form a basis of the quotient ring and
/// the polynomial vanishes on S¹ × R^{N₁} iff the map is empty.
class NormalForm {
 public:
  using Exponents = std::vector<int>;
  static constexpr double drop_below = 1e-14;

  explicit NormalForm(int n_wave = 0) : n_wave_(n_wave) {}
  /// Normal form of F_red_j for wave-local output j.
  static NormalForm of_output(const ReducedForm& form, int j);

  /// Adds coeff · ω₁^e1 ω₂^e2 Y^y, reducing ω₁² → 1 - ω₂² on the fly.
  void add(int e1, int e2, const std::vector<int>& y_exponents, double coeff);
  /// Drops coefficients with magnitude below `drop_below`.
  void prune();

  int n_wave() const { return n_wave_; }
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exponents, double>& terms() const { return terms_; }
  double evaluate(double omega1, double omega2, std::span<const double> y) const;

 private:
  int n_wave_;
  std::map<Exponents, double> terms_;
};

/// Matrix-valued J(θ) = A₀ + Σ_{p=1..P} (A_p cos pθ + B_p sin pθ).
class KmsCertificate {
 public:
  enum class Kind { constant, trigonometric };

  struct Verification {
    int n_omega = 0;
    int n_y = 0;
    double min_eigenvalue = 0.0;
    double min_margin = 0.0;
    bool verified = false;
  };

  static KmsCertificate constant(const Eigen::MatrixXd& j);
  static KmsCertificate trigonometric(const Eigen::MatrixXd& a0, std::vector<Eigen::MatrixXd> cos_terms,
                                      std::vector<Eigen::MatrixXd> sin_terms);

  Kind kind() const { return kind_; }
  int dimension() const { return static_cast<int>(a0_.rows()); }
  int order() const { return static_cast<int>(cos_.size()); }
  Eigen::MatrixXd at(double theta) const;
  const Eigen::MatrixXd& mean() const { return a0_; }
  const std::vector<Eigen::MatrixXd>& cos_terms() const { return cos_; }
  const std::vector<Eigen::MatrixXd>& sin_terms() const { return sin_; }

  Verification verification;

 private:
  Kind kind_ = Kind::constant;
  Eigen::MatrixXd a0_;
  std::vector<Eigen::MatrixXd> cos_;
  std::vector<Eigen::MatrixXd> sin_;
};

enum class Verdict { holds, fails, inconclusive };
std::string_view to_string(Verdict v);

struct Witness {
  double theta = 0.0;
  std::vector<double> y;
  /// Wave-local output index for null-condition witnesses; -1 for KMS witnesses.
  int component = -1;
  double value = 0.0;
};

struct CheckReport {
  std::string check;  // "null" or "kms"
  Verdict verdict = Verdict::inconclusive;
  std::optional<Witness> witness;
  double min_value = 0.0;
  double min_eigenvalue = 0.0;
  int n_omega = 0;
  int n_y = 0;
  /// Sampled values in [-tol, 0) treated as zero.
  int tie_count = 0;
  /// Number of surviving normal-form monomials per wave output (null check).
  std::vector<int> surviving_terms;
  std::vector<std::string> notes;
};

/// Re-evaluates a witness: F_red_j for null witnesses, Yᵀ J F_red for KMS ones.
double reevaluate_witness(const SystemSpec& spec, const Witness& w,
                          const KmsCertificate* certificate = nullptr);

/// Exact decision of F_red ≡ 0 on S¹ × R^{N₁}.
CheckReport check_null(const SystemSpec& spec, std::uint64_t seed = 0);

struct KmsOptions {
  double tol = 1e-12;
};

/// Grid verification of Yᵀ J(ω) F_red(ω, Y) ≥ 0 and J(ω) ≻ 0.
CheckReport verify_kms(const SystemSpec& spec, const KmsCertificate& j, int n_omega, int n_y,
                       const KmsOptions& options = {});

struct SearchOptions {
  int max_iters = 500;
  double delta = 1e-6;
  double tol = 1e-12;
  /// Halfspace projection sweeps per outer round.
  int inner_sweeps = 50;
};

struct SearchResult {
  std::optional<KmsCertificate> certificate;
  int iterations = 0;
  CheckReport fine_check;
  std::string note;
};

/// Alternating projections over constant symmetric J; the candidate is kept
/// only if verify_kms holds on a grid twice as fine.
SearchResult search_constant_kms(const SystemSpec& spec, int n_omega, int n_y,
                                 const SearchOptions& options = {});

/// Same scheme over trigonometric J of the given order; PD projection is
/// eigenvalue clipping on the ω-grid followed by a least-squares refit.
SearchResult search_trig_kms(const SystemSpec& spec, int order, int n_omega, int n_y,
                             const SearchOptions& options = {});

/// Uniform grid on the unit sphere of R^n: n_y^(n-1) points (2 points for n = 1).
std::vector<std::vector<double>> sphere_grid(int n, int n_y);

}  // namespace kmswkg
