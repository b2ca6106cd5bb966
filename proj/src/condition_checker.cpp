#include "kmswkg/condition_checker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace kmswkg {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

// ---------------------------------------------------------------------------
// NormalForm

void NormalForm::add(int e1, int e2, const std::vector<int>& y_exponents, double coeff) {
  if (coeff == 0.0) return;
  if (e1 >= 2) {
    // ω₁^e1 = ω₁^(e1-2) (1 - ω₂²)
    add(e1 - 2, e2, y_exponents, coeff);
    add(e1 - 2, e2 + 2, y_exponents, -coeff);
    return;
  }
  Exponents key;
  key.reserve(2 + y_exponents.size());
  key.push_back(e1);
  key.push_back(e2);
  key.insert(key.end(), y_exponents.begin(), y_exponents.end());
  auto [it, inserted] = terms_.try_emplace(std::move(key), coeff);
  if (!inserted) it->second += coeff;
}

void NormalForm::prune() {
  std::erase_if(terms_, [](const auto& kv) { return std::abs(kv.second) < drop_below; });
}

NormalForm NormalForm::of_output(const ReducedForm& form, int j) {
  NormalForm nf(form.n_wave());
  for (const auto& m : form.outputs().at(j)) {
    int e1 = 0, e2 = 0;
    double sign = 1.0;
    for (int a : m.a) {
      if (a == 0) sign = -sign;
      else if (a == 1) ++e1;
      else ++e2;
    }
    std::vector<int> y(form.n_wave(), 0);
    for (int k : m.y) ++y[k];
    nf.add(e1, e2, y, sign * m.coeff);
  }
  nf.prune();
  return nf;
}

double NormalForm::evaluate(double omega1, double omega2, std::span<const double> y) const {
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double p = c * std::pow(omega1, e[0]) * std::pow(omega2, e[1]);
    for (int k = 0; k < n_wave_; ++k) p *= std::pow(y[k], e[2 + k]);
    sum += p;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// KmsCertificate

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) throw ArgumentError(std::string(what) + " must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ArgumentError(std::string(what) + " must be symmetric");
  return 0.5 * (m + m.transpose());
}

}  // namespace

KmsCertificate KmsCertificate::constant(const Eigen::MatrixXd& j) {
  KmsCertificate c;
  c.kind_ = Kind::constant;
  c.a0_ = symmetrized(j, "certificate matrix");
  return c;
}

KmsCertificate KmsCertificate::trigonometric(const Eigen::MatrixXd& a0,
                                             std::vector<Eigen::MatrixXd> cos_terms,
                                             std::vector<Eigen::MatrixXd> sin_terms) {
  if (cos_terms.size() != sin_terms.size())
    throw ArgumentError("trigonometric certificate needs as many sine as cosine terms");
  KmsCertificate c;
  c.kind_ = Kind::trigonometric;
  c.a0_ = symmetrized(a0, "certificate mean");
  for (auto& m : cos_terms) {
    if (m.rows() != c.a0_.rows() || m.cols() != c.a0_.cols())
      throw ArgumentError("certificate coefficient dimension mismatch");
    c.cos_.push_back(symmetrized(m, "certificate cosine coefficient"));
  }
  for (auto& m : sin_terms) {
    if (m.rows() != c.a0_.rows() || m.cols() != c.a0_.cols())
      throw ArgumentError("certificate coefficient dimension mismatch");
    c.sin_.push_back(symmetrized(m, "certificate sine coefficient"));
  }
  return c;
}

Eigen::MatrixXd KmsCertificate::at(double theta) const {
  Eigen::MatrixXd j = a0_;
  for (std::size_t p = 0; p < cos_.size(); ++p) {
    const double arg = static_cast<double>(p + 1) * theta;
    j += std::cos(arg) * cos_[p] + std::sin(arg) * sin_[p];
  }
  return j;
}

// ---------------------------------------------------------------------------
// Grids and evaluation

std::vector<std::vector<double>> sphere_grid(int n, int n_y) {
  if (n < 1) return {};
  if (n == 1) return {{1.0}, {-1.0}};
  const double pi = std::numbers::pi;
  // Hyperspherical angles: φ_1..φ_{n-2} on [0, π] inclusive, φ_{n-1} on [0, 2π).
  std::vector<std::vector<double>> points;
  std::vector<int> idx(n - 1, 0);
  while (true) {
    std::vector<double> phi(n - 1);
    for (int i = 0; i < n - 2; ++i)
      phi[i] = n_y > 1 ? pi * idx[i] / (n_y - 1) : 0.0;
    phi[n - 2] = 2.0 * pi * idx[n - 2] / n_y;
    std::vector<double> y(n);
    double s = 1.0;
    for (int i = 0; i < n - 1; ++i) {
      y[i] = s * std::cos(phi[i]);
      s *= std::sin(phi[i]);
    }
    y[n - 1] = s;
    points.push_back(std::move(y));
    int k = n - 2;
    while (k >= 0 && ++idx[k] == n_y) idx[k--] = 0;
    if (k < 0) break;
  }
  return points;
}

namespace {

double kms_quartic(const DirectionalCubic& cubic, const Eigen::MatrixXd& j,
                   std::span<const double> y) {
  const auto f = cubic.evaluate(y);
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  Eigen::Map<const Eigen::VectorXd> fv(f.data(), static_cast<Eigen::Index>(f.size()));
  return yv.dot(j * fv);
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

double reevaluate_witness(const SystemSpec& spec, const Witness& w,
                          const KmsCertificate* certificate) {
  const auto form = reduced_form(spec);
  const auto omega = Direction::from_angle(w.theta);
  if (w.component >= 0) return form.evaluate(omega, w.y).at(w.component);
  if (!certificate) throw ArgumentError("KMS witness needs the certificate to re-evaluate");
  return kms_quartic(form.at(omega), certificate->at(omega.angle()), w.y);
}

CheckReport check_null(const SystemSpec& spec, std::uint64_t seed) {
  CheckReport report;
  report.check = "null";
  const auto form = reduced_form(spec);
  const int n1 = spec.n_wave();
  int failing = -1;
  for (int j = 0; j < n1; ++j) {
    const auto nf = NormalForm::of_output(form, j);
    report.surviving_terms.push_back(static_cast<int>(nf.terms().size()));
    if (!nf.is_zero() && failing < 0) failing = j;
  }
  if (n1 == 0) report.notes.push_back("no wave components: null condition holds vacuously");
  if (failing < 0) {
    report.verdict = Verdict::holds;
    return report;
  }
  report.verdict = Verdict::fails;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Witness w;
    w.theta = Direction::from_angle(angle(rng)).angle();
    w.y.resize(n1);
    for (auto& y : w.y) y = gauss(rng);
    w.component = failing;
    w.value = form.evaluate(Direction::from_angle(w.theta), w.y)[failing];
    if (std::abs(w.value) > 1e-10) {
      report.witness = w;
      report.min_value = w.value;
      return report;
    }
  }
  report.notes.push_back("normal form nonzero but no sampled witness exceeded 1e-10");
  report.verdict = Verdict::inconclusive;
  return report;
}

CheckReport verify_kms(const SystemSpec& spec, const KmsCertificate& j, int n_omega, int n_y,
                       const KmsOptions& options) {
  const int n1 = spec.n_wave();
  if (j.dimension() != n1)
    throw ArgumentError("certificate dimension " + std::to_string(j.dimension()) +
                        " does not match N1 = " + std::to_string(n1));
  if (n_omega < 8 || n_y < 8) throw ArgumentError("verify_kms needs n_omega >= 8 and n_y >= 8");

  CheckReport report;
  report.check = "kms";
  report.n_omega = n_omega;
  report.n_y = n_y;
  report.min_value = std::numeric_limits<double>::infinity();
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  if (n1 == 0) {
    report.verdict = Verdict::holds;
    report.min_value = 0.0;
    report.notes.push_back("no wave components: condition (W) holds vacuously");
    return report;
  }

  const auto form = reduced_form(spec);
  const auto sphere = sphere_grid(n1, n_y);
  Witness worst;
  for (int i = 0; i < n_omega; ++i) {
    const auto omega = Direction::from_angle(2.0 * std::numbers::pi * i / n_omega);
    const auto jm = j.at(omega.angle());
    report.min_eigenvalue = std::min(report.min_eigenvalue, min_eigenvalue(jm));
    const auto cubic = form.at(omega);
    for (const auto& y : sphere) {
      const double q = kms_quartic(cubic, jm, y);
      if (q < 0.0 && q >= -options.tol) ++report.tie_count;
      if (q < report.min_value) {
        report.min_value = q;
        worst = Witness{omega.angle(), y, -1, q};
      }
    }
  }
  if (report.tie_count > 0)
    report.notes.push_back(std::to_string(report.tie_count) +
                           " sampled values in [-tol, 0) treated as zero");
  report.notes.push_back("grid verification: " + std::to_string(n_omega) + " directions x " +
                         std::to_string(sphere.size()) + " sphere points");
  if (report.min_value < -options.tol) {
    report.verdict = Verdict::fails;
    report.witness = worst;
  } else if (!(report.min_eigenvalue > 0.0)) {
    report.verdict = Verdict::fails;
    report.notes.push_back("certificate is not positive-definite on the sampled directions");
  } else {
    report.verdict = Verdict::holds;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Certificate search

namespace {

/// Symmetric-matrix coordinates: x[idx(k, l)] = J_kl = J_lk for k <= l.
struct SymIndex {
  int n;
  int size() const { return n * (n + 1) / 2; }
  int operator()(int k, int l) const {
    if (k > l) std::swap(k, l);
    return k * n - k * (k - 1) / 2 + (l - k);
  }
  Eigen::MatrixXd unpack(const Eigen::VectorXd& x, int offset) const {
    Eigen::MatrixXd m(n, n);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) m(k, l) = x[offset + (*this)(k, l)];
    return m;
  }
  void pack(const Eigen::MatrixXd& m, Eigen::VectorXd& x, int offset) const {
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) x[offset + (*this)(k, l)] = m(k, l);
  }
};

/// Trigonometric basis value: index 0 → 1, 2p-1 → cos pθ, 2p → sin pθ.
double trig_basis(int b, double theta) {
  if (b == 0) return 1.0;
  const int p = (b + 1) / 2;
  return (b % 2 == 1) ? std::cos(p * theta) : std::sin(p * theta);
}

struct Problem {
  SymIndex sym;
  int n_basis;
  std::vector<Eigen::VectorXd> rows;  // constraints rows[i]·x >= 0
  std::vector<double> row_norm2;
};

Problem build_constraints(const SystemSpec& spec, int order, int n_omega, int n_y) {
  const int n1 = spec.n_wave();
  Problem pb{SymIndex{n1}, 2 * order + 1, {}, {}};
  const auto form = reduced_form(spec);
  const auto sphere = sphere_grid(n1, n_y);
  const int block = pb.sym.size();
  for (int i = 0; i < n_omega; ++i) {
    const auto omega = Direction::from_angle(2.0 * std::numbers::pi * i / n_omega);
    const auto cubic = form.at(omega);
    for (const auto& y : sphere) {
      const auto f = cubic.evaluate(y);
      Eigen::VectorXd local = Eigen::VectorXd::Zero(block);
      for (int k = 0; k < n1; ++k)
        for (int l = k; l < n1; ++l)
          local[pb.sym(k, l)] = (k == l) ? y[k] * f[k] : y[k] * f[l] + y[l] * f[k];
      const double nrm = local.squaredNorm();
      if (nrm < 1e-28) continue;
      Eigen::VectorXd row(block * pb.n_basis);
      for (int b = 0; b < pb.n_basis; ++b)
        row.segment(b * block, block) = trig_basis(b, omega.angle()) * local;
      pb.row_norm2.push_back(row.squaredNorm());
      pb.rows.push_back(std::move(row));
    }
  }
  return pb;
}

/// Cyclic projections onto the halfspaces; returns the worst normalized violation.
double project_halfspaces(const Problem& pb, Eigen::VectorXd& x, int sweeps, double tol) {
  double worst = 0.0;
  for (int s = 0; s < sweeps; ++s) {
    worst = 0.0;
    for (std::size_t i = 0; i < pb.rows.size(); ++i) {
      const double d = pb.rows[i].dot(x);
      if (d < 0.0) {
        x -= (d / pb.row_norm2[i]) * pb.rows[i];
        worst = std::max(worst, -d / std::sqrt(pb.row_norm2[i]));
      }
    }
    if (worst <= tol) break;
  }
  return worst;
}

Eigen::MatrixXd clip_eigen(const Eigen::MatrixXd& m, double delta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(delta);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

KmsCertificate certificate_from(const Problem& pb, const Eigen::VectorXd& x, int order) {
  const int block = pb.sym.size();
  const auto a0 = pb.sym.unpack(x, 0);
  if (order == 0) return KmsCertificate::constant(a0);
  std::vector<Eigen::MatrixXd> c, s;
  for (int p = 1; p <= order; ++p) {
    c.push_back(pb.sym.unpack(x, (2 * p - 1) * block));
    s.push_back(pb.sym.unpack(x, 2 * p * block));
  }
  return KmsCertificate::trigonometric(a0, std::move(c), std::move(s));
}

SearchResult run_search(const SystemSpec& spec, int order, int n_omega, int n_y,
                        const SearchOptions& opt) {
  SearchResult result;
  const int n1 = spec.n_wave();
  if (n1 == 0) {
    result.note = "no wave components";
    return result;
  }
  if (n_omega < 8 || n_y < 8) throw ArgumentError("certificate search needs n_omega, n_y >= 8");
  if (order > 0 && n_omega <= 2 * order)
    throw ArgumentError("trigonometric search needs n_omega > 2 * order");

  const auto pb = build_constraints(spec, order, n_omega, n_y);
  const int block = pb.sym.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(block * pb.n_basis);
  pb.sym.pack(Eigen::MatrixXd::Identity(n1, n1), x, 0);

  // Angles used for the positive-definiteness step of trigonometric candidates.
  std::vector<double> angles(n_omega);
  for (int i = 0; i < n_omega; ++i) angles[i] = 2.0 * std::numbers::pi * i / n_omega;

  auto pd_step = [&](Eigen::VectorXd& v) {
    if (order == 0) {
      Eigen::MatrixXd j = clip_eigen(pb.sym.unpack(v, 0), opt.delta);
      j *= static_cast<double>(n1) / j.trace();
      pb.sym.pack(j, v, 0);
      return;
    }
    // Clip on the grid, then project back onto trig polynomials (discrete Fourier fit).
    auto cert = certificate_from(pb, v, order);
    Eigen::VectorXd refit = Eigen::VectorXd::Zero(v.size());
    for (double th : angles) {
      const Eigen::MatrixXd jc = clip_eigen(cert.at(th), opt.delta);
      Eigen::VectorXd packed(block);
      for (int k = 0; k < n1; ++k)
        for (int l = k; l < n1; ++l) packed[pb.sym(k, l)] = jc(k, l);
      for (int b = 0; b < pb.n_basis; ++b) {
        const double w = (b == 0 ? 1.0 : 2.0) / n_omega;
        refit.segment(b * block, block) += w * trig_basis(b, th) * packed;
      }
    }
    const double tr = pb.sym.unpack(refit, 0).trace();
    v = refit * (static_cast<double>(n1) / tr);
  };

  auto feasible = [&](const Eigen::VectorXd& v) {
    for (std::size_t i = 0; i < pb.rows.size(); ++i)
      if (pb.rows[i].dot(v) < -opt.tol * std::sqrt(pb.row_norm2[i])) return false;
    auto cert = certificate_from(pb, v, order);
    for (double th : angles)
      if (min_eigenvalue(cert.at(th)) < 0.5 * opt.delta) return false;
    return true;
  };

  bool found = false;
  int it = 0;
  for (; it < opt.max_iters; ++it) {
    if (feasible(x)) {
      found = true;
      break;
    }
    project_halfspaces(pb, x, opt.inner_sweeps, opt.tol);
    pd_step(x);
  }
  result.iterations = it;
  if (!found) {
    result.note = "no feasible candidate after " + std::to_string(it) +
                  " rounds; absence is not a proof of infeasibility";
    return result;
  }
  auto cert = certificate_from(pb, x, order);
  result.fine_check = verify_kms(spec, cert, 2 * n_omega, 2 * n_y, KmsOptions{opt.tol});
  if (result.fine_check.verdict != Verdict::holds) {
    result.note = "candidate failed verification on the refined grid";
    return result;
  }
  cert.verification = {2 * n_omega, 2 * n_y, result.fine_check.min_eigenvalue,
                       result.fine_check.min_value, true};
  result.certificate = std::move(cert);
  result.note = "certificate verified on refined grid";
  return result;
}

}  // namespace

SearchResult search_constant_kms(const SystemSpec& spec, int n_omega, int n_y,
                                 const SearchOptions& options) {
  return run_search(spec, 0, n_omega, n_y, options);
}

SearchResult search_trig_kms(const SystemSpec& spec, int order, int n_omega, int n_y,
                             const SearchOptions& options) {
  if (order < 1) throw ArgumentError("trigonometric search order must be >= 1");
  return run_search(spec, order, n_omega, n_y, options);
}

}  // namespace kmswkg
