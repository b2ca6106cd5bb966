#include "kmswkg/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kmswkg {

std::string_view to_string(Deriv d) {
  switch (d) {
    case Deriv::none: return "none";
    case Deriv::t: return "t";
    case Deriv::x1: return "x1";
    case Deriv::x2: return "x2";
  }
  return "none";
}

Deriv parse_deriv(std::string_view s) {
  if (s == "none") return Deriv::none;
  if (s == "t") return Deriv::t;
  if (s == "x1") return Deriv::x1;
  if (s == "x2") return Deriv::x2;
  throw ArgumentError("unknown derivative '" + std::string(s) + "' (expected none, t, x1, x2)");
}

void CubicTensor::add(int output, std::array<Factor, 3> factors, double coeff) {
  std::sort(factors.begin(), factors.end());
  CubicKey key{output, factors};
  auto [it, inserted] = entries_.try_emplace(key, coeff);
  if (!inserted) it->second += coeff;
  if (it->second == 0.0) entries_.erase(it);
}

namespace {

void check_factor(const Factor& f, int n_total, int n_kg, const char* what) {
  if (f.component < 0 || f.component >= n_total)
    throw ArgumentError(std::string(what) + ": factor component " + std::to_string(f.component) +
                        " out of range [0, " + std::to_string(n_total) + ")");
  if (f.component >= n_kg && f.deriv == Deriv::none)
    throw ArgumentError(std::string(what) + ": wave component " + std::to_string(f.component) +
                        " appears undifferentiated (F may not depend on w itself)");
}

}  // namespace

SystemSpec::SystemSpec(int n_total, int n_kg, std::vector<double> masses, CubicTensor cubic,
                       std::vector<HigherOrderTerm> higher_order)
    : n_total_(n_total),
      n_kg_(n_kg),
      masses_(std::move(masses)),
      cubic_(std::move(cubic)),
      higher_order_(std::move(higher_order)) {
  if (n_total_ < 1) throw ArgumentError("system needs at least one component");
  if (n_kg_ < 0 || n_kg_ > n_total_)
    throw ArgumentError("n_kg must lie in [0, n_total]");
  if (static_cast<int>(masses_.size()) != n_total_)
    throw ArgumentError("masses must have n_total entries");
  for (int j = 0; j < n_total_; ++j) {
    const double m = masses_[j];
    if (j < n_kg_ && !(m > 0.0))
      throw ArgumentError("mass of Klein-Gordon component " + std::to_string(j) + " must be > 0");
    if (j >= n_kg_ && m != 0.0)
      throw ArgumentError("mass of wave component " + std::to_string(j) + " must be 0");
  }
  for (const auto& [key, c] : cubic_.entries()) {
    if (key.output < 0 || key.output >= n_total_)
      throw ArgumentError("cubic term output index out of range");
    for (const auto& f : key.factors) check_factor(f, n_total_, n_kg_, "cubic term");
    if (!std::isfinite(c)) throw ArgumentError("cubic coefficient is not finite");
  }
  for (const auto& term : higher_order_) {
    if (term.output < 0 || term.output >= n_total_)
      throw ArgumentError("higher-order term output index out of range");
    if (term.factors.size() < 4)
      throw ArgumentError("higher-order term must have degree >= 4");
    for (const auto& f : term.factors) check_factor(f, n_total_, n_kg_, "higher-order term");
    if (!std::isfinite(term.coeff)) throw ArgumentError("higher-order coefficient is not finite");
  }
}

SystemSpec SystemSpec::with_rhs(CubicTensor cubic, std::vector<HigherOrderTerm> higher_order) const {
  return SystemSpec(n_total_, n_kg_, masses_, std::move(cubic), std::move(higher_order));
}

Direction Direction::from_angle(double theta) {
  if (!std::isfinite(theta)) throw ArgumentError("direction angle must be finite");
  double t = std::remainder(theta, 2.0 * std::numbers::pi);
  return Direction(t);
}

Direction Direction::from_components(double omega1, double omega2) {
  const double n2 = omega1 * omega1 + omega2 * omega2;
  if (!(std::abs(n2 - 1.0) <= 1e-12))
    throw ArgumentError("direction must lie on the unit circle (|ω|² = " + std::to_string(n2) + ")");
  return Direction(std::atan2(omega2, omega1));
}

double Direction::omega1() const { return std::cos(theta_); }
double Direction::omega2() const { return std::sin(theta_); }

double Direction::hat(int a) const {
  switch (a) {
    case 0: return -1.0;
    case 1: return omega1();
    case 2: return omega2();
    default: throw ArgumentError("direction index must be 0, 1 or 2");
  }
}

// ---------------------------------------------------------------------------

int RhsKernel::slot_of(const Factor& f) const {
  if (f.deriv == Deriv::none) return f.component;
  return n_kg_ + 3 * f.component + coordinate_index(f.deriv);
}

RhsKernel::RhsKernel(const SystemSpec& spec, bool include_higher_order)
    : n_total_(spec.n_total()), n_kg_(spec.n_kg()) {
  for (const auto& [key, c] : spec.cubic().entries()) {
    cubic_.push_back({key.output,
                      {slot_of(key.factors[0]), slot_of(key.factors[1]), slot_of(key.factors[2])},
                      c});
  }
  if (include_higher_order) {
    for (const auto& term : spec.higher_order()) {
      HigherTerm h{term.output, {}, term.coeff};
      for (const auto& f : term.factors) h.slots.push_back(slot_of(f));
      higher_.push_back(std::move(h));
    }
  }
}

RhsKernel RhsKernel::from_tensor(const SystemSpec& spec, const CubicTensor& tensor) {
  return RhsKernel(spec.with_rhs(tensor), false);
}

void RhsKernel::evaluate(const double* v, const double* du, double* out) const {
  std::fill(out, out + n_total_, 0.0);
  auto value = [&](int slot) { return slot < n_kg_ ? v[slot] : du[slot - n_kg_]; };
  for (const auto& t : cubic_)
    out[t.output] += t.coeff * value(t.slots[0]) * value(t.slots[1]) * value(t.slots[2]);
  for (const auto& t : higher_) {
    double p = t.coeff;
    for (int s : t.slots) p *= value(s);
    out[t.output] += p;
  }
}

std::vector<double> eval_rhs(const SystemSpec& spec, std::span<const double> v,
                             std::span<const double> du) {
  if (static_cast<int>(v.size()) != spec.n_kg())
    throw ArgumentError("eval_rhs: v must have n_kg = " + std::to_string(spec.n_kg()) + " entries");
  if (static_cast<int>(du.size()) != 3 * spec.n_total())
    throw ArgumentError("eval_rhs: du must be N x 3 = " + std::to_string(3 * spec.n_total()) +
                        " entries");
  std::vector<double> out(spec.n_total());
  RhsKernel(spec).evaluate(v.data(), du.data(), out.data());
  return out;
}

InteractionParts classify_parts(const SystemSpec& spec) {
  InteractionParts parts;
  for (const auto& [key, c] : spec.cubic().entries()) {
    int n_kg_factors = 0;
    for (const auto& f : key.factors)
      if (!spec.is_wave(f.component)) ++n_kg_factors;
    CubicTensor* dest = nullptr;
    switch (n_kg_factors) {
      case 3: dest = &parts.kl; break;
      case 2: dest = &parts.kkw; break;
      case 1: dest = &parts.kww; break;
      default: dest = &parts.ww; break;
    }
    dest->add(key.output, key.factors, c);
  }
  return parts;
}

// ---------------------------------------------------------------------------

DirectionalCubic::DirectionalCubic(int n_wave, std::vector<Term> terms)
    : n_wave_(n_wave), terms_(std::move(terms)) {}

void DirectionalCubic::evaluate(const double* y, double* out) const {
  std::fill(out, out + n_wave_, 0.0);
  for (const auto& t : terms_) out[t.output] += t.coeff * y[t.y[0]] * y[t.y[1]] * y[t.y[2]];
}

std::vector<double> DirectionalCubic::evaluate(std::span<const double> y) const {
  if (static_cast<int>(y.size()) != n_wave_)
    throw ArgumentError("Y must have N1 = " + std::to_string(n_wave_) + " entries");
  std::vector<double> out(n_wave_);
  evaluate(y.data(), out.data());
  return out;
}

Eigen::MatrixXd DirectionalCubic::jacobian(std::span<const double> y) const {
  if (static_cast<int>(y.size()) != n_wave_)
    throw ArgumentError("Y must have N1 = " + std::to_string(n_wave_) + " entries");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_wave_, n_wave_);
  for (const auto& t : terms_) {
    const auto [k, l, m] = t.y;
    g(t.output, k) += t.coeff * y[l] * y[m];
    g(t.output, l) += t.coeff * y[k] * y[m];
    g(t.output, m) += t.coeff * y[k] * y[l];
  }
  return g;
}

bool DirectionalCubic::is_scalar_cubic(double* lambda) const {
  if (n_wave_ != 1) return false;
  double sum = 0.0;
  for (const auto& t : terms_) sum += t.coeff;
  if (lambda) *lambda = sum;
  return true;
}

ReducedForm::ReducedForm(int n_wave, std::vector<std::vector<ReducedMonomial>> outputs)
    : n_wave_(n_wave), outputs_(std::move(outputs)) {
  if (static_cast<int>(outputs_.size()) != n_wave_)
    throw ArgumentError("reduced form needs one monomial list per wave output");
}

bool ReducedForm::empty() const {
  return std::all_of(outputs_.begin(), outputs_.end(), [](const auto& o) { return o.empty(); });
}

DirectionalCubic ReducedForm::at(const Direction& omega) const {
  const auto hat = omega.hat();
  std::map<std::pair<int, std::array<int, 3>>, double> merged;
  for (int j = 0; j < n_wave_; ++j) {
    for (const auto& mono : outputs_[j]) {
      const double w = mono.coeff * hat[mono.a[0]] * hat[mono.a[1]] * hat[mono.a[2]];
      merged[{j, mono.y}] += w;
    }
  }
  std::vector<DirectionalCubic::Term> terms;
  for (const auto& [key, c] : merged)
    if (c != 0.0) terms.push_back({key.first, key.second, c});
  return DirectionalCubic(n_wave_, std::move(terms));
}

std::vector<double> ReducedForm::evaluate(const Direction& omega, std::span<const double> y) const {
  if (static_cast<int>(y.size()) != n_wave_)
    throw ArgumentError("Y must have N1 = " + std::to_string(n_wave_) + " entries");
  const auto hat = omega.hat();
  std::vector<double> out(n_wave_, 0.0);
  for (int j = 0; j < n_wave_; ++j)
    for (const auto& m : outputs_[j])
      out[j] += m.coeff * hat[m.a[0]] * hat[m.a[1]] * hat[m.a[2]] * y[m.y[0]] * y[m.y[1]] *
                y[m.y[2]];
  return out;
}

ReducedForm reduced_form(const SystemSpec& spec) {
  const int n0 = spec.n_kg();
  std::vector<std::vector<ReducedMonomial>> outputs(spec.n_wave());
  const auto parts = classify_parts(spec);
  for (const auto& [key, c] : parts.ww.entries()) {
    if (!spec.is_wave(key.output)) continue;
    ReducedMonomial m;
    for (int i = 0; i < 3; ++i) {
      m.y[i] = key.factors[i].component - n0;
      m.a[i] = coordinate_index(key.factors[i].deriv);
    }
    m.coeff = c;
    outputs[key.output - n0].push_back(m);
  }
  return ReducedForm(spec.n_wave(), std::move(outputs));
}

Eigen::MatrixXd reduced_jacobian(const SystemSpec& spec, const Direction& omega,
                                 std::span<const double> y) {
  return reduced_form(spec).at(omega).jacobian(y);
}

}  // namespace kmswkg
