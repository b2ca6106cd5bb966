#include "kmswkg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kmswkg/errors.hpp"

namespace kmswkg {

void WeightSpec::validate() const {
  if (!(rho > 0.0 && rho < 0.5)) throw ConfigError("weights.rho", "constraint 0 < ρ < 1/2 violated");
  if (!(kappa > 0.0)) throw ConfigError("weights.kappa", "constraint κ > 0 violated");
  if (!(8.0 * kappa < rho))
    throw ConfigError("weights.kappa", "constraint 8κ < ρ violated (8κ = " + std::to_string(8.0 * kappa) +
                                           ", ρ = " + std::to_string(rho) + ")");
  if (s < 1 || s > 2)
    throw ConfigError("weights.s", "derivative order must be 1 or 2 on the grid; higher orders are too noisy");
}

void NormSeries::push(double t, double v) {
  times.push_back(t);
  values.push_back(v);
}

std::string_view to_string(GammaField g) {
  switch (g) {
    case GammaField::L1: return "L1";
    case GammaField::L2: return "L2";
    case GammaField::Omega: return "Omega";
    case GammaField::d0: return "d0";
    case GammaField::d1: return "d1";
    case GammaField::d2: return "d2";
  }
  return "d0";
}

std::string_view to_string(FitModel m) { return m == FitModel::power ? "power" : "log_power"; }

Poly Poly::constant(double c) {
  Poly p;
  p.add({0, 0, 0}, c);
  return p;
}

Poly Poly::variable(int index) {
  Poly p;
  Exp e{0, 0, 0};
  e[index] = 1;
  p.add(e, 1.0);
  return p;
}

void Poly::add(const Exp& e, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  for (const auto& [e, c] : o.terms_) r.add(e, c);
  return r;
}

Poly Poly::operator*(const Poly& o) const {
  Poly r;
  for (const auto& [e1, c1] : terms_)
    for (const auto& [e2, c2] : o.terms_) r.add({e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]}, c1 * c2);
  return r;
}

Poly Poly::derivative(int index) const {
  Poly r;
  for (const auto& [e, c] : terms_) {
    if (e[index] == 0) continue;
    Exp d = e;
    --d[index];
    r.add(d, c * e[index]);
  }
  return r;
}

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

}  // namespace

double Poly::operator()(double t, double x1, double x2) const {
  double s = 0.0;
  for (const auto& [e, c] : terms_) s += c * ipow(t, e[0]) * ipow(x1, e[1]) * ipow(x2, e[2]);
  return s;
}

void DiffOp::add(const Multi& beta, const Poly& p) {
  if (p.is_zero()) return;
  auto it = terms_.find(beta);
  if (it == terms_.end()) {
    terms_.emplace(beta, p);
    return;
  }
  it->second = it->second + p;
  if (it->second.is_zero()) terms_.erase(it);
}

DiffOp DiffOp::identity() {
  DiffOp d;
  d.add({0, 0, 0}, Poly::constant(1.0));
  return d;
}

DiffOp DiffOp::partial(int a) {
  DiffOp d;
  Multi b{0, 0, 0};
  b[a] = 1;
  d.add(b, Poly::constant(1.0));
  return d;
}

DiffOp DiffOp::gamma(GammaField g) {
  DiffOp d;
  const Poly t = Poly::variable(0), x1 = Poly::variable(1), x2 = Poly::variable(2);
  switch (g) {
    case GammaField::L1:
      d.add({1, 0, 0}, x1);
      d.add({0, 1, 0}, t);
      break;
    case GammaField::L2:
      d.add({1, 0, 0}, x2);
      d.add({0, 0, 1}, t);
      break;
    case GammaField::Omega:
      d.add({0, 0, 1}, x1);
      d.add({0, 1, 0}, x2 * Poly::constant(-1.0));
      break;
    case GammaField::d0: return partial(0);
    case GammaField::d1: return partial(1);
    case GammaField::d2: return partial(2);
  }
  return d;
}

DiffOp DiffOp::then(GammaField g) const {
  const DiffOp first = gamma(g);
  DiffOp r;
  for (const auto& [beta, p] : terms_)
    for (const auto& [unit, c] : first.terms_) {
      const int k = unit[0] == 1 ? 0 : unit[1] == 1 ? 1 : 2;
      r.add(beta, c * p.derivative(k));
      Multi b = beta;
      ++b[k];
      r.add(b, c * p);
    }
  return r;
}

int DiffOp::order() const {
  int o = 0;
  for (const auto& [b, p] : terms_) o = std::max(o, b[0] + b[1] + b[2]);
  return o;
}

Jet::Jet(const Grid& grid, const std::vector<double>& phi, const std::vector<double>& phi_t,
         const std::vector<double>* phi_tt) {
  if (phi.size() != grid.size() || phi_t.size() != grid.size() || (phi_tt && phi_tt->size() != grid.size()))
    throw ArgumentError("field does not match the grid");
  fields_[{0, 0, 0}] = phi;
  fields_[{1, 0, 0}] = phi_t;
  spatial_gradient(grid, phi, fields_[{0, 1, 0}], fields_[{0, 0, 1}]);
  spatial_gradient(grid, phi_t, fields_[{1, 1, 0}], fields_[{1, 0, 1}]);
  spatial_hessian(grid, phi, fields_[{0, 2, 0}], fields_[{0, 1, 1}], fields_[{0, 0, 2}]);
  if (phi_tt) fields_[{2, 0, 0}] = *phi_tt;
}

const std::vector<double>& Jet::at(const DiffOp::Multi& beta) const {
  auto it = fields_.find(beta);
  if (it == fields_.end())
    throw ArgumentError("derivative (" + std::to_string(beta[0]) + "," + std::to_string(beta[1]) + "," +
                        std::to_string(beta[2]) + ") is not available from this jet");
  return it->second;
}

std::vector<double> apply_op(const Grid& grid, double t, const DiffOp& op, const Jet& jet) {
  std::vector<double> out(grid.size(), 0.0);
  for (const auto& [beta, p] : op.terms()) {
    const auto& f = jet.at(beta);
    if (p.terms().size() == 1 && p.terms().begin()->first == Poly::Exp{0, 0, 0}) {
      const double c = p.terms().begin()->second;
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += c * f[k];
      continue;
    }
    for (std::size_t k = 0; k < out.size(); ++k)
      if (f[k] != 0.0) out[k] += p(t, grid.x1(k), grid.x2(k)) * f[k];
  }
  return out;
}

std::vector<double> apply_gamma(const Grid& grid, double t, const std::vector<double>& phi,
                                const std::vector<double>& phi_t, GammaField which,
                                std::vector<std::string>* notices) {
  if (phi.size() != grid.size() || phi_t.size() != grid.size())
    throw ArgumentError("field does not match the grid");
  if (which == GammaField::Omega && grid.mode() == GridMode::radial) {
    if (notices) notices->push_back("Omega applied to radial data: returning the zero field");
    return std::vector<double>(grid.size(), 0.0);
  }
  std::vector<double> d1, d2;
  spatial_gradient(grid, phi, d1, d2);
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double x1 = grid.x1(k), x2 = grid.x2(k);
    switch (which) {
      case GammaField::L1: out[k] = x1 * phi_t[k] + t * d1[k]; break;
      case GammaField::L2: out[k] = x2 * phi_t[k] + t * d2[k]; break;
      case GammaField::Omega: out[k] = x1 * d2[k] - x2 * d1[k]; break;
      case GammaField::d0: out[k] = phi_t[k]; break;
      case GammaField::d1: out[k] = d1[k]; break;
      case GammaField::d2: out[k] = d2[k]; break;
    }
  }
  return out;
}

std::vector<DiffOp> gamma_words(int order, const DiffOp& base) {
  std::vector<DiffOp> words{base};
  std::size_t begin = 0;
  for (int level = 0; level < order; ++level) {
    const std::size_t end = words.size();
    for (std::size_t i = begin; i < end; ++i)
      for (GammaField g : all_gamma_fields) words.push_back(words[i].then(g));
    begin = end;
  }
  return words;
}

std::vector<double> gamma_norm(const Grid& grid, double t, const Jet& jet, int s, const DiffOp& base) {
  std::vector<double> out(grid.size(), 0.0);
  for (const auto& op : gamma_words(s, base)) {
    const auto f = apply_op(grid, t, op, jet);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += std::abs(f[k]);
  }
  return out;
}

NormBundle weighted_norms(const SystemSpec& spec, const Grid& grid, const FieldState& state,
                          const WeightSpec& weights) {
  weights.validate();
  const double t = state.t;
  const int s = weights.s;
  NormBundle b;
  b.t = t;
  b.notes.push_back("grid order substitution: |v|_{I+1} -> |v|_" + std::to_string(s) + ", |dw|_I -> |dw|_" +
                    std::to_string(s - 1));
  std::vector<std::vector<double>> acc;
  if (s == 2) acc = acceleration(spec, grid, state);
  auto jet_of = [&](int j) { return Jet(grid, state.u[j], state.ut[j], s == 2 ? &acc[j] : nullptr); };

  const std::size_t n = grid.size();
  std::vector<double> v0(n, 0.0), v_s(n, 0.0), dw(n, 0.0), dw_high(n, 0.0), w_bracket(n, 0.0);
  double sup_kg = 0.0, sup_wave = 0.0, energy_kg = 0.0, energy_wave = 0.0;
  for (int j = 0; j < spec.n_total(); ++j) {
    const Jet jet = jet_of(j);
    if (!spec.is_wave(j)) {
      const auto f = gamma_norm(grid, t, jet, s);
      for (std::size_t k = 0; k < n; ++k) {
        v_s[k] += f[k];
        v0[k] += std::abs(state.u[j][k]);
      }
      sup_kg = std::max(sup_kg, state.sup_abs(j));
      energy_kg += discrete_energy(grid, state.u[j], state.ut[j], spec.masses()[j]);
      continue;
    }
    sup_wave = std::max(sup_wave, state.sup_abs(j));
    energy_wave += discrete_energy(grid, state.u[j], state.ut[j], 0.0);
    std::vector<double> d_low(n, 0.0), d_high(n, 0.0);
    for (int a = 0; a < 3; ++a) {
      const auto f0 = apply_op(grid, t, DiffOp::partial(a), jet);
      for (std::size_t k = 0; k < n; ++k) d_low[k] += std::abs(f0[k]);
      const auto fh = gamma_norm(grid, t, jet, s - 1, DiffOp::partial(a));
      for (std::size_t k = 0; k < n; ++k) d_high[k] += fh[k];
    }
    const auto w_s = gamma_norm(grid, t, jet, s);
    for (std::size_t k = 0; k < n; ++k) {
      dw[k] += d_low[k];
      dw_high[k] += d_high[k];
      w_bracket[k] += w_s[k] + bracket(t - grid.r(k)) * d_high[k];
    }
  }
  double kg_plain = 0.0, kg_weighted = 0.0, wave_weighted = 0.0, wave_high = 0.0, sup_dw = 0.0, br = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = grid.r(k);
    const double wave_weight = std::sqrt(bracket(r)) * std::pow(bracket(t - r), 1.0 - weights.rho);
    kg_plain = std::max(kg_plain, bracket(t + r) * v0[k]);
    kg_weighted = std::max(kg_weighted, bracket(t + r) * v_s[k]);
    wave_weighted = std::max(wave_weighted, wave_weight * dw[k]);
    wave_high = std::max(wave_high, std::pow(bracket(t + r), -weights.kappa) * wave_weight * dw_high[k]);
    sup_dw = std::max(sup_dw, dw[k]);
    br = std::max(br, w_bracket[k]);
  }
  b.values["kg_weighted"] = kg_weighted;
  b.values["kg_weighted_0"] = kg_plain;
  b.values["wave_weighted"] = wave_weighted;
  b.values["wave_weighted_high"] = wave_high;
  b.values["E"] = kg_weighted + wave_weighted + wave_high;
  b.values["energy_kg"] = std::sqrt(energy_kg);
  b.values["energy_wave"] = std::sqrt(energy_wave);
  b.values["energy"] = std::sqrt(energy_kg + energy_wave);
  b.values["sup_kg"] = sup_kg;
  b.values["sup_wave"] = sup_wave;
  b.values["sup_dw"] = sup_dw;
  b.values["bracket_wave"] = br;
  return b;
}

FitResult fit_decay_exponent(const NormSeries& series, double t_a, double t_b, FitModel model) {
  if (series.times.size() != series.values.size())
    throw ArgumentError("series times and values differ in length");
  if (!(t_a > 0.0) || !(t_b >= 2.0 * t_a))
    throw ArgumentError("fit window needs 0 < t_a and t_b >= 2 t_a");
  if (model == FitModel::log_power && !(t_a > 1.0))
    throw ArgumentError("log_power fits need t_a > 1");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const double t = series.times[i];
    if (t < t_a || t > t_b) continue;
    const double v = series.values[i];
    if (!(v > 0.0) || !std::isfinite(v))
      throw ArgumentError("series '" + series.name + "' has a nonpositive or nonfinite value at sample " +
                          std::to_string(i) + " (t = " + std::to_string(t) + ", value = " + std::to_string(v) +
                          ")");
    xs.push_back(model == FitModel::power ? std::log(t) : std::log(std::log(t)));
    ys.push_back(std::log(v));
  }
  const std::size_t n = xs.size();
  if (n < 3) throw ArgumentError("fit window holds fewer than three samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  FitResult r;
  r.model = model;
  r.t_a = t_a;
  r.t_b = t_b;
  r.n = static_cast<int>(n);
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - r.intercept - r.slope * xs[i];
    sse += e * e;
  }
  r.std_error = std::sqrt(sse / (n - 2) / sxx);
  return r;
}

std::vector<double> null_form_q0(const Grid& grid, const std::vector<double>& phi,
                                 const std::vector<double>& phi_t, const std::vector<double>& psi,
                                 const std::vector<double>& psi_t) {
  const std::size_t n = grid.size();
  if (phi.size() != n || phi_t.size() != n || psi.size() != n || psi_t.size() != n)
    throw ArgumentError("null_form_q0: fields do not share the grid");
  std::vector<double> a1, a2, b1, b2;
  spatial_gradient(grid, phi, a1, a2);
  spatial_gradient(grid, psi, b1, b2);
  std::vector<double> q(n);
  for (std::size_t k = 0; k < n; ++k) q[k] = phi_t[k] * psi_t[k] - a1[k] * b1[k] - a2[k] * b2[k];
  return q;
}

namespace {

/// Evaluates `kernel` at every node of the state.
std::vector<std::vector<double>> kernel_fields(const RhsKernel& kernel, const SystemSpec& spec, const Grid& grid,
                                               const FieldState& state) {
  const int n = spec.n_total();
  std::vector<std::vector<double>> d1(n), d2(n);
  for (int j = 0; j < n; ++j) spatial_gradient(grid, state.u[j], d1[j], d2[j]);
  std::vector<std::vector<double>> out(n, std::vector<double>(grid.size()));
  std::vector<double> v(std::max(spec.n_kg(), 1)), du(3 * n), f(n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (int j = 0; j < spec.n_kg(); ++j) v[j] = state.u[j][k];
    for (int j = 0; j < n; ++j) {
      du[3 * j] = state.ut[j][k];
      du[3 * j + 1] = d1[j][k];
      du[3 * j + 2] = d2[j][k];
    }
    kernel.evaluate(v.data(), du.data(), f.data());
    for (int j = 0; j < n; ++j) out[j][k] = f[j];
  }
  return out;
}

std::vector<std::vector<double>> wave_part_fields(const SystemSpec& spec, const Grid& grid, const FieldState& state) {
  return kernel_fields(RhsKernel::from_tensor(spec, classify_parts(spec).ww), spec, grid, state);
}

void check_state(const SystemSpec& spec, const Grid& grid, const FieldState& s) {
  if (s.n_components() != spec.n_total()) throw ArgumentError("state has the wrong number of components");
  for (int j = 0; j < spec.n_total(); ++j)
    if (s.u[j].size() != grid.size() || s.ut[j].size() != grid.size())
      throw ArgumentError("state does not match the grid");
}

bool interior(const Grid& grid, std::size_t k) {
  const int n = grid.n();
  if (grid.mode() == GridMode::radial) return static_cast<int>(k) < n - 2;
  const int i = static_cast<int>(k % n), j = static_cast<int>(k / n);
  return i >= 2 && j >= 2 && i < n - 2 && j < n - 2;
}

double time_step_of(const FieldState& prev, const FieldState& cur, const FieldState& next) {
  const double dt = cur.t - prev.t;
  if (!(dt > 0.0) || std::abs((next.t - cur.t) - dt) > 1e-9 * dt)
    throw ArgumentError("states must be consecutive and equally spaced in time");
  return dt;
}

}  // namespace

std::vector<std::vector<double>> tilde_transform(const SystemSpec& spec, const Grid& grid, const FieldState& state,
                                                 const std::vector<int>& components) {
  if (spec.n_kg() < 1) throw ArgumentError("tilde_transform needs at least one Klein-Gordon component");
  check_state(spec, grid, state);
  std::vector<int> list = components;
  if (list.empty())
    for (int j = 0; j < spec.n_kg(); ++j) list.push_back(j);
  for (int j : list)
    if (j < 0 || j >= spec.n_total() || spec.is_wave(j))
      throw ArgumentError("tilde_transform: component " + std::to_string(j) + " is not a Klein-Gordon component");
  const auto fw = wave_part_fields(spec, grid, state);
  std::vector<std::vector<double>> out;
  for (int j : list) {
    const double m2 = spec.masses()[j] * spec.masses()[j];
    std::vector<double> vt(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) vt[k] = state.u[j][k] - fw[j][k] / m2;
    out.push_back(std::move(vt));
  }
  return out;
}

TildeResidual tilde_residual(const SystemSpec& spec, const Grid& grid, const FieldState& prev, const FieldState& cur,
                             const FieldState& next) {
  const double dt = time_step_of(prev, cur, next);
  const auto a = tilde_transform(spec, grid, prev);
  const auto b = tilde_transform(spec, grid, cur);
  const auto c = tilde_transform(spec, grid, next);
  const auto f = rhs_fields(spec, grid, cur);
  const auto fw = wave_part_fields(spec, grid, cur);
  TildeResidual res;
  std::vector<double> lap_t, lap_v;
  for (int j = 0; j < spec.n_kg(); ++j) {
    const double m2 = spec.masses()[j] * spec.masses()[j];
    laplacian(grid, b[j], lap_t);
    laplacian(grid, cur.u[j], lap_v);
    double sup_t = 0.0, sup_v = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (!interior(grid, k)) continue;
      const double box_t = (c[j][k] - 2.0 * b[j][k] + a[j][k]) / (dt * dt) - lap_t[k] + m2 * b[j][k];
      const double box_v = (next.u[j][k] - 2.0 * cur.u[j][k] + prev.u[j][k]) / (dt * dt) - lap_v[k] +
                           m2 * cur.u[j][k];
      sup_t = std::max(sup_t, std::abs(box_t - (f[j][k] - fw[j][k])));
      sup_v = std::max(sup_v, std::abs(box_v - f[j][k]));
    }
    res.transformed.push_back(sup_t);
    res.plain.push_back(sup_v);
  }
  return res;
}

double commutator_residual(const Grid& grid, const FieldState& prev, const FieldState& cur, const FieldState& next,
                           int component, GammaField which, double mass) {
  if (grid.mode() != GridMode::planar2d)
    throw ArgumentError("commutator_residual needs planar2d data");
  if (component < 0 || component >= cur.n_components()) throw ArgumentError("component out of range");
  const double dt = time_step_of(prev, cur, next);
  const auto a = apply_gamma(grid, prev.t, prev.u[component], prev.ut[component], which);
  const auto b = apply_gamma(grid, cur.t, cur.u[component], cur.ut[component], which);
  const auto c = apply_gamma(grid, next.t, next.u[component], next.ut[component], which);
  std::vector<double> lap;
  laplacian(grid, b, lap);
  double sup = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const int n = grid.n();
    const int i = static_cast<int>(k % n), j = static_cast<int>(k / n);
    if (i < 3 || j < 3 || i >= n - 3 || j >= n - 3) continue;
    const double box = (c[k] - 2.0 * b[k] + a[k]) / (dt * dt) - lap[k] + mass * mass * b[k];
    sup = std::max(sup, std::abs(box));
  }
  return sup;
}

double l2_norm(const Grid& grid, const std::vector<double>& f) {
  const auto w = quadrature_weights(grid);
  double s = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) s += w[k] * f[k] * f[k];
  if (grid.mode() == GridMode::radial) s *= 2.0 * std::numbers::pi;
  return std::sqrt(s);
}

double h1_norm(const Grid& grid, const std::vector<double>& f) {
  const std::vector<double> zero(grid.size(), 0.0);
  return std::sqrt(discrete_energy(grid, f, zero, 1.0));
}

double scattering_deficit(const Grid& grid, const std::vector<std::vector<double>>& v,
                          const std::vector<std::vector<double>>& v_t, const std::vector<std::vector<double>>& phi,
                          const std::vector<std::vector<double>>& phi_t) {
  if (v.size() != phi.size() || v_t.size() != phi_t.size() || v.size() != v_t.size())
    throw ArgumentError("scattering_deficit: component counts differ");
  double h1 = 0.0, l2 = 0.0;
  std::vector<double> d(grid.size()), dt(grid.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j].size() != grid.size() || phi[j].size() != grid.size() || v_t[j].size() != grid.size() ||
        phi_t[j].size() != grid.size())
      throw ArgumentError("scattering_deficit: fields do not share the grid");
    for (std::size_t k = 0; k < grid.size(); ++k) {
      d[k] = v[j][k] - phi[j][k];
      dt[k] = v_t[j][k] - phi_t[j][k];
    }
    const double a = h1_norm(grid, d), b = l2_norm(grid, dt);
    h1 += a * a;
    l2 += b * b;
  }
  return std::sqrt(h1) + std::sqrt(l2);
}

}  // namespace kmswkg
