#include "kmswkg/ray.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "kmswkg/diagnostics.hpp"

namespace kmswkg {

bool in_light_cone_region(double t, double r, double support_radius) {
  return 1.0 <= 0.5 * t && 0.5 * t <= r && r <= t + support_radius;
}

RayProbe::RayProbe(const SystemSpec& spec, const Grid& grid, const FieldState& state)
    : spec_(&spec), grid_(&grid), t_(state.t), reduced_(reduced_form(spec)), kernel_(spec) {
  const int n = spec.n_total();
  u_ = state.u;
  ut_ = state.ut;
  d1_.resize(n);
  d2_.resize(n);
  omega2_.assign(n, {});
  for (int j = 0; j < n; ++j) spatial_gradient(grid, u_[j], d1_[j], d2_[j]);
  if (grid.mode() == GridMode::planar2d) {
    std::vector<double> h11, h12, h22;
    for (int j = spec.n_kg(); j < n; ++j) {
      spatial_hessian(grid, u_[j], h11, h12, h22);
      auto& o = omega2_[j];
      o.resize(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x1 = grid.x1(k), x2 = grid.x2(k);
        o[k] = x1 * x1 * h22[k] - 2.0 * x1 * x2 * h12[k] + x2 * x2 * h11[k] - x1 * d1_[j][k] - x2 * d2_[j][k];
      }
    }
  }
}

RayRecord RayProbe::at(const RayCoords& ray) const {
  const SystemSpec& spec = *spec_;
  const Grid& grid = *grid_;
  const int n = spec.n_total();
  const double t = t_;
  const double r = t + ray.sigma;
  const double w1 = ray.direction.omega1(), w2 = ray.direction.omega2();
  const double x1 = r * w1, x2 = r * w2;
  const bool radial = grid.mode() == GridMode::radial;
  auto sample = [&](const std::vector<double>& f) { return radial ? interpolate(grid, f, r, 0.0) : interpolate(grid, f, x1, x2); };

  std::vector<double> v(std::max(spec.n_kg(), 1)), du(3 * n), f(n), omega2(n, 0.0);
  std::vector<std::array<double, 3>> grad(n);
  for (int j = 0; j < n; ++j) {
    const double u = sample(u_[j]), ut = sample(ut_[j]), a = sample(d1_[j]), b = sample(d2_[j]);
    if (j < spec.n_kg()) v[j] = u;
    du[3 * j] = ut;
    du[3 * j + 1] = a;
    du[3 * j + 2] = b;
    grad[j] = radial ? std::array<double, 3>{ut, w1 * a, w2 * a} : std::array<double, 3>{ut, a, b};
    if (!radial && spec.is_wave(j)) omega2[j] = sample(omega2_[j]);
  }
  kernel_.evaluate(v.data(), du.data(), f.data());

  RayRecord rec;
  rec.t = t;
  rec.r = r;
  const double sr = std::sqrt(r);
  for (int j = spec.n_kg(); j < n; ++j) {
    const double w = sample(u_[j]);
    const auto& g = grad[j];
    const double wr = w1 * g[1] + w2 * g[2];
    rec.w.push_back(0.5 * (0.5 * w / sr + sr * (wr - g[0])));
    rec.sqrt_r_dw.push_back({sr * g[0], sr * g[1], sr * g[2]});
    const double gam = std::abs(x1 * g[0] + t * g[1]) + std::abs(x2 * g[0] + t * g[2]) +
                       std::abs(x1 * g[2] - x2 * g[1]) + std::abs(g[0]) + std::abs(g[1]) + std::abs(g[2]);
    rec.bracket.push_back(std::abs(w) + gam +
                          bracket(t - r) * (std::abs(g[0]) + std::abs(g[1]) + std::abs(g[2])));
  }
  const auto fred = reduced_.evaluate(ray.direction, rec.w);
  for (int j = spec.n_kg(); j < n; ++j) {
    const int l = j - spec.n_kg();
    const double w = sample(u_[j]);
    rec.h.push_back(-0.5 * (sr * f[j] - fred[l] / t) - (4.0 * omega2[j] + w) / (8.0 * r * sr));
  }
  return rec;
}

RaySample extract_ray(const SystemSpec& spec, const Grid& grid, const std::vector<FieldState>& history,
                      const RayCoords& ray, const std::vector<double>& times, double support_radius) {
  RaySample out;
  out.ray = ray;
  if (history.empty()) {
    out.notices.push_back("no stored states");
    return out;
  }
  const double r_limit = (grid.mode() == GridMode::radial ? grid.n() - 2 : grid.center() - 2) * grid.h();
  std::map<std::size_t, RayProbe> probes;
  for (double tau : times) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < history.size(); ++i)
      if (std::abs(history[i].t - tau) < std::abs(history[best].t - tau)) best = i;
    const double t = history[best].t;
    const double r = t + ray.sigma;
    if (!in_light_cone_region(t, r, support_radius)) {
      out.notices.push_back("skipped t = " + std::to_string(t) + ", r = " + std::to_string(r) +
                            ": outside the region 1 <= t/2 <= r <= t + R");
      continue;
    }
    if (r > r_limit) {
      out.notices.push_back("skipped t = " + std::to_string(t) + ": r = " + std::to_string(r) + " is beyond the grid");
      continue;
    }
    auto it = probes.find(best);
    if (it == probes.end()) it = probes.emplace(best, RayProbe(spec, grid, history[best])).first;
    out.records.push_back(it->second.at(ray));
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const RayRecord& a, const RayRecord& b) { return a.t < b.t; });
  return out;
}

double polar_residual(const std::function<double(double, double, double)>& phi, const PolarProbe& p) {
  const double h = p.h;
  auto psi = [&](double t, double r, double th) { return std::sqrt(r) * phi(t, r * std::cos(th), r * std::sin(th)); };
  double sup = 0.0;
  for (int i = 0; i <= p.n_r; ++i) {
    const double r = p.r_min + (p.r_max - p.r_min) * i / p.n_r;
    for (int l = 0; l < p.n_theta; ++l) {
      const double th = 2.0 * std::numbers::pi * l / p.n_theta;
      const double t = p.t;
      const double x1 = r * std::cos(th), x2 = r * std::sin(th);
      const double c = phi(t, x1, x2);
      const double box = (phi(t + h, x1, x2) - 2.0 * c + phi(t - h, x1, x2)) / (h * h) -
                         (phi(t, x1 + h, x2) - 2.0 * c + phi(t, x1 - h, x2)) / (h * h) -
                         (phi(t, x1, x2 + h) - 2.0 * c + phi(t, x1, x2 - h)) / (h * h);
      const double lhs = std::sqrt(r) * box;
      const double p0 = psi(t, r, th);
      const double pp = (psi(t + h, r, th) - 2.0 * p0 + psi(t - h, r, th)) / (h * h) -
                        (psi(t, r + h, th) - 2.0 * p0 + psi(t, r - h, th)) / (h * h);
      const double dth = h / r;
      const double om2 = (phi(t, r * std::cos(th + dth), r * std::sin(th + dth)) - 2.0 * c +
                          phi(t, r * std::cos(th - dth), r * std::sin(th - dth))) /
                         (dth * dth);
      const double rhs = pp - (4.0 * om2 + c) / (4.0 * r * std::sqrt(r));
      sup = std::max(sup, std::abs(lhs - rhs));
    }
  }
  return sup;
}

}  // namespace kmswkg
