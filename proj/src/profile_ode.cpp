#include "kmswkg/profile_ode.hpp"

#include <algorithm>
#include <cmath>

#include "kmswkg/parallel.hpp"

namespace kmswkg {

double t0_of_sigma(double sigma) { return std::max(-2.0 * sigma, 2.0); }

RayCoords RayCoords::make(double sigma, const Direction& direction) {
  return RayCoords{sigma, direction, t0_of_sigma(sigma)};
}

Forcing Forcing::callback(Callback f) {
  Forcing h;
  h.fn_ = std::move(f);
  return h;
}

Forcing Forcing::sampled(std::vector<double> times, std::vector<std::vector<double>> values) {
  if (times.empty() || times.size() != values.size())
    throw ArgumentError("sampled forcing needs matching, nonempty times and values");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ArgumentError("sampled forcing times must increase");
  Forcing h;
  h.times_ = std::move(times);
  h.values_ = std::move(values);
  return h;
}

void Forcing::evaluate(double t, std::span<double> out) const {
  if (fn_) {
    const auto v = fn_(t);
    if (v.size() != out.size()) throw ArgumentError("forcing callback returned wrong dimension");
    std::copy(v.begin(), v.end(), out.begin());
  } else if (!times_.empty()) {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin() || it == times_.end()) {
      const auto& v = (it == times_.begin()) ? values_.front() : values_.back();
      if (v.size() != out.size()) throw ArgumentError("sampled forcing has wrong dimension");
      std::copy(v.begin(), v.end(), out.begin());
    } else {
      const std::size_t i = static_cast<std::size_t>(it - times_.begin());
      const double s = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
      const auto& a = values_[i - 1];
      const auto& b = values_[i];
      if (a.size() != out.size()) throw ArgumentError("sampled forcing has wrong dimension");
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = (1.0 - s) * a[k] + s * b[k];
    }
  } else {
    std::fill(out.begin(), out.end(), 0.0);
  }
  for (double x : out)
    if (!std::isfinite(x)) throw ArgumentError("forcing produced a nonfinite value");
}

namespace {

using Rhs = std::function<void(double t, const std::vector<double>& y, std::vector<double>& dy)>;
using Observer = std::function<void(double t, const std::vector<double>& y)>;

struct AdaptiveResult {
  bool blew_up = false;
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
};

// Dormand–Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

/// Integrates y' = f(x, y) from x0 to x_end in the integration variable x,
/// reporting every accepted step. `stops` are hit exactly.
AdaptiveResult dopri5(const Rhs& f, double x0, std::vector<double> y, double x_end,
                      const StepControl& ctl, std::vector<double> stops,
                      const std::function<double(double)>& to_time, const Observer& observe) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
  std::sort(stops.begin(), stops.end());
  std::erase_if(stops, [&](double s) { return !(s > x0 && s < x_end); });
  stops.push_back(x_end);
  std::size_t next_stop = 0;

  double x = x0;
  f(x, y, k1);
  double h = std::min({(x_end - x0) * 1e-3, ctl.max_step, 1e-2 * std::max(1.0, std::abs(x0))});
  {
    double ynorm = 0.0, fnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = ctl.atol + ctl.rtol * std::abs(y[i]);
      ynorm = std::max(ynorm, std::abs(y[i]) / sc);
      fnorm = std::max(fnorm, std::abs(k1[i]) / sc);
    }
    if (fnorm > 0.0 && ynorm > 0.0) h = std::min(h, 0.01 * ynorm / fnorm);
    h = std::max(h, 1e-12 * std::max(1.0, std::abs(x0)));
  }
  observe(to_time(x), y);
  AdaptiveResult res;
  while (x < x_end) {
    const double target = stops[next_stop];
    bool hits = false;
    double hs = std::min(h, ctl.max_step);
    if (x + hs >= target) {
      hs = target - x;
      hits = true;
    }
    if (hs < 1e-14 * std::max(1.0, std::abs(x))) {
      res.blew_up = true;
      res.blowup_time = to_time(x);
      return res;
    }
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * a21 * k1[i];
    f(x + c2 * hs, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    f(x + c3 * hs, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(x + c4 * hs, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(x + c5 * hs, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double xnew = hits ? target : x + hs;
    f(xnew, tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(xnew, ynew, k7);
    double err = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(ynew[i])) finite = false;
      const double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = ctl.atol + ctl.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / static_cast<double>(std::max<std::size_t>(n, 1)));
    if (!finite || !std::isfinite(err)) {
      h = 0.2 * hs;
      continue;
    }
    if (err <= 1.0) {
      x = xnew;
      y.swap(ynew);
      k1.swap(k7);
      if (hits) ++next_stop;
      double ymax = 0.0;
      for (double v : y) ymax = std::max(ymax, std::abs(v));
      observe(to_time(x), y);
      if (ymax > ctl.blowup_threshold) {
        res.blew_up = true;
        res.blowup_time = to_time(x);
        return res;
      }
      const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h = hs * std::clamp(fac, 0.2, 5.0);
    } else {
      h = hs * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
    }
  }
  return res;
}

struct Integration {
  std::vector<double> times;
  std::vector<std::vector<double>> values;
  AdaptiveResult status;
};

/// Runs the ODE dW/dt = g(t, W) in t or in s = ln t.
Integration integrate(const std::function<void(double, const std::vector<double>&, std::vector<double>&)>& g,
                      double t_start, std::vector<double> w0, double t_end, const StepControl& ctl) {
  Integration out;
  auto observe = [&](double t, const std::vector<double>& y) {
    out.times.push_back(t);
    out.values.push_back(y);
  };
  if (!ctl.log_time) {
    out.status = dopri5(g, t_start, std::move(w0), t_end, ctl, ctl.stop_times,
                        [](double x) { return x; }, observe);
  } else {
    Rhs fs = [&](double s, const std::vector<double>& y, std::vector<double>& dy) {
      const double t = std::exp(s);
      g(t, y, dy);
      for (auto& d : dy) d *= t;
    };
    std::vector<double> stops;
    for (double st : ctl.stop_times) stops.push_back(std::log(st));
    StepControl c = ctl;
    if (std::isfinite(ctl.max_step)) c.max_step = ctl.max_step / t_end;
    out.status = dopri5(fs, std::log(t_start), std::move(w0), std::log(t_end), c, stops,
                        [t_start, t_end](double s) {
                          const double t = std::exp(s);
                          return std::clamp(t, t_start, t_end);
                        },
                        observe);
  }
  return out;
}

}  // namespace

ProfileTrajectory integrate_profile(const SystemSpec& spec, const RayCoords& ray,
                                    std::span<const double> w0, double t_end,
                                    const Forcing& forcing, const KmsCertificate* j,
                                    const StepControl& control) {
  const int n1 = spec.n_wave();
  if (static_cast<int>(w0.size()) != n1)
    throw ArgumentError("initial profile must have N1 = " + std::to_string(n1) + " entries");
  for (double x : w0)
    if (!std::isfinite(x)) throw ArgumentError("initial profile must be finite");
  const double t_start = std::isnan(control.t_start) ? ray.t0 : control.t_start;
  if (!(t_start > 0.0)) throw ArgumentError("profile start time must be positive");
  if (!(t_end > t_start)) throw ArgumentError("t_end must exceed the start time");
  if (j && j->dimension() != n1) throw ArgumentError("certificate dimension mismatch");

  const auto cubic = reduced_form(spec).at(ray.direction);
  std::vector<double> hbuf(n1);
  auto g = [&](double t, const std::vector<double>& w, std::vector<double>& dw) {
    cubic.evaluate(w.data(), dw.data());
    for (int k = 0; k < n1; ++k) dw[k] *= -0.5 / t;
    if (!forcing.is_none()) {
      forcing.evaluate(t, hbuf);
      for (int k = 0; k < n1; ++k) dw[k] += hbuf[k];
    }
  };
  auto run = integrate(g, t_start, std::vector<double>(w0.begin(), w0.end()), t_end, control);

  ProfileTrajectory traj;
  traj.ray = ray;
  traj.times = std::move(run.times);
  traj.values = std::move(run.values);
  traj.blew_up = run.status.blew_up;
  traj.blowup_time = run.status.blowup_time;
  if (!forcing.is_none()) {
    for (double t : traj.times) {
      std::vector<double> h(n1);
      forcing.evaluate(t, h);
      traj.forcing.push_back(std::move(h));
    }
  }
  if (j) traj.lyapunov = lyapunov_series(traj, *j);
  return traj;
}

ProfileTrajectory integrate_variational(const SystemSpec& spec, const ProfileTrajectory& base,
                                        std::span<const double> w_alpha0, const Forcing& h_alpha,
                                        const StepControl& control) {
  const int n1 = spec.n_wave();
  if (static_cast<int>(w_alpha0.size()) != n1)
    throw ArgumentError("variational initial value must have N1 entries");
  if (base.times.size() < 2) throw ArgumentError("base trajectory needs at least two samples");
  const auto cubic = reduced_form(spec).at(base.ray.direction);
  const auto& bt = base.times;
  std::vector<double> wb(n1), hbuf(n1);
  auto base_at = [&](double t) {
    auto it = std::upper_bound(bt.begin(), bt.end(), t);
    std::size_t i = it == bt.begin() ? 1 : static_cast<std::size_t>(it - bt.begin());
    i = std::min(i, bt.size() - 1);
    const double s = std::clamp((t - bt[i - 1]) / (bt[i] - bt[i - 1]), 0.0, 1.0);
    for (int k = 0; k < n1; ++k) wb[k] = (1.0 - s) * base.values[i - 1][k] + s * base.values[i][k];
  };
  auto g = [&](double t, const std::vector<double>& w, std::vector<double>& dw) {
    base_at(t);
    const Eigen::MatrixXd gm = cubic.jacobian(wb);
    for (int r = 0; r < n1; ++r) {
      double acc = 0.0;
      for (int c = 0; c < n1; ++c) acc += gm(r, c) * w[c];
      dw[r] = -0.5 * acc / t;
    }
    if (!h_alpha.is_none()) {
      h_alpha.evaluate(t, hbuf);
      for (int k = 0; k < n1; ++k) dw[k] += hbuf[k];
    }
  };
  StepControl ctl = control;
  ctl.t_start = bt.front();
  // Land on every base sample so the piecewise-linear coefficient has no kink inside a step.
  ctl.stop_times.insert(ctl.stop_times.end(), bt.begin(), bt.end());
  auto run = integrate(g, bt.front(), std::vector<double>(w_alpha0.begin(), w_alpha0.end()),
                       bt.back(), ctl);
  ProfileTrajectory traj;
  traj.ray = base.ray;
  traj.times = std::move(run.times);
  traj.values = std::move(run.values);
  traj.blew_up = run.status.blew_up;
  traj.blowup_time = run.status.blowup_time;
  return traj;
}

double explicit_cubic_profile(double a0, double t0, double t) {
  return a0 / std::sqrt(1.0 + a0 * a0 * std::log(t / t0));
}

double explicit_scalar_profile(double lambda, double a0, double t0, double t) {
  const double d = 1.0 + lambda * a0 * a0 * std::log(t / t0);
  if (!(d > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return a0 / std::sqrt(d);
}

std::vector<double> lyapunov_series(const ProfileTrajectory& trajectory, const KmsCertificate& j) {
  const Eigen::MatrixXd jm = j.at(trajectory.ray.direction.angle());
  std::vector<double> out;
  out.reserve(trajectory.values.size());
  for (const auto& w : trajectory.values) {
    if (static_cast<Eigen::Index>(w.size()) != jm.rows())
      throw ArgumentError("lyapunov_series: trajectory and certificate dimensions differ");
    Eigen::Map<const Eigen::VectorXd> wv(w.data(), jm.rows());
    out.push_back(wv.dot(jm * wv));
  }
  return out;
}

std::vector<ProfileTrajectory> integrate_batch(const SystemSpec& spec, const std::vector<RayJob>& jobs,
                                               const KmsCertificate* j, const StepControl& control,
                                               int threads) {
  std::vector<ProfileTrajectory> out(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      out[i] = integrate_profile(spec, jobs[i].ray, jobs[i].w0, jobs[i].t_end, Forcing::none(), j,
                                 control);
  });
  return out;
}

}  // namespace kmswkg
