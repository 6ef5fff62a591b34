#pragma once

// Identification of the quadratic drag model and the thrust calibration
// curve from logged runs.
//
// Coast-down speed follows v(t) = v0 / (1 + (c/m) v0 t), which is linear in
// reciprocal speed: 1/v = 1/v0 + (c/m) t. A reciprocal-linear regression
// seeds a Levenberg-Marquardt refinement of (c, v0) on the speed residuals
// themselves, so early (fast, accurate) samples are not down-weighted the
// way the reciprocal fit weights them. The same model identifies yaw drag
// from a spin-down when the moment of inertia is passed for the mass and
// angular rate for speed.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "modlattice/lattice.hpp"
#include "modlattice/trajectory.hpp"

namespace modlattice {

struct DragFit {
  double drag = 0.0;          // c, kg/m (or kg*m^2 for yaw)
  double v0 = 0.0;            // initial speed the fit extrapolates to
  double drag_std = 0.0;      // 1-sigma from the residual covariance
  double v0_std = 0.0;
  double rms_residual = 0.0;  // speed units
  int iterations = 0;
};

namespace detail {

// Straight-line least squares of 1/v on t.
inline std::pair<double, double> reciprocal_seed(const std::vector<double>& t,
                                                 const std::vector<double>& v, double mass) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  const auto n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double y = 1.0 / v[i];
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
  }
  const double denom = n * stt - st * st;
  if (denom <= 0.0) throw std::invalid_argument("fit_drag: samples do not span time");
  const double slope = (n * sty - st * sy) / denom;
  const double intercept = (sy - slope * st) / n;
  if (!(slope > 0.0) || !(intercept > 0.0))
    throw std::invalid_argument("fit_drag: data inconsistent with decaying speed");
  return {slope * mass, 1.0 / intercept};
}

}  // namespace detail

// Fits (drag, v0) of the coast-down model to positive speed samples by
// Levenberg-Marquardt, seeded with the reciprocal-linear estimate.
inline DragFit fit_drag(const std::vector<double>& t, const std::vector<double>& v, double mass) {
  if (t.size() != v.size()) throw std::invalid_argument("fit_drag: mismatched series");
  if (t.size() < 10) throw std::invalid_argument("fit_drag: need at least 10 samples");
  if (!(mass > 0.0)) throw std::invalid_argument("fit_drag: mass must be positive");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(v[i] > 0.0)) throw std::invalid_argument("fit_drag: speeds must be positive");
    if (i > 0 && !(t[i] > t[i - 1]))
      throw std::invalid_argument("fit_drag: times must be strictly increasing");
  }

  auto [c, v0] = detail::reciprocal_seed(t, v, mass);
  const auto n = static_cast<Eigen::Index>(t.size());

  const auto cost_of = [&](double c_, double v0_) {
    double sum = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double d = 1.0 + (c_ / mass) * v0_ * t[i];
      const double r = v[i] - v0_ / d;
      sum += r * r;
    }
    return sum;
  };

  double cost = cost_of(c, v0);
  double lambda = 1e-3;
  int iter = 0;
  Eigen::MatrixXd jac(n, 2);
  Eigen::VectorXd res(n);
  for (; iter < 200; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double d = 1.0 + (c / mass) * v0 * t[k];
      res[i] = v[k] - v0 / d;
      jac(i, 0) = -v0 * v0 * t[k] / (mass * d * d);  // d f / d c
      jac(i, 1) = 1.0 / (d * d);                     // d f / d v0
    }
    const Eigen::Matrix2d jtj = jac.transpose() * jac;
    const Eigen::Vector2d jtr = jac.transpose() * res;
    Eigen::Matrix2d damped = jtj;
    damped(0, 0) += lambda * jtj(0, 0);
    damped(1, 1) += lambda * jtj(1, 1);
    const Eigen::Vector2d step = damped.ldlt().solve(jtr);
    const double c_try = c + step[0];
    const double v0_try = v0 + step[1];
    const double cost_try =
        (c_try > 0.0 && v0_try > 0.0) ? cost_of(c_try, v0_try) : std::numeric_limits<double>::infinity();
    if (cost_try < cost) {
      const bool converged = std::abs(cost - cost_try) <= 1e-15 * (1.0 + cost) ||
                             step.norm() <= 1e-13 * std::hypot(c, v0);
      c = c_try;
      v0 = v0_try;
      cost = cost_try;
      lambda = std::max(lambda / 3.0, 1e-12);
      if (converged) break;
    } else {
      lambda *= 5.0;
      if (lambda > 1e12) break;
    }
  }

  DragFit out;
  out.drag = c;
  out.v0 = v0;
  out.iterations = iter + 1;
  out.rms_residual = std::sqrt(cost / static_cast<double>(t.size()));
  if (t.size() > 2) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double d = 1.0 + (c / mass) * v0 * t[k];
      jac(i, 0) = -v0 * v0 * t[k] / (mass * d * d);
      jac(i, 1) = 1.0 / (d * d);
    }
    const double sigma2 = cost / static_cast<double>(t.size() - 2);
    const Eigen::Matrix2d cov = sigma2 * (jac.transpose() * jac).inverse();
    out.drag_std = std::sqrt(std::max(cov(0, 0), 0.0));
    out.v0_std = std::sqrt(std::max(cov(1, 1), 0.0));
  }
  return out;
}

// One steady-state observation for thrust calibration: every boat runs the same
// amplitude forward and the lattice settles to a constant period-wise speed.
struct ThrustCalibrationPoint {
  double amplitude = 0.0;     // rad
  double steady_speed = 0.0;  // m/s
};

// Converts steady-speed measurements into a per-boat thrust curve: at
// equilibrium n f = drag_linear * v^2, so f = drag_linear * v^2 / n.
// Points are sorted by amplitude and duplicate amplitudes are averaged.
inline ThrustCurve calibrate_thrust(std::vector<ThrustCalibrationPoint> points,
                                    double drag_linear, int n_boats,
                                    double period = kDefaultPeriod) {
  if (!(drag_linear > 0.0)) throw std::invalid_argument("calibrate_thrust: drag must be positive");
  if (n_boats < 1) throw std::invalid_argument("calibrate_thrust: need at least 1 boat");
  for (const auto& p : points)
    if (!(p.steady_speed >= 0.0))
      throw std::invalid_argument("calibrate_thrust: speeds must be non-negative");
  std::sort(points.begin(), points.end(),
            [](const auto& a, const auto& b) { return a.amplitude < b.amplitude; });
  ThrustCurve curve;
  curve.period = period;
  std::size_t i = 0;
  while (i < points.size()) {
    std::size_t j = i;
    double thrust_sum = 0.0;
    while (j < points.size() && points[j].amplitude == points[i].amplitude) {
      thrust_sum += drag_linear * points[j].steady_speed * points[j].steady_speed / n_boats;
      ++j;
    }
    curve.samples.emplace_back(points[i].amplitude, thrust_sum / static_cast<double>(j - i));
    i = j;
  }
  if (curve.samples.size() < 2)
    throw std::invalid_argument("calibrate_thrust: need at least 2 distinct amplitudes");
  curve.validate();
  return curve;
}

// Steady-state check over the last fifth of a run: period-wise speed
// variation (max - min, relative to the mean) must stay below 5%. A
// floor on the denominator lets a run that never moves count as steady at
// zero speed, which is how a below-activation amplitude shows up.
struct SteadySpeed {
  double mean = 0.0;       // m/s over the window
  double variation = 0.0;  // (max - min) / mean
  bool steady = false;
};

inline SteadySpeed steady_speed(const Trajectory& traj) {
  const std::vector<double> speeds = period_speed(traj);
  const std::vector<double> times = sample_times(traj);
  if (speeds.empty()) throw std::invalid_argument("steady_speed: empty trajectory");
  const double t_begin = times.front() + 0.8 * (times.back() - times.front());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < speeds.size(); ++k) {
    if (times[k] < t_begin) continue;
    lo = std::min(lo, speeds[k]);
    hi = std::max(hi, speeds[k]);
    sum += speeds[k];
    ++n;
  }
  if (n == 0) throw std::invalid_argument("steady_speed: no samples in the final window");
  SteadySpeed out;
  out.mean = sum / static_cast<double>(n);
  out.variation = (hi - lo) / std::max(out.mean, 1e-6);
  out.steady = out.variation < 0.05 && out.mean >= 0.0;
  return out;
}

// One calibration run, judged: whether it reached steady state and whether
// the thrust it implies sits on the common linear amplitude-thrust trend.
struct CalibrationRunReport {
  double amplitude = 0.0;
  double steady_speed_mps = 0.0;
  double thrust = 0.0;  // N
  bool steady = false;
  bool flagged = false;  // off-trend or near-zero force generation
};

struct ThrustCalibration {
  ThrustCurve curve;  // built from the steady runs only
  std::vector<CalibrationRunReport> runs;
};

// Full calibration pipeline from logged runs at fixed amplitudes:
// non-steady runs are dropped from the curve; steady runs whose thrust
// falls below 5% of the strongest, or more than 15% of the strongest off
// the least-squares amplitude-thrust line, are kept but flagged as poor
// force generators.
inline ThrustCalibration calibrate_thrust_from_runs(
    const std::vector<std::pair<double, Trajectory>>& runs, double drag_linear, int n_boats,
    double period = kDefaultPeriod) {
  if (!(drag_linear > 0.0))
    throw std::invalid_argument("calibrate_thrust_from_runs: drag must be positive");
  ThrustCalibration out;
  std::vector<ThrustCalibrationPoint> points;
  for (const auto& [amplitude, traj] : runs) {
    CalibrationRunReport rep;
    rep.amplitude = amplitude;
    const SteadySpeed ss = steady_speed(traj);
    rep.steady_speed_mps = ss.mean;
    rep.steady = ss.steady;
    rep.thrust = drag_linear * ss.mean * ss.mean / n_boats;
    if (rep.steady) points.push_back({amplitude, ss.mean});
    out.runs.push_back(rep);
  }
  out.curve = calibrate_thrust(std::move(points), drag_linear, n_boats, period);

  double sa = 0.0, sf = 0.0, saa = 0.0, saf = 0.0, f_max = 0.0;
  const auto n = static_cast<double>(out.curve.samples.size());
  for (const auto& [a, f] : out.curve.samples) {
    sa += a;
    sf += f;
    saa += a * a;
    saf += a * f;
    f_max = std::max(f_max, f);
  }
  const double denom = n * saa - sa * sa;
  const double slope = denom > 0.0 ? (n * saf - sa * sf) / denom : 0.0;
  const double intercept = (sf - slope * sa) / n;
  for (auto& rep : out.runs) {
    if (!rep.steady) continue;
    const double off_trend = std::abs(rep.thrust - (intercept + slope * rep.amplitude));
    rep.flagged = rep.thrust < 0.05 * f_max || off_trend > 0.15 * f_max;
  }
  return out;
}

}  // namespace modlattice
