#pragma once

// Trajectory container and the measures used to judge step responses:
// period-wise speed (the controller's own observable), rise time to 90% of
// a step, RMS error over the settled part of a window, overshoot, and
// quartile spread for aggregating repeated runs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "modlattice/sim.hpp"
#include "modlattice/waveform.hpp"

namespace modlattice {

struct TrajectorySample {
  double t = 0.0;  // s
  BodyState state;
  std::vector<double> amplitudes;   // rad, per boat
  std::vector<double> centerlines;  // rad, per boat
  std::vector<double> forces;       // N, per boat, cycle average
};

struct Trajectory {
  std::vector<TrajectorySample> samples;  // uniform spacing dt
  double dt = 0.0;                        // s, substep
  double period = kDefaultPeriod;         // s, control cycle
};

// Speed over the trailing cycle, projected on the current surge axis:
//   v_T(t) = (pos(t) - pos(t - T)) / T . (-sin yaw, cos yaw).
// Averaging over exactly one cycle cancels the within-cycle oscillation.
// Samples earlier than one period into the run fall back to the
// instantaneous surge speed.
inline std::vector<double> period_speed(const Trajectory& traj) {
  if (traj.samples.empty()) return {};
  if (!(traj.dt > 0.0)) throw std::invalid_argument("period_speed: dt must be positive");
  const auto back = static_cast<std::size_t>(std::lround(traj.period / traj.dt));
  if (back == 0) throw std::invalid_argument("period_speed: period shorter than dt");
  std::vector<double> out(traj.samples.size());
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const BodyState& s = traj.samples[k].state;
    if (k < back) {
      out[k] = s.v_surge;
      continue;
    }
    const BodyState& prev = traj.samples[k - back].state;
    const double dx = s.x - prev.x;
    const double dy = s.y - prev.y;
    out[k] = (-std::sin(s.yaw) * dx + std::cos(s.yaw) * dy) / traj.period;
  }
  return out;
}

inline std::vector<double> sample_times(const Trajectory& traj) {
  std::vector<double> out(traj.samples.size());
  for (std::size_t k = 0; k < traj.samples.size(); ++k) out[k] = traj.samples[k].t;
  return out;
}

// First time the series crosses 90% of the way from initial to setpoint,
// linearly interpolated between samples. NaN if it never does.
inline double rise_time(const std::vector<double>& t, const std::vector<double>& v,
                        double initial, double setpoint) {
  if (t.size() != v.size() || t.empty())
    throw std::invalid_argument("rise_time: empty or mismatched series");
  const double step = setpoint - initial;
  if (step == 0.0) throw std::invalid_argument("rise_time: zero step");
  const double target = initial + 0.9 * step;
  const double dir = step > 0.0 ? 1.0 : -1.0;
  if ((v.front() - target) * dir >= 0.0) return t.front();
  for (std::size_t k = 1; k < v.size(); ++k) {
    if ((v[k] - target) * dir >= 0.0) {
      const double span = v[k] - v[k - 1];
      const double w = span != 0.0 ? (target - v[k - 1]) / span : 1.0;
      return t[k - 1] + w * (t[k] - t[k - 1]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Root-mean-square deviation from the setpoint over samples with
// t in [t_begin, t_end].
inline double rms_error(const std::vector<double>& t, const std::vector<double>& v,
                        double setpoint, double t_begin, double t_end) {
  if (t.size() != v.size() || t.empty())
    throw std::invalid_argument("rms_error: empty or mismatched series");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < t_begin || t[k] > t_end) continue;
    const double e = v[k] - setpoint;
    sum += e * e;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("rms_error: no samples in window");
  return std::sqrt(sum / static_cast<double>(n));
}

// Peak excursion beyond the setpoint in the step direction, as a fraction
// of the step size. Zero if the series never passes the setpoint.
inline double overshoot(const std::vector<double>& v, double initial, double setpoint) {
  if (v.empty()) throw std::invalid_argument("overshoot: empty series");
  const double step = setpoint - initial;
  if (step == 0.0) throw std::invalid_argument("overshoot: zero step");
  const double dir = step > 0.0 ? 1.0 : -1.0;
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, (x - setpoint) * dir);
  return peak / std::abs(step);
}

// Heading series re-expressed as signed progress from the initial heading,
// wrapped so a step of at most pi measures as a monotone approach.
inline std::vector<double> yaw_progress(const std::vector<double>& yaw, double initial) {
  std::vector<double> out(yaw.size());
  for (std::size_t k = 0; k < yaw.size(); ++k) out[k] = wrap_angle(yaw[k] - initial);
  return out;
}

// Linear-interpolation quantile (the common spreadsheet definition) on an
// unsorted copy of the data.
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty data");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q outside [0, 1]");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double w = pos - static_cast<double>(lo);
  return xs[lo] + w * (xs[lo + 1] - xs[lo]);
}

struct Spread {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

inline Spread spread(const std::vector<double>& xs) {
  return {quantile(xs, 0.25), quantile(xs, 0.5), quantile(xs, 0.75)};
}

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty data");
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace modlattice
