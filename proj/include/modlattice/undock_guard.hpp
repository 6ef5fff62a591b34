#pragma once

// Executable safety argument for synchronized waveforms. Docked neighbors
// cannot strike each other's tails as long as every tail stays on the same
// side of the lattice axis, and side agreement follows from three static
// assumptions on a schedule per cycle: shared clock, centerlines restricted
// to 0 or pi, amplitudes within [0, pi]. Under those, every boat's lateral
// lean is sin(A_i cos(w t)), whose sign is the sign of cos(w t) regardless
// of A_i or thrust direction.
//
// Three layers, strongest to weakest:
//  1. check_assumptions: static validation of the schedule,
//  2. check_sign_agreement: the side-agreement invariant sampled over a
//     cycle (catches desynchronized or malformed schedules),
//  3. min_clearance: sampled distance between neighboring tail segments and
//     hulls, the ground truth the invariant is a proxy for.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modlattice/waveform.hpp"

namespace modlattice {

// Tail and hull dimensions used for clearance evaluation. The tail pivots
// at the hull center and sweeps below it; the submerged hull is modeled as
// a disk around the pivot, smaller than the docking footprint.
struct TailGeometry {
  double tail_reach = 0.09;   // m, pivot to flipper tip
  double body_radius = 0.06;  // m, submerged hull radius around the pivot

  void validate() const {
    if (!(tail_reach > 0.0) || !(body_radius > 0.0))
      throw std::invalid_argument("TailGeometry: dimensions must be positive");
  }
};

struct GuardCheck {
  bool ok = true;
  std::string detail;
};

inline constexpr double kCenterlineTol = 1e-9;  // rad
inline constexpr double kClockTol = 1e-9;       // s and rad/s
inline constexpr double kLeanTol = 1e-12;       // sin(phi) treated as zero below this

// Static schedule validation: every command shares the schedule's clock
// (angular frequency and cycle start), centerlines are exactly forward or
// reverse, and amplitudes lie in [0, pi].
inline GuardCheck check_assumptions(const CycleSchedule& sched) {
  GuardCheck out;
  if (sched.commands.empty()) {
    out.ok = false;
    out.detail = "empty schedule";
    return out;
  }
  if (!(sched.period > 0.0)) {
    out.ok = false;
    out.detail = "non-positive period";
    return out;
  }
  const double omega = 2.0 * std::numbers::pi / sched.period;
  char buf[160];
  for (std::size_t i = 0; i < sched.commands.size(); ++i) {
    const auto& cmd = sched.commands[i];
    if (std::abs(cmd.angular_frequency - omega) > kClockTol) {
      std::snprintf(buf, sizeof buf, "boat %zu: angular frequency %.9g differs from shared %.9g",
                    i, cmd.angular_frequency, omega);
      return {false, buf};
    }
    if (std::abs(cmd.cycle_start - sched.cycle_start) > kClockTol) {
      std::snprintf(buf, sizeof buf, "boat %zu: cycle start %.9g differs from shared %.9g", i,
                    cmd.cycle_start, sched.cycle_start);
      return {false, buf};
    }
    const bool forward = std::abs(cmd.centerline - kForward) <= kCenterlineTol;
    const bool reverse = std::abs(cmd.centerline - kReverse) <= kCenterlineTol;
    if (!forward && !reverse) {
      std::snprintf(buf, sizeof buf, "boat %zu: centerline %.9g is neither 0 nor pi", i,
                    cmd.centerline);
      return {false, buf};
    }
    if (!(cmd.amplitude >= 0.0 && cmd.amplitude <= std::numbers::pi)) {
      std::snprintf(buf, sizeof buf, "boat %zu: amplitude %.9g outside [0, pi]", i, cmd.amplitude);
      return {false, buf};
    }
  }
  return out;
}

inline int lean_sign(double lean) {
  if (lean > kLeanTol) return 1;
  if (lean < -kLeanTol) return -1;
  return 0;
}

// Samples the cycle and checks that no two tails ever lean to opposite
// sides. A centered tail (zero lean) agrees with either side. Commands are
// evaluated on their own clocks, so desynchronization shows up here even
// when each command is individually well formed. Sample counts divisible
// by 4 hit the waveform extrema at 0, T/4, T/2 and 3T/4 exactly.
inline GuardCheck check_sign_agreement(const CycleSchedule& sched, int n_samples = 720) {
  if (n_samples < 8) throw std::invalid_argument("check_sign_agreement: need at least 8 samples");
  if (sched.commands.empty()) return {false, "empty schedule"};
  char buf[160];
  for (int k = 0; k <= n_samples; ++k) {
    const double t = sched.cycle_start + sched.period * k / n_samples;
    int side = 0;
    std::size_t side_boat = 0;
    for (std::size_t i = 0; i < sched.commands.size(); ++i) {
      const auto& cmd = sched.commands[i];
      const int s = lean_sign(tail_lean(cmd, t - cmd.cycle_start));
      if (s == 0) continue;
      if (side == 0) {
        side = s;
        side_boat = i;
      } else if (s != side) {
        std::snprintf(buf, sizeof buf, "t=%.6g s: boats %zu and %zu lean to opposite sides",
                      t, side_boat, i);
        return {false, buf};
      }
    }
  }
  return {};
}

namespace detail {

inline double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                     const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

inline double cross2(const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
  return u.x() * v.y() - u.y() * v.x();
}

inline bool segments_intersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                               const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
  const double d1 = cross2(b - a, c - a);
  const double d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c);
  const double d4 = cross2(d - c, b - c);
  if (((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
      ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)))
    return true;
  // Collinear overlaps degenerate to zero point-segment distance, handled
  // by the caller's distance minimum.
  return false;
}

inline double segment_segment_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                                       const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  return std::min(std::min(point_segment_distance(a, c, d), point_segment_distance(b, c, d)),
                  std::min(point_segment_distance(c, a, b), point_segment_distance(d, a, b)));
}

}  // namespace detail

// Smallest separation over a sampled cycle between any two boats' tail
// segments, and between each tail segment and the other boat's hull disk.
// Negative means penetration; zero means contact.
inline double min_clearance(const CycleSchedule& sched, const LatticeConfig& config,
                            const TailGeometry& geom = {}, int n_samples = 720) {
  geom.validate();
  if (sched.commands.size() != config.size())
    throw std::invalid_argument("min_clearance: schedule/lattice size mismatch");
  if (n_samples < 8) throw std::invalid_argument("min_clearance: need at least 8 samples");
  const std::size_t n = sched.commands.size();
  double worst = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Vector2d> pivot(n), tip(n);
  for (std::size_t i = 0; i < n; ++i) pivot[i] = {config.positions_x[i], 0.0};
  for (int k = 0; k <= n_samples; ++k) {
    const double t = sched.cycle_start + sched.period * k / n_samples;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cmd = sched.commands[i];
      const double phi = cmd.centerline + centerline_deviation(cmd, t - cmd.cycle_start);
      tip[i] = pivot[i] + geom.tail_reach * Eigen::Vector2d(std::sin(phi), -std::cos(phi));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double tails = detail::segment_segment_distance(pivot[i], tip[i], pivot[j], tip[j]);
        const double i_to_hull_j =
            detail::point_segment_distance(pivot[j], pivot[i], tip[i]) - geom.body_radius;
        const double j_to_hull_i =
            detail::point_segment_distance(pivot[i], pivot[j], tip[j]) - geom.body_radius;
        worst = std::min({worst, tails, i_to_hull_j, j_to_hull_i});
      }
    }
  }
  return worst;
}

struct GuardVerdict {
  GuardCheck assumptions;
  GuardCheck sign_agreement;
  double min_clearance_m = 0.0;
  bool safe = false;
};

// Runs all three layers. A schedule is safe when the assumptions hold, the
// tails never disagree on side, and the sampled clearance stays positive.
inline GuardVerdict verify_schedule(const CycleSchedule& sched, const LatticeConfig& config,
                                    const TailGeometry& geom = {}, int n_samples = 720) {
  GuardVerdict v;
  v.assumptions = check_assumptions(sched);
  v.sign_agreement = check_sign_agreement(sched, n_samples);
  v.min_clearance_m = min_clearance(sched, config, geom, n_samples);
  v.safe = v.assumptions.ok && v.sign_agreement.ok && v.min_clearance_m > 0.0;
  return v;
}

}  // namespace modlattice
