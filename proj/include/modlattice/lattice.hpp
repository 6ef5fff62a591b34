#pragma once

// Domain types for single-thruster swimming modules ("boats") docked into a
// parallel lattice, plus aggregate parameter computation and the published
// reference parameters for the 2..5 boat configurations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace modlattice {

inline constexpr double kDefaultPeriod = 1.5;       // s, oscillation period the thrust curve is calibrated at
inline constexpr double kDefaultSpacing = 0.1524;   // m, boat diameter; docked neighbors touch
inline constexpr double kComBalanceTol = 1e-9;      // kg*m, |sum(m_i x_i)| tolerance for COM-relative positions

// Piecewise-linear thrust-vs-amplitude calibration. Samples span
// [amp_min, amp_max]; amplitudes below the first sample produce no thrust
// (flippers do not open), amplitudes above the last are not commanded.
struct ThrustCurve {
  std::vector<std::pair<double, double>> samples;  // (amplitude rad, thrust N), amplitude strictly increasing
  double period = kDefaultPeriod;                  // s

  bool operator==(const ThrustCurve&) const = default;

  double amp_min() const { return samples.front().first; }
  double amp_max() const { return samples.back().first; }
  double max_thrust() const { return samples.back().second; }

  void validate() const {
    if (samples.size() < 2) throw std::invalid_argument("ThrustCurve: need at least 2 samples");
    if (!(period > 0.0)) throw std::invalid_argument("ThrustCurve: period must be positive");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].second < 0.0) throw std::invalid_argument("ThrustCurve: negative thrust sample");
      if (i > 0) {
        if (!(samples[i].first > samples[i - 1].first))
          throw std::invalid_argument("ThrustCurve: amplitudes must be strictly increasing");
        if (samples[i].second < samples[i - 1].second)
          throw std::invalid_argument("ThrustCurve: thrust must be non-decreasing");
      }
    }
  }

  // Forward map amplitude -> cycle-averaged thrust, with a hard dead band
  // below the activation amplitude.
  double thrust_at(double amplitude) const {
    if (amplitude < amp_min()) return 0.0;
    if (amplitude >= amp_max()) return max_thrust();
    auto hi = std::upper_bound(samples.begin(), samples.end(), amplitude,
                               [](double a, const auto& s) { return a < s.first; });
    auto lo = hi - 1;
    const double span = hi->first - lo->first;
    const double w = (amplitude - lo->first) / span;
    return lo->second + w * (hi->second - lo->second);
  }
};

// Inverse of ThrustCurve::thrust_at for non-negative magnitudes. Forces
// below half the activation thrust round down to zero amplitude (close the
// flippers for the cycle); forces above that but under the activation thrust
// round up to the activation amplitude. Forces beyond the calibrated range
// saturate at amp_max.
inline double invert_thrust(const ThrustCurve& curve, double f) {
  if (!(f >= 0.0)) throw std::invalid_argument("invert_thrust: force must be non-negative");
  const double f_act = curve.samples.front().second;
  if (f < 0.5 * f_act) return 0.0;
  if (f <= f_act) return curve.amp_min();
  if (f >= curve.max_thrust()) return curve.amp_max();
  auto hi = std::upper_bound(curve.samples.begin(), curve.samples.end(), f,
                             [](double v, const auto& s) { return v < s.second; });
  auto lo = hi - 1;
  const double w = (f - lo->second) / (hi->second - lo->second);
  return lo->first + w * (hi->first - lo->first);
}

// Per-module physical parameters and actuation limits.
struct BoatParams {
  double mass = 0.0;               // kg
  double moment_of_inertia = 0.0;  // kg*m^2, about own COM, z-axis
  double diameter = 0.0;           // m
  double f_max = 0.0;              // N, practical thrust cap
  double amp_min = 0.0;            // rad, flipper activation threshold
  double amp_max = 0.0;            // rad, reverse-thrust onset cap
  ThrustCurve thrust_curve;

  bool operator==(const BoatParams&) const = default;

  void validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("BoatParams: mass must be positive");
    if (!(moment_of_inertia > 0.0)) throw std::invalid_argument("BoatParams: inertia must be positive");
    if (!(diameter > 0.0)) throw std::invalid_argument("BoatParams: diameter must be positive");
    if (!(f_max > 0.0)) throw std::invalid_argument("BoatParams: f_max must be positive");
    if (!(0.0 < amp_min && amp_min < amp_max && amp_max <= std::numbers::pi))
      throw std::invalid_argument("BoatParams: require 0 < amp_min < amp_max <= pi");
    thrust_curve.validate();
  }
};

// Default single-module parameters. The thrust curve is linear over the
// usable amplitude range, which brackets achievable lattice speeds at
// roughly 3-10 cm/s depending on configuration.
inline BoatParams default_boat() {
  BoatParams b;
  b.mass = 0.66;
  b.moment_of_inertia = 2.05e-3;
  b.diameter = kDefaultSpacing;
  b.amp_min = 0.75;
  b.amp_max = 2.75;
  b.f_max = 0.025;
  b.thrust_curve.samples = {{0.75, 0.002}, {1.75, 0.0135}, {2.75, 0.025}};
  b.thrust_curve.period = kDefaultPeriod;
  return b;
}

// A parallel lattice: boats in a line along the body x-axis, positions given
// relative to the lattice COM. Surge thrust acts along the body y-axis.
struct LatticeConfig {
  std::vector<BoatParams> boats;
  std::vector<double> positions_x;  // m, signed offset from lattice COM, strictly increasing
  double drag_linear = 0.0;         // C_L, kg/m (surge)
  double drag_yaw = 0.0;            // C_R, kg*m^2 (yaw)
  double drag_sway = 0.0;           // kg/m; not separately measured, defaults to drag_linear

  bool operator==(const LatticeConfig&) const = default;

  std::size_t size() const { return boats.size(); }

  void validate() const {
    if (boats.size() < 2) throw std::invalid_argument("LatticeConfig: need at least 2 boats");
    if (positions_x.size() != boats.size())
      throw std::invalid_argument("LatticeConfig: positions/boats length mismatch");
    if (!(drag_linear > 0.0 && drag_yaw > 0.0 && drag_sway > 0.0))
      throw std::invalid_argument("LatticeConfig: drag coefficients must be positive");
    for (const auto& b : boats) b.validate();
    double moment = 0.0;
    for (std::size_t i = 0; i < boats.size(); ++i) {
      if (i > 0 && !(positions_x[i] > positions_x[i - 1]))
        throw std::invalid_argument("LatticeConfig: positions must be strictly increasing");
      moment += boats[i].mass * positions_x[i];
    }
    if (std::abs(moment) > kComBalanceTol)
      throw std::invalid_argument("LatticeConfig: positions not COM-relative (sum m_i x_i = " +
                                  std::to_string(moment) + ")");
  }
};

struct AggregateParams {
  double total_mass = 0.0;     // kg
  double total_inertia = 0.0;  // kg*m^2, about the lattice COM
  std::size_t n_boats = 0;
};

// Total mass and moment of inertia about the lattice COM. The inertia moves
// each boat's own inertia out to its offset via the parallel axis theorem.
// Does not require sorted or COM-balanced positions, so it stays
// permutation-invariant; full geometric validation lives in
// LatticeConfig::validate().
inline AggregateParams aggregate(const LatticeConfig& config) {
  if (config.boats.size() < 2)
    throw std::invalid_argument("aggregate: need at least 2 boats (controller is degenerate for one)");
  if (config.positions_x.size() != config.boats.size())
    throw std::invalid_argument("aggregate: positions/boats length mismatch");
  AggregateParams out;
  out.n_boats = config.boats.size();
  for (std::size_t i = 0; i < config.boats.size(); ++i) {
    const auto& b = config.boats[i];
    if (!(b.mass > 0.0) || !(b.moment_of_inertia > 0.0))
      throw std::invalid_argument("aggregate: non-positive boat mass or inertia");
    out.total_mass += b.mass;
    out.total_inertia += b.moment_of_inertia + b.mass * config.positions_x[i] * config.positions_x[i];
  }
  return out;
}

// 2xN map from per-boat surge forces to (net surge force, net yaw torque):
// row 1 all ones, row 2 the boat offsets.
inline Eigen::Matrix2Xd structural_matrix(const LatticeConfig& config) {
  const auto n = static_cast<Eigen::Index>(config.size());
  if (n < 2) throw std::invalid_argument("structural_matrix: need at least 2 boats");
  Eigen::Matrix2Xd p(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p(0, i) = 1.0;
    p(1, i) = config.positions_x[static_cast<std::size_t>(i)];
  }
  return p;
}

// Measured aggregate parameters for parallel configurations of 1..5 boats,
// SI units. Yaw drag grows roughly quadratically with lattice size, linear
// drag roughly linearly.
struct PublishedParams {
  double mass;         // kg
  double inertia;      // kg*m^2
  double drag_linear;  // kg/m
  double drag_yaw;     // kg*m^2
};

inline PublishedParams published_params(int n_boats) {
  static constexpr PublishedParams table[5] = {
      {0.66, 2.05e-3, 2.48, 0.40e-3},
      {1.32, 11.8e-3, 4.67, 6.50e-3},
      {1.98, 36.8e-3, 7.00, 32.0e-3},
      {2.64, 84.8e-3, 9.75, 107e-3},
      {3.30, 164e-3, 13.7, 307e-3},
  };
  if (n_boats < 1 || n_boats > 5)
    throw std::out_of_range("published_params: n_boats must be in 1..5");
  return table[n_boats - 1];
}

// Builds a lattice of n identical default boats at the published drag
// coefficients, spaced one diameter apart and centered on the COM. The
// aggregate inertia of this geometry reproduces the published values to
// within 0.5%.
inline LatticeConfig reference_params(int n_boats) {
  if (n_boats < 2 || n_boats > 5)
    throw std::out_of_range("reference_params: n_boats must be in 2..5");
  const PublishedParams pub = published_params(n_boats);
  LatticeConfig cfg;
  cfg.drag_linear = pub.drag_linear;
  cfg.drag_yaw = pub.drag_yaw;
  cfg.drag_sway = pub.drag_linear;
  cfg.boats.assign(static_cast<std::size_t>(n_boats), default_boat());
  const double mid = 0.5 * (n_boats - 1);
  for (int i = 0; i < n_boats; ++i)
    cfg.positions_x.push_back((i - mid) * kDefaultSpacing);
  return cfg;
}

}  // namespace modlattice
