#pragma once

// Per-cycle oscillation waveform. Each boat executes
//   phi(t) = phi0 + A * cos(w t) * cos(phi0)
// for one full period, with the centerline phi0 restricted to 0 (forward)
// or pi (reverse). All boats share w and phase, so control reduces to
// choosing (phi0, A) per boat once per cycle. The cos(phi0) factor keeps the
// wave continuous up to 2A at a forward/reverse switch instead of up to pi+A.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "modlattice/lattice.hpp"

namespace modlattice {

inline constexpr double kForward = 0.0;               // centerline for positive thrust
inline constexpr double kReverse = std::numbers::pi;  // centerline for negative thrust

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (r <= 0.0) r += 2.0 * std::numbers::pi;
  return r - std::numbers::pi;
}

struct WaveformCommand {
  double centerline = kForward;       // rad, 0 or pi
  double amplitude = 0.0;             // rad, 0 or within [amp_min, amp_max]
  double angular_frequency = 2.0 * std::numbers::pi / kDefaultPeriod;  // rad/s
  std::int64_t cycle_index = 0;
  double cycle_start = 0.0;           // s, when this command's cycle begins

  double period() const { return 2.0 * std::numbers::pi / angular_frequency; }
};

// Signed deviation of the motor angle from the centerline at time t since
// the command's cycle start.
inline double centerline_deviation(const WaveformCommand& cmd, double t) {
  return cmd.amplitude * std::cos(cmd.angular_frequency * t) * std::cos(cmd.centerline);
}

// Motor angle phi(t), wrapped to (-pi, pi]. t is time since the command's
// own cycle start, within [0, T].
inline double motor_angle(const WaveformCommand& cmd, double t) {
  if (t < -1e-12 || t > cmd.period() + 1e-12)
    throw std::invalid_argument("motor_angle: t outside [0, T]");
  return wrap_angle(cmd.centerline + centerline_deviation(cmd, t));
}

// Lateral lean of the tail, sin(phi(t)). Wrap-free by construction; the sign
// tells which side of the surge axis the tail occupies.
inline double tail_lean(const WaveformCommand& cmd, double t) {
  return std::sin(cmd.centerline + centerline_deviation(cmd, t));
}

// One synchronized control decision: a command per boat, all sharing the
// angular frequency and cycle start.
struct CycleSchedule {
  std::vector<WaveformCommand> commands;
  double cycle_start = 0.0;  // s
  double period = kDefaultPeriod;  // s
};

// Maps allocated per-boat forces to a schedule: thrust sign picks the
// centerline, magnitude is inverted through the boat's calibration curve.
inline CycleSchedule schedule_cycle(const std::vector<double>& forces, const LatticeConfig& config,
                                    double omega, std::int64_t cycle_index, double cycle_start) {
  if (forces.size() != config.size())
    throw std::invalid_argument("schedule_cycle: force/boat count mismatch");
  if (!(omega > 0.0)) throw std::invalid_argument("schedule_cycle: omega must be positive");
  CycleSchedule sched;
  sched.cycle_start = cycle_start;
  sched.period = 2.0 * std::numbers::pi / omega;
  sched.commands.reserve(forces.size());
  for (std::size_t i = 0; i < forces.size(); ++i) {
    const auto& boat = config.boats[i];
    if (std::abs(forces[i]) > boat.f_max * (1.0 + 1e-12))
      throw std::invalid_argument("schedule_cycle: |f| exceeds f_max; clamp before scheduling");
    WaveformCommand cmd;
    cmd.centerline = forces[i] >= 0.0 ? kForward : kReverse;
    cmd.amplitude = invert_thrust(boat.thrust_curve, std::abs(forces[i]));
    cmd.angular_frequency = omega;
    cmd.cycle_index = cycle_index;
    cmd.cycle_start = cycle_start;
    sched.commands.push_back(cmd);
  }
  return sched;
}

inline CycleSchedule schedule_cycle(const std::vector<double>& forces, const LatticeConfig& config,
                                    double omega, std::int64_t cycle_index) {
  const double period = 2.0 * std::numbers::pi / omega;
  return schedule_cycle(forces, config, omega, cycle_index,
                        static_cast<double>(cycle_index) * period);
}

// Motor-angle jump at the boundary between two consecutive cycles of the
// same boat, as the shortest angular distance. Worst case pi, reached when
// the centerline flips at zero amplitude.
inline double discontinuity(const WaveformCommand& prev, const WaveformCommand& next) {
  const double end_prev = prev.centerline + centerline_deviation(prev, prev.period());
  const double start_next = next.centerline + centerline_deviation(next, 0.0);
  return std::abs(wrap_angle(start_next - end_prev));
}

}  // namespace modlattice
