#pragma once

// Once-per-cycle control for a parallel lattice: outer loops turn desired
// surge speed and heading into a net force/torque pair, and a minimum-norm
// pseudoinverse spreads that pair across the boats' surge thrusters.
//
// The speed loop integrates a commanded speed rather than commanding force
// directly: quadratic drag makes force-for-speed a known feedforward, and
// integrating the adjustment gives zero steady-state error under model
// mismatch. The yaw loop commands an angular acceleration and cancels yaw
// drag, which makes the closed heading dynamics nearly independent of
// lattice size.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "modlattice/waveform.hpp"

namespace modlattice {

// Minimum-norm per-boat forces realizing the requested net surge force and
// yaw torque, before actuation limits.
inline Eigen::VectorXd allocate_min_norm(const LatticeConfig& config, double net_force,
                                         double net_torque) {
  const Eigen::Matrix2Xd p = structural_matrix(config);
  const Eigen::Matrix2d gram = p * p.transpose();
  if (gram.determinant() <= 1e-12)
    throw std::invalid_argument("allocate_min_norm: boat positions are degenerate");
  const Eigen::Vector2d rhs(net_force, net_torque);
  return p.transpose() * gram.ldlt().solve(rhs);
}

struct Allocation {
  std::vector<double> forces;  // N, one per boat, within +-f_max
  bool saturated = false;      // true if any boat hit its limit
};

// Allocates and clamps each boat to its own +-f_max. Clamping trades
// exactness of the realized wrench for feasibility; the integrating outer
// loop absorbs the error over subsequent cycles.
inline Allocation allocate(const LatticeConfig& config, double net_force, double net_torque) {
  const Eigen::VectorXd raw = allocate_min_norm(config, net_force, net_torque);
  Allocation out;
  out.forces.resize(config.size());
  for (std::size_t i = 0; i < config.size(); ++i) {
    const double limit = config.boats[i].f_max;
    const double f = raw[static_cast<Eigen::Index>(i)];
    if (f > limit) {
      out.forces[i] = limit;
      out.saturated = true;
    } else if (f < -limit) {
      out.forces[i] = -limit;
      out.saturated = true;
    } else {
      out.forces[i] = f;
    }
  }
  return out;
}

// Net surge force holding a commanded speed against quadratic drag.
inline double surge_force_for_speed(const LatticeConfig& config, double v_cmd) {
  return config.drag_linear * std::abs(v_cmd) * v_cmd;
}

// Net yaw torque producing the commanded angular acceleration, with yaw
// drag at the current rate cancelled.
inline double torque_for_yaw_accel(const LatticeConfig& config, double alpha_cmd,
                                   double yaw_rate) {
  const AggregateParams agg = aggregate(config);
  return agg.total_inertia * alpha_cmd + config.drag_yaw * std::abs(yaw_rate) * yaw_rate;
}

// Allocation straight from motion commands: commanded surge speed and yaw
// acceleration at the current yaw rate.
inline Allocation allocate_for_motion(const LatticeConfig& config, double v_cmd, double alpha_cmd,
                                      double yaw_rate) {
  return allocate(config, surge_force_for_speed(config, v_cmd),
                  torque_for_yaw_accel(config, alpha_cmd, yaw_rate));
}

struct VelocityLoopGains {
  double kp = 0.08;  // 1/s, on speed error
  double kd = 0.25;  // on speed error rate
};

struct YawLoopGains {
  double kp = 0.35;  // 1/s^2, on wrapped heading error
  double kd = 0.90;  // 1/s, on measured rate
};

struct ControllerGains {
  VelocityLoopGains velocity;
  YawLoopGains yaw;
};

// PD on the heading error, derivative on the measured rate so setpoint
// steps do not kick. Returns a commanded angular acceleration.
inline double yaw_accel_command(const YawLoopGains& g, double yaw_desired, double yaw,
                                double yaw_rate) {
  return g.kp * wrap_angle(yaw_desired - yaw) - g.kd * yaw_rate;
}

// Integrating speed-command shaper, stepped once per cycle. The commanded
// speed is the desired speed plus an accumulated correction, so setpoint
// steps feed forward immediately while persistent observation error walks
// the correction until the measured speed matches the request.
class VelocityLoop {
 public:
  VelocityLoop(VelocityLoopGains gains, double period) : gains_(gains), period_(period) {
    if (!(period > 0.0)) throw std::invalid_argument("VelocityLoop: period must be positive");
  }

  void reset() {
    correction_ = 0.0;
    last_cmd_ = 0.0;
    prev_error_ = 0.0;
    primed_ = false;
  }

  double update(double v_desired, double v_observed) {
    const double error = v_desired - v_observed;
    const double error_rate = primed_ ? (error - prev_error_) / period_ : 0.0;
    correction_ += (gains_.kp * error + gains_.kd * error_rate) * period_;
    prev_error_ = error;
    primed_ = true;
    last_cmd_ = v_desired + correction_;
    return last_cmd_;
  }

  double commanded_speed() const { return last_cmd_; }

 private:
  VelocityLoopGains gains_;
  double period_;
  double correction_ = 0.0;
  double last_cmd_ = 0.0;
  double prev_error_ = 0.0;
  bool primed_ = false;
};

struct ControlTarget {
  double v_desired = 0.0;    // m/s, surge
  double yaw_desired = 0.0;  // rad
};

struct ControlObservation {
  double v_surge = 0.0;   // m/s, period-wise
  double yaw = 0.0;       // rad
  double yaw_rate = 0.0;  // rad/s
};

// Full once-per-cycle controller: observations in, clamped per-boat forces
// out. Owns the speed-loop state.
class LatticeController {
 public:
  LatticeController(const LatticeConfig& config, ControllerGains gains = {},
                    double period = kDefaultPeriod)
      : config_(config), gains_(gains), velocity_loop_(gains.velocity, period) {
    config_.validate();
    velocity_loop_.reset();
  }

  void reset() {
    velocity_loop_.reset();
    last_v_desired_.reset();
  }

  // A changed speed setpoint re-activates the loop: the commanded speed
  // re-initializes to the new desired speed and the accumulated correction
  // restarts from zero.
  Allocation step(const ControlTarget& target, const ControlObservation& obs) {
    if (last_v_desired_ && *last_v_desired_ != target.v_desired) velocity_loop_.reset();
    last_v_desired_ = target.v_desired;
    const double v_cmd = velocity_loop_.update(target.v_desired, obs.v_surge);
    const double alpha = yaw_accel_command(gains_.yaw, target.yaw_desired, obs.yaw, obs.yaw_rate);
    const double force = surge_force_for_speed(config_, v_cmd);
    const double torque = torque_for_yaw_accel(config_, alpha, obs.yaw_rate);
    return allocate(config_, force, torque);
  }

  double commanded_speed() const { return velocity_loop_.commanded_speed(); }
  const LatticeConfig& config() const { return config_; }

 private:
  LatticeConfig config_;
  ControllerGains gains_;
  VelocityLoop velocity_loop_;
  std::optional<double> last_v_desired_;
};

}  // namespace modlattice
