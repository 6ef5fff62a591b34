#pragma once

// Planar rigid-body dynamics of the docked lattice under cycle-averaged
// thrust, integrated with fixed-step RK4. Surge is the body +y axis (thrust
// direction), sway the body +x axis (along the boat line); both see
// quadratic drag, and the only inputs are the net surge force and yaw
// torque held constant across a cycle.

#include <cmath>
#include <stdexcept>

#include "modlattice/lattice.hpp"

namespace modlattice {

struct BodyState {
  double x = 0.0;         // m, world
  double y = 0.0;         // m, world
  double yaw = 0.0;       // rad, world; 0 means surge points along world +y
  double v_surge = 0.0;   // m/s, body +y
  double v_sway = 0.0;    // m/s, body +x
  double yaw_rate = 0.0;  // rad/s
};

struct RigidBodyModel {
  double mass = 0.0;         // kg
  double inertia = 0.0;      // kg*m^2
  double drag_linear = 0.0;  // kg/m, surge
  double drag_sway = 0.0;    // kg/m
  double drag_yaw = 0.0;     // kg*m^2

  void validate() const {
    if (!(mass > 0.0 && inertia > 0.0 && drag_linear > 0.0 && drag_sway > 0.0 && drag_yaw > 0.0))
      throw std::invalid_argument("RigidBodyModel: all parameters must be positive");
  }
};

inline RigidBodyModel body_model(const LatticeConfig& config) {
  const AggregateParams agg = aggregate(config);
  RigidBodyModel mdl;
  mdl.mass = agg.total_mass;
  mdl.inertia = agg.total_inertia;
  mdl.drag_linear = config.drag_linear;
  mdl.drag_sway = config.drag_sway;
  mdl.drag_yaw = config.drag_yaw;
  return mdl;
}

// Time derivative of the state under constant net surge force and yaw
// torque. Velocity fields of the returned struct hold accelerations.
inline BodyState state_derivative(const RigidBodyModel& mdl, const BodyState& s, double force,
                                  double torque) {
  BodyState d;
  const double sy = std::sin(s.yaw);
  const double cy = std::cos(s.yaw);
  d.x = cy * s.v_sway - sy * s.v_surge;
  d.y = sy * s.v_sway + cy * s.v_surge;
  d.yaw = s.yaw_rate;
  d.v_surge = (force - mdl.drag_linear * std::abs(s.v_surge) * s.v_surge) / mdl.mass;
  d.v_sway = -mdl.drag_sway * std::abs(s.v_sway) * s.v_sway / mdl.mass;
  d.yaw_rate = (torque - mdl.drag_yaw * std::abs(s.yaw_rate) * s.yaw_rate) / mdl.inertia;
  return d;
}

namespace detail {

inline BodyState add_scaled(const BodyState& s, const BodyState& d, double h) {
  BodyState out;
  out.x = s.x + h * d.x;
  out.y = s.y + h * d.y;
  out.yaw = s.yaw + h * d.yaw;
  out.v_surge = s.v_surge + h * d.v_surge;
  out.v_sway = s.v_sway + h * d.v_sway;
  out.yaw_rate = s.yaw_rate + h * d.yaw_rate;
  return out;
}

}  // namespace detail

enum class Integrator { rk4, euler };

// One forward Euler step, kept for convergence-order comparisons.
inline BodyState euler_step(const RigidBodyModel& mdl, const BodyState& s, double force,
                            double torque, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("euler_step: dt must be positive");
  return detail::add_scaled(s, state_derivative(mdl, s, force, torque), dt);
}

// One classical RK4 step of length dt under constant inputs.
inline BodyState rk4_step(const RigidBodyModel& mdl, const BodyState& s, double force,
                          double torque, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  const BodyState k1 = state_derivative(mdl, s, force, torque);
  const BodyState k2 = state_derivative(mdl, detail::add_scaled(s, k1, 0.5 * dt), force, torque);
  const BodyState k3 = state_derivative(mdl, detail::add_scaled(s, k2, 0.5 * dt), force, torque);
  const BodyState k4 = state_derivative(mdl, detail::add_scaled(s, k3, dt), force, torque);
  BodyState out = s;
  out.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  out.y += dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
  out.yaw += dt / 6.0 * (k1.yaw + 2.0 * k2.yaw + 2.0 * k3.yaw + k4.yaw);
  out.v_surge += dt / 6.0 * (k1.v_surge + 2.0 * k2.v_surge + 2.0 * k3.v_surge + k4.v_surge);
  out.v_sway += dt / 6.0 * (k1.v_sway + 2.0 * k2.v_sway + 2.0 * k3.v_sway + k4.v_sway);
  out.yaw_rate += dt / 6.0 * (k1.yaw_rate + 2.0 * k2.yaw_rate + 2.0 * k3.yaw_rate + k4.yaw_rate);
  return out;
}

// Speed under pure quadratic drag from initial speed v0 after time t:
//   v(t) = v0 / (1 + (c/m) v0 t).
// Valid for v0 >= 0; used as an integration oracle and as the model
// identification fits against.
inline double quadratic_drag_decay(double v0, double drag_over_mass, double t) {
  if (v0 < 0.0) throw std::invalid_argument("quadratic_drag_decay: v0 must be non-negative");
  return v0 / (1.0 + drag_over_mass * v0 * t);
}

}  // namespace modlattice
