#pragma once

// Closed-loop experiment runner. An experiment is a sequence of constant
// (speed, heading) target phases executed on a plant lattice; the
// controller may be built from a different model lattice to study
// parameter mismatch. Each cycle: observe period-wise speed and heading,
// compute and allocate forces, turn them into a synchronized waveform
// schedule, gate it through the undocking guard, then integrate the plant
// for one period.
//
// Centerline reversals are physically abrupt, so the disturbance model
// injects a sway and yaw impulse whenever a boat's centerline changes
// between cycles, with pseudo-random signs; a thrust scale factor emulates
// calibration error. Runs are deterministic for a given spec and seed:
// impulse signs come from a counter-mixed seed per (cycle, boat), never
// from global state.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "modlattice/controller.hpp"
#include "modlattice/sim.hpp"
#include "modlattice/trajectory.hpp"
#include "modlattice/undock_guard.hpp"
#include "modlattice/waveform.hpp"

namespace modlattice {

struct Phase {
  double duration = 45.0;  // s, rounded to whole cycles
  ControlTarget target;
};

// Disturbances triggered by centerline reversals, plus a constant thrust
// calibration error.
struct DisturbanceSpec {
  double switch_impulse_sway = 0.0;  // N*s per centerline transition
  double switch_impulse_yaw = 0.0;   // N*m*s per transition
  double thrust_scale = 1.0;         // multiplies every realized thrust
  std::uint64_t seed = 0;            // drives impulse signs

  bool impulses_active() const {
    return switch_impulse_sway != 0.0 || switch_impulse_yaw != 0.0;
  }
  void validate() const {
    if (!(thrust_scale > 0.0))
      throw std::invalid_argument("DisturbanceSpec: thrust_scale must be positive");
  }
};

struct ExperimentSpec {
  LatticeConfig plant;                 // true dynamics
  std::optional<LatticeConfig> model;  // controller's belief; plant if absent
  ControllerGains gains;
  std::vector<Phase> phases;
  double period = kDefaultPeriod;  // s
  int substeps = 100;              // integrator steps per cycle, >= 10
  Integrator integrator = Integrator::rk4;
  DisturbanceSpec disturbance;
  BodyState initial;
  TailGeometry tail_geometry;
  bool enforce_guard = true;
  int guard_samples = 180;
};

struct CycleLog {
  std::int64_t index = 0;
  double start = 0.0;  // s
  double v_obs = 0.0;  // m/s
  double v_cmd = 0.0;  // m/s
  ControlTarget target;
  std::vector<double> forces;  // N, requested per boat
  bool saturated = false;
  bool guard_safe = true;
};

struct RunResult {
  Trajectory trajectory;
  std::vector<CycleLog> cycles;
  int guard_violations = 0;
  int centerline_transitions = 0;
};

// SplitMix64 of a seed/counter pair; decouples draws so one extra
// transition does not shift every later sign.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {

inline double realized_force(const BoatParams& boat, const WaveformCommand& cmd, double scale) {
  const double sign = std::cos(cmd.centerline) >= 0.0 ? 1.0 : -1.0;
  return sign * scale * boat.thrust_curve.thrust_at(cmd.amplitude);
}

}  // namespace detail

inline RunResult run_experiment(const ExperimentSpec& spec) {
  spec.plant.validate();
  if (spec.model) spec.model->validate();
  spec.disturbance.validate();
  if (spec.phases.empty()) throw std::invalid_argument("run_experiment: no phases");
  if (spec.substeps < 10)
    throw std::invalid_argument("run_experiment: need at least 10 substeps per cycle");
  if (!(spec.period > 0.0)) throw std::invalid_argument("run_experiment: period must be positive");
  const LatticeConfig& model = spec.model ? *spec.model : spec.plant;
  if (model.size() != spec.plant.size())
    throw std::invalid_argument("run_experiment: model/plant boat count mismatch");

  const RigidBodyModel body = body_model(spec.plant);
  const double omega = 2.0 * std::numbers::pi / spec.period;
  const double dt = spec.period / spec.substeps;
  LatticeController controller(model, spec.gains, spec.period);

  std::vector<std::int64_t> phase_cycles;
  std::int64_t total_cycles = 0;
  for (const auto& ph : spec.phases) {
    const auto n = std::llround(ph.duration / spec.period);
    if (n < 1) throw std::invalid_argument("run_experiment: phase shorter than one cycle");
    phase_cycles.push_back(n);
    total_cycles += n;
  }

  RunResult out;
  out.trajectory.dt = dt;
  out.trajectory.period = spec.period;
  out.trajectory.samples.reserve(static_cast<std::size_t>(total_cycles) * spec.substeps + 1);
  out.cycles.reserve(static_cast<std::size_t>(total_cycles));

  BodyState state = spec.initial;
  std::vector<double> prev_centerline(spec.plant.size(), kForward);
  std::size_t phase_idx = 0;
  std::int64_t cycles_into_phase = 0;

  for (std::int64_t k = 0; k < total_cycles; ++k) {
    while (cycles_into_phase >= phase_cycles[phase_idx]) {
      cycles_into_phase = 0;
      ++phase_idx;
    }
    const ControlTarget target = spec.phases[phase_idx].target;
    const double t_cycle = static_cast<double>(k) * spec.period;

    ControlObservation obs;
    obs.yaw = state.yaw;
    obs.yaw_rate = state.yaw_rate;
    const std::size_t n_samp = out.trajectory.samples.size();
    if (n_samp > static_cast<std::size_t>(spec.substeps)) {
      const BodyState& now = out.trajectory.samples.back().state;
      const BodyState& ago =
          out.trajectory.samples[n_samp - 1 - static_cast<std::size_t>(spec.substeps)].state;
      obs.v_surge = (-std::sin(now.yaw) * (now.x - ago.x) + std::cos(now.yaw) * (now.y - ago.y)) /
                    spec.period;
    } else {
      obs.v_surge = state.v_surge;
    }

    const Allocation alloc = controller.step(target, obs);
    const CycleSchedule sched = schedule_cycle(alloc.forces, model, omega, k, t_cycle);

    CycleLog log;
    log.index = k;
    log.start = t_cycle;
    log.v_obs = obs.v_surge;
    log.v_cmd = controller.commanded_speed();
    log.target = target;
    log.forces = alloc.forces;
    log.saturated = alloc.saturated;

    const GuardVerdict verdict =
        verify_schedule(sched, spec.plant, spec.tail_geometry, spec.guard_samples);
    log.guard_safe = verdict.safe;
    if (!verdict.safe) {
      ++out.guard_violations;
      if (spec.enforce_guard) {
        std::string why = !verdict.assumptions.ok      ? verdict.assumptions.detail
                          : !verdict.sign_agreement.ok ? verdict.sign_agreement.detail
                                                       : "clearance " +
                                                             std::to_string(verdict.min_clearance_m) +
                                                             " m";
        throw std::runtime_error("run_experiment: unsafe schedule at cycle " + std::to_string(k) +
                                 ": " + why);
      }
    }
    out.cycles.push_back(std::move(log));

    double force_net = 0.0;
    double torque_net = 0.0;
    std::vector<double> realized(spec.plant.size());
    std::vector<double> amplitudes(spec.plant.size());
    std::vector<double> centerlines(spec.plant.size());
    for (std::size_t i = 0; i < spec.plant.size(); ++i) {
      realized[i] =
          detail::realized_force(spec.plant.boats[i], sched.commands[i], spec.disturbance.thrust_scale);
      amplitudes[i] = sched.commands[i].amplitude;
      centerlines[i] = sched.commands[i].centerline;
      force_net += realized[i];
      torque_net += realized[i] * spec.plant.positions_x[i];
    }

    for (std::size_t i = 0; i < spec.plant.size(); ++i) {
      if (centerlines[i] == prev_centerline[i]) continue;
      prev_centerline[i] = centerlines[i];
      ++out.centerline_transitions;
      if (!spec.disturbance.impulses_active()) continue;
      const std::uint64_t bits = mix_seed(
          spec.disturbance.seed, (static_cast<std::uint64_t>(k) << 8) | static_cast<std::uint64_t>(i));
      state.v_sway +=
          ((bits & 1) ? 1.0 : -1.0) * spec.disturbance.switch_impulse_sway / body.mass;
      state.yaw_rate +=
          ((bits & 2) ? 1.0 : -1.0) * spec.disturbance.switch_impulse_yaw / body.inertia;
    }

    if (k == 0) {
      TrajectorySample first;
      first.t = 0.0;
      first.state = state;
      first.amplitudes = amplitudes;
      first.centerlines = centerlines;
      first.forces = realized;
      out.trajectory.samples.push_back(std::move(first));
    }
    for (int sub = 1; sub <= spec.substeps; ++sub) {
      state = spec.integrator == Integrator::rk4
                  ? rk4_step(body, state, force_net, torque_net, dt)
                  : euler_step(body, state, force_net, torque_net, dt);
      state.yaw = wrap_angle(state.yaw);
      TrajectorySample samp;
      samp.t = t_cycle + dt * sub;
      samp.state = state;
      samp.amplitudes = amplitudes;
      samp.centerlines = centerlines;
      samp.forces = realized;
      out.trajectory.samples.push_back(std::move(samp));
    }
    ++cycles_into_phase;
  }
  return out;
}

// Controller model equal to the plant except for the drag coefficients of
// a differently sized reference lattice; isolates the effect of wrong drag
// while geometry and inertia stay correct.
inline LatticeConfig with_reference_drags(LatticeConfig config, int assumed_n_boats) {
  const PublishedParams pub = published_params(assumed_n_boats);
  config.drag_linear = pub.drag_linear;
  config.drag_yaw = pub.drag_yaw;
  config.drag_sway = pub.drag_linear;
  return config;
}

// Two-phase experiment: hold `before`, then step to `after`.
inline ExperimentSpec step_experiment(const LatticeConfig& config, ControlTarget before,
                                      ControlTarget after, double phase_duration = 45.0) {
  ExperimentSpec spec;
  spec.plant = config;
  spec.phases = {{phase_duration, before}, {phase_duration, after}};
  return spec;
}

// Canned two-phase studies. The duration covers both phases; magnitude is
// the speed step except for yaw_step, where it is the heading step.
enum class Scenario { vel_step, yaw_step, combined_turn, mismatch };

inline ExperimentSpec scenario_experiment(Scenario scenario, const LatticeConfig& config,
                                          double step_magnitude, double duration = 90.0,
                                          int assumed_drag_n = 0,
                                          double period = kDefaultPeriod) {
  ExperimentSpec spec;
  spec.plant = config;
  spec.period = period;
  if (!(duration >= 10.0 * spec.period))
    throw std::invalid_argument("scenario_experiment: duration must cover at least 10 cycles");
  const double half = duration / 2.0;
  switch (scenario) {
    case Scenario::vel_step:
      spec.phases = {{half, {0.0, 0.0}}, {half, {step_magnitude, 0.0}}};
      break;
    case Scenario::yaw_step:
      spec.phases = {{half, {0.0, 0.0}}, {half, {0.0, step_magnitude}}};
      break;
    case Scenario::combined_turn:
      spec.phases = {{half, {step_magnitude, 0.0}}, {half, {step_magnitude, std::numbers::pi}}};
      break;
    case Scenario::mismatch:
      if (assumed_drag_n < 1)
        throw std::invalid_argument("scenario_experiment: mismatch needs assumed_drag_n");
      spec.phases = {{half, {0.0, 0.0}}, {half, {step_magnitude, std::numbers::pi / 2.0}}};
      spec.model = with_reference_drags(config, assumed_drag_n);
      break;
  }
  return spec;
}

struct StepReport {
  double rise_time_s = 0.0;     // s from the step; the window span if never settled
  double rms_error = 0.0;       // setpoint units, over the settled window
  double overshoot_frac = 0.0;  // fraction of the step size
  bool settled = true;          // whether 90% of the step was ever reached
};

struct PhaseWindow {
  double t0 = 0.0;  // s, step instant
  double t1 = 0.0;  // s, end of phase
  ControlTarget target;
};

// Time window of a phase by index, with durations rounded to whole cycles
// exactly as run_experiment rounds them.
inline PhaseWindow phase_window(const ExperimentSpec& spec, std::size_t phase_index) {
  if (phase_index >= spec.phases.size())
    throw std::out_of_range("phase_window: phase index out of range");
  PhaseWindow w;
  double t = 0.0;
  for (std::size_t i = 0; i <= phase_index; ++i) {
    const double d = std::llround(spec.phases[i].duration / spec.period) * spec.period;
    if (i == phase_index) {
      w.t0 = t;
      w.t1 = t + d;
      w.target = spec.phases[i].target;
    }
    t += d;
  }
  return w;
}

inline constexpr double kSettleWindowBegin = 0.3;  // fraction of the phase
inline constexpr double kSettleWindowEnd = 0.9;

namespace detail {

inline std::pair<std::vector<double>, std::vector<double>> window_series(
    const Trajectory& traj, const std::vector<double>& series, double t0, double t1) {
  std::vector<double> t, v;
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const double tk = traj.samples[k].t;
    if (tk < t0 || tk > t1) continue;
    t.push_back(tk);
    v.push_back(series[k]);
  }
  if (t.empty()) throw std::invalid_argument("window_series: empty window");
  return {std::move(t), std::move(v)};
}

}  // namespace detail

// Step metrics on period-wise speed over one phase. The baseline is the
// measured speed at the step instant; rise time is counted from the step.
inline StepReport speed_step_report(const RunResult& run, const PhaseWindow& window) {
  const std::vector<double> speed = period_speed(run.trajectory);
  auto [t, v] = detail::window_series(run.trajectory, speed, window.t0, window.t1);
  const double initial = v.front();
  const double setpoint = window.target.v_desired;
  const double span = window.t1 - window.t0;
  StepReport rep;
  const double rise_at = rise_time(t, v, initial, setpoint);
  rep.settled = std::isfinite(rise_at);
  rep.rise_time_s = rep.settled ? rise_at - window.t0 : span;
  rep.rms_error = rms_error(t, v, setpoint, window.t0 + kSettleWindowBegin * span,
                            window.t0 + kSettleWindowEnd * span);
  rep.overshoot_frac = overshoot(v, initial, setpoint);
  return rep;
}

// Step metrics on heading over one phase. Rise time uses wrapped progress
// from the heading at the step instant; RMS and overshoot use the wrapped
// deviation from the setpoint, so absolute heading offsets of 2 pi change
// nothing.
inline StepReport yaw_step_report(const RunResult& run, const PhaseWindow& window) {
  std::vector<double> yaw(run.trajectory.samples.size());
  for (std::size_t k = 0; k < yaw.size(); ++k) yaw[k] = run.trajectory.samples[k].state.yaw;
  auto [t, v] = detail::window_series(run.trajectory, yaw, window.t0, window.t1);
  const double initial = v.front();
  const double step = wrap_angle(window.target.yaw_desired - initial);
  if (step == 0.0) throw std::invalid_argument("yaw_step_report: zero heading step");
  const double dir = step > 0.0 ? 1.0 : -1.0;
  const double span = window.t1 - window.t0;

  std::vector<double> progress(v.size());
  std::vector<double> error(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    progress[k] = wrap_angle(v[k] - initial);
    error[k] = wrap_angle(v[k] - window.target.yaw_desired);
  }

  StepReport rep;
  const double rise_at = rise_time(t, progress, 0.0, step);
  rep.settled = std::isfinite(rise_at);
  rep.rise_time_s = rep.settled ? rise_at - window.t0 : span;
  rep.rms_error = rms_error(t, error, 0.0, window.t0 + kSettleWindowBegin * span,
                            window.t0 + kSettleWindowEnd * span);
  double peak = 0.0;
  for (double e : error) peak = std::max(peak, e * dir);
  rep.overshoot_frac = peak / std::abs(step);
  return rep;
}

// Repeats an experiment across disturbance seeds.
inline std::vector<RunResult> run_sweep(const ExperimentSpec& base,
                                        const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("run_sweep: no seeds");
  std::vector<RunResult> out;
  out.reserve(seeds.size());
  for (std::uint64_t s : seeds) {
    ExperimentSpec spec = base;
    spec.disturbance.seed = s;
    out.push_back(run_experiment(spec));
  }
  return out;
}

}  // namespace modlattice
