#pragma once

// File formats: JSON for lattice descriptions, experiment specs, waveform
// schedules and result summaries; CSV for trajectories and measurement
// series. CSV numbers are printed with 17 significant digits so re-running
// the same binary with the same spec reproduces output byte for byte.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "modlattice/harness.hpp"
#include "modlattice/sysid.hpp"

namespace modlattice {

using nlohmann::json;

namespace detail {

inline std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::vector<double> double_array(const json& j, const char* key, std::size_t expected) {
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != expected)
    throw std::invalid_argument(std::string("expected '") + key + "' to be an array of " +
                                std::to_string(expected) + " numbers");
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& x : arr) out.push_back(x.get<double>());
  return out;
}

}  // namespace detail

inline json thrust_curve_samples_to_json(const ThrustCurve& curve) {
  json samples = json::array();
  for (const auto& [a, f] : curve.samples) samples.push_back(json::array({a, f}));
  return samples;
}

inline json thrust_curve_to_json(const ThrustCurve& curve) {
  return json{{"period_s", curve.period}, {"samples", thrust_curve_samples_to_json(curve)}};
}

// Accepts either a bare array of [amplitude_rad, thrust_n] pairs or an
// object {"period_s": ..., "samples": [[a, f], ...]}.
inline ThrustCurve thrust_curve_from_json(const json& j, double default_period = kDefaultPeriod) {
  ThrustCurve curve;
  curve.period = default_period;
  const json* samples = &j;
  if (j.is_object()) {
    curve.period = j.value("period_s", default_period);
    samples = &j.at("samples");
  }
  if (!samples->is_array())
    throw std::invalid_argument("thrust_curve: expected an array of [amplitude, thrust] pairs");
  for (const auto& pair : *samples) {
    if (!pair.is_array() || pair.size() != 2)
      throw std::invalid_argument("thrust_curve: each sample must be an [amplitude, thrust] pair");
    curve.samples.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  curve.validate();
  return curve;
}

inline json lattice_to_json(const LatticeConfig& config) {
  config.validate();
  json j;
  j["n_boats"] = config.size();
  j["spacing_m"] = config.boats[0].diameter;
  json masses = json::array();
  json inertias = json::array();
  json positions = json::array();
  for (std::size_t i = 0; i < config.size(); ++i) {
    masses.push_back(config.boats[i].mass);
    inertias.push_back(config.boats[i].moment_of_inertia);
    positions.push_back(config.positions_x[i]);
  }
  j["masses_kg"] = std::move(masses);
  j["inertias_kgm2"] = std::move(inertias);
  j["positions_x_m"] = std::move(positions);
  j["drag_linear"] = config.drag_linear;
  j["drag_yaw"] = config.drag_yaw;
  j["drag_sway"] = config.drag_sway;
  j["thrust_curve"] = thrust_curve_samples_to_json(config.boats[0].thrust_curve);
  if (config.boats[0].thrust_curve.period != kDefaultPeriod)
    j["thrust_period_s"] = config.boats[0].thrust_curve.period;
  j["f_max_n"] = config.boats[0].f_max;
  return j;
}

// Reads a lattice. Boat positions come from "positions_x_m" when present,
// otherwise from uniform "spacing_m" re-centered on the mass-weighted COM.
inline LatticeConfig lattice_from_json(const json& j) {
  const auto n = j.at("n_boats").get<std::size_t>();
  if (n < 2) throw std::invalid_argument("lattice: n_boats must be at least 2");
  LatticeConfig cfg;
  const std::vector<double> masses = detail::double_array(j, "masses_kg", n);
  const std::vector<double> inertias = detail::double_array(j, "inertias_kgm2", n);
  cfg.drag_linear = j.at("drag_linear").get<double>();
  cfg.drag_yaw = j.at("drag_yaw").get<double>();
  cfg.drag_sway = j.value("drag_sway", cfg.drag_linear);

  const double curve_period = j.value("thrust_period_s", kDefaultPeriod);
  ThrustCurve curve = j.contains("thrust_curve")
                          ? thrust_curve_from_json(j.at("thrust_curve"), curve_period)
                          : default_boat().thrust_curve;
  const double spacing = j.at("spacing_m").get<double>();
  if (!(spacing > 0.0)) throw std::invalid_argument("lattice: spacing_m must be positive");
  const double f_max = j.value("f_max_n", curve.max_thrust());

  for (std::size_t i = 0; i < n; ++i) {
    BoatParams b;
    b.mass = masses[i];
    b.moment_of_inertia = inertias[i];
    b.diameter = spacing;
    b.f_max = f_max;
    b.amp_min = curve.amp_min();
    b.amp_max = curve.amp_max();
    b.thrust_curve = curve;
    cfg.boats.push_back(std::move(b));
  }

  if (j.contains("positions_x_m")) {
    cfg.positions_x = detail::double_array(j, "positions_x_m", n);
  } else {
    double total = 0.0, moment = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += masses[i];
      moment += masses[i] * static_cast<double>(i) * spacing;
    }
    const double com = moment / total;
    for (std::size_t i = 0; i < n; ++i)
      cfg.positions_x.push_back(static_cast<double>(i) * spacing - com);
  }
  cfg.validate();
  return cfg;
}

inline LatticeConfig load_lattice(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lattice file: " + path.string());
  return lattice_from_json(json::parse(in));
}

inline json gains_to_json(const ControllerGains& g) {
  return json{{"kp_v", g.velocity.kp},
              {"kd_v", g.velocity.kd},
              {"kp_yaw", g.yaw.kp},
              {"kd_yaw", g.yaw.kd}};
}

inline ControllerGains gains_from_json(const json& j) {
  ControllerGains g;
  g.velocity.kp = j.value("kp_v", g.velocity.kp);
  g.velocity.kd = j.value("kd_v", g.velocity.kd);
  g.yaw.kp = j.value("kp_yaw", g.yaw.kp);
  g.yaw.kd = j.value("kd_yaw", g.yaw.kd);
  return g;
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "vel_step") return Scenario::vel_step;
  if (s == "yaw_step") return Scenario::yaw_step;
  if (s == "combined_turn") return Scenario::combined_turn;
  if (s == "mismatch") return Scenario::mismatch;
  throw std::invalid_argument("unknown scenario: " + s);
}

// Reads an experiment spec. The lattice comes from one of "lattice"
// (inline object), "lattice_file" (path relative to base_dir) or
// "config_n" (a built-in 2..5 boat reference lattice). Phases come either
// from an explicit "phases" array or from the "scenario" shorthand
// (vel_step, yaw_step, combined_turn, mismatch) with "step_magnitude" and
// "duration_s".
inline ExperimentSpec experiment_from_json(const json& j,
                                           const std::filesystem::path& base_dir = ".") {
  LatticeConfig plant;
  if (j.contains("lattice"))
    plant = lattice_from_json(j.at("lattice"));
  else if (j.contains("lattice_file"))
    plant = load_lattice(base_dir / j.at("lattice_file").get<std::string>());
  else if (j.contains("config_n"))
    plant = reference_params(j.at("config_n").get<int>());
  else
    throw std::invalid_argument("experiment: need 'lattice', 'lattice_file' or 'config_n'");

  const double period = j.value("period_s", kDefaultPeriod);
  ExperimentSpec spec;
  if (j.contains("scenario")) {
    spec = scenario_experiment(scenario_from_string(j.at("scenario").get<std::string>()), plant,
                               j.at("step_magnitude").get<double>(), j.value("duration_s", 90.0),
                               j.value("assumed_drag_n", 0), period);
  } else {
    spec.plant = plant;
    spec.period = period;
    for (const auto& p : j.at("phases")) {
      Phase ph;
      ph.duration = p.value("duration_s", 45.0);
      ph.target.v_desired = p.value("v_mps", 0.0);
      ph.target.yaw_desired = p.value("yaw_rad", 0.0);
      spec.phases.push_back(ph);
    }
    if (spec.phases.empty()) throw std::invalid_argument("experiment: no phases");
    if (j.contains("assumed_drag_n"))
      spec.model = with_reference_drags(spec.plant, j.at("assumed_drag_n").get<int>());
  }

  spec.substeps = j.value("substeps", 100);
  if (j.contains("integrator")) {
    const auto name = j.at("integrator").get<std::string>();
    if (name == "rk4")
      spec.integrator = Integrator::rk4;
    else if (name == "euler")
      spec.integrator = Integrator::euler;
    else
      throw std::invalid_argument("unknown integrator: " + name);
  }
  if (j.contains("gains")) spec.gains = gains_from_json(j.at("gains"));
  if (j.contains("disturbance")) {
    const auto& d = j.at("disturbance");
    spec.disturbance.switch_impulse_sway = d.value("switch_impulse_sway", 0.0);
    spec.disturbance.switch_impulse_yaw = d.value("switch_impulse_yaw", 0.0);
    spec.disturbance.thrust_scale = d.value("thrust_scale", 1.0);
    spec.disturbance.seed = d.value("seed", std::uint64_t{0});
  }
  if (j.contains("seed")) spec.disturbance.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("initial")) {
    const auto& s = j.at("initial");
    spec.initial.x = s.value("x_m", 0.0);
    spec.initial.y = s.value("y_m", 0.0);
    spec.initial.yaw = s.value("yaw_rad", 0.0);
    spec.initial.v_surge = s.value("v_surge_mps", 0.0);
    spec.initial.v_sway = s.value("v_sway_mps", 0.0);
    spec.initial.yaw_rate = s.value("yaw_rate_radps", 0.0);
  }
  if (j.contains("tail_geometry")) {
    const auto& g = j.at("tail_geometry");
    spec.tail_geometry.tail_reach = g.value("tail_reach_m", spec.tail_geometry.tail_reach);
    spec.tail_geometry.body_radius = g.value("body_radius_m", spec.tail_geometry.body_radius);
  }
  spec.enforce_guard = j.value("enforce_guard", true);
  spec.guard_samples = j.value("guard_samples", 180);
  return spec;
}

inline ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment file: " + path.string());
  return experiment_from_json(json::parse(in), path.parent_path());
}

// Reads a waveform schedule: shared "period_s" and "cycle_start_s", and one
// command object per boat. Per-command "omega_radps"/"cycle_start_s"
// default to the shared clock, so desynchronized schedules are expressible
// for guard testing.
inline CycleSchedule schedule_from_json(const json& j) {
  CycleSchedule sched;
  sched.period = j.value("period_s", kDefaultPeriod);
  sched.cycle_start = j.value("cycle_start_s", 0.0);
  const double omega = 2.0 * std::numbers::pi / sched.period;
  for (const auto& c : j.at("commands")) {
    WaveformCommand cmd;
    cmd.centerline = c.value("centerline_rad", 0.0);
    cmd.amplitude = c.at("amplitude_rad").get<double>();
    cmd.angular_frequency = c.value("omega_radps", omega);
    cmd.cycle_start = c.value("cycle_start_s", sched.cycle_start);
    sched.commands.push_back(cmd);
  }
  if (sched.commands.empty()) throw std::invalid_argument("schedule: no commands");
  return sched;
}

inline json verdict_to_json(const GuardVerdict& v) {
  json j;
  j["safe"] = v.safe;
  j["assumptions_ok"] = v.assumptions.ok;
  if (!v.assumptions.ok) j["assumptions_detail"] = v.assumptions.detail;
  j["sign_agreement_ok"] = v.sign_agreement.ok;
  if (!v.sign_agreement.ok) j["sign_agreement_detail"] = v.sign_agreement.detail;
  j["min_clearance_m"] = v.min_clearance_m;
  return j;
}

inline json step_report_to_json(const StepReport& r) {
  return json{{"rise_time_s", r.rise_time_s},
              {"rms_error", r.rms_error},
              {"overshoot_frac", r.overshoot_frac},
              {"settled", r.settled}};
}

inline json drag_fit_to_json(const DragFit& f) {
  return json{{"drag", f.drag},
              {"v0", f.v0},
              {"drag_std", f.drag_std},
              {"v0_std", f.v0_std},
              {"rms_residual", f.rms_residual},
              {"iterations", f.iterations}};
}

// Trajectory CSV: fixed kinematic columns, then amp/centerline/force
// triples per boat.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.samples.empty()) throw std::invalid_argument("write_trajectory_csv: empty trajectory");
  const std::size_t n = traj.samples.front().amplitudes.size();
  out << "time_s,x_m,y_m,yaw_rad,v_surge_mps,v_sway_mps,yaw_rate_radps";
  for (std::size_t i = 0; i < n; ++i)
    out << ",amp_rad_" << i << ",centerline_rad_" << i << ",force_N_" << i;
  out << "\n";
  for (const auto& s : traj.samples) {
    out << detail::g17(s.t) << ',' << detail::g17(s.state.x) << ',' << detail::g17(s.state.y)
        << ',' << detail::g17(s.state.yaw) << ',' << detail::g17(s.state.v_surge) << ','
        << detail::g17(s.state.v_sway) << ',' << detail::g17(s.state.yaw_rate);
    for (std::size_t i = 0; i < n; ++i)
      out << ',' << detail::g17(s.amplitudes[i]) << ',' << detail::g17(s.centerlines[i]) << ','
          << detail::g17(s.forces[i]);
    out << "\n";
  }
}

// Per-cycle controller log CSV.
inline void write_cycles_csv(std::ostream& out, const RunResult& run) {
  const std::size_t n = run.cycles.empty() ? 0 : run.cycles.front().forces.size();
  out << "cycle,start_s,v_obs_mps,v_cmd_mps,target_v_mps,target_yaw_rad,saturated,guard_safe";
  for (std::size_t i = 0; i < n; ++i) out << ",force_N_" << i;
  out << "\n";
  for (const auto& c : run.cycles) {
    out << c.index << ',' << detail::g17(c.start) << ',' << detail::g17(c.v_obs) << ','
        << detail::g17(c.v_cmd) << ',' << detail::g17(c.target.v_desired) << ','
        << detail::g17(c.target.yaw_desired) << ',' << (c.saturated ? 1 : 0) << ','
        << (c.guard_safe ? 1 : 0);
    for (double f : c.forces) out << ',' << detail::g17(f);
    out << "\n";
  }
}

// Numeric CSV reader for measurement series; a single leading header row is
// skipped if it does not parse as numbers.
inline std::vector<std::array<double, 2>> read_two_column_csv(std::istream& in) {
  std::vector<std::array<double, 2>> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double a = 0.0, b = 0.0;
    if (!(row >> a >> b)) {
      if (first) {
        first = false;
        continue;
      }
      throw std::invalid_argument("csv: non-numeric row: " + line);
    }
    first = false;
    out.push_back({a, b});
  }
  if (out.empty()) throw std::invalid_argument("csv: no data rows");
  return out;
}

}  // namespace modlattice
