// Command-line front end: closed-loop experiment runs, disturbance-seed
// sweeps, schedule safety verification and model identification from
// logged data. All heavy lifting lives in the headers under
// include/modlattice/.
//
// Exit codes: 0 success (and "safe" for guard verify), 1 unsafe schedule,
// 2 usage or runtime error.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "modlattice/modlattice.hpp"

namespace ml = modlattice;
namespace fs = std::filesystem;

namespace {

ml::json spread_to_json(const std::vector<double>& xs) {
  ml::json j;
  j["n"] = xs.size();
  if (xs.empty()) {
    j["median"] = nullptr;
    j["q1"] = nullptr;
    j["q3"] = nullptr;
    j["iqr"] = nullptr;
    return j;
  }
  const ml::Spread s = ml::spread(xs);
  j["median"] = s.median;
  j["q1"] = s.q1;
  j["q3"] = s.q3;
  j["iqr"] = s.iqr();
  return j;
}

ml::json run_summary(const ml::ExperimentSpec& spec, const ml::RunResult& run) {
  ml::json phases = ml::json::array();
  for (std::size_t i = 0; i < spec.phases.size(); ++i) {
    const ml::PhaseWindow w = ml::phase_window(spec, i);
    ml::json pj;
    pj["t0_s"] = w.t0;
    pj["t1_s"] = w.t1;
    pj["v_mps"] = w.target.v_desired;
    pj["yaw_rad"] = w.target.yaw_desired;
    pj["speed_step"] = nullptr;
    pj["yaw_step"] = nullptr;
    if (i > 0) {
      const ml::ControlTarget& prev = spec.phases[i - 1].target;
      if (prev.v_desired != w.target.v_desired)
        pj["speed_step"] = ml::step_report_to_json(ml::speed_step_report(run, w));
      if (ml::wrap_angle(w.target.yaw_desired - prev.yaw_desired) != 0.0)
        pj["yaw_step"] = ml::step_report_to_json(ml::yaw_step_report(run, w));
    }
    phases.push_back(std::move(pj));
  }
  ml::json j;
  j["phases"] = std::move(phases);
  j["guard_violations"] = run.guard_violations;
  j["centerline_transitions"] = run.centerline_transitions;
  const ml::BodyState& last = run.trajectory.samples.back().state;
  j["final_state"] = ml::json{{"x_m", last.x},
                              {"y_m", last.y},
                              {"yaw_rad", last.yaw},
                              {"v_surge_mps", last.v_surge},
                              {"v_sway_mps", last.v_sway},
                              {"yaw_rate_radps", last.yaw_rate}};
  return j;
}

void write_json(const fs::path& path, const ml::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

int cmd_run(const std::string& spec_path, const std::string& out_dir) {
  const ml::ExperimentSpec spec = ml::load_experiment(spec_path);
  const ml::RunResult run = ml::run_experiment(spec);
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "trajectory.csv");
    if (!out) throw std::runtime_error("cannot write trajectory.csv");
    ml::write_trajectory_csv(out, run.trajectory);
  }
  {
    std::ofstream out(fs::path(out_dir) / "cycles.csv");
    if (!out) throw std::runtime_error("cannot write cycles.csv");
    ml::write_cycles_csv(out, run);
  }
  const ml::json summary = run_summary(spec, run);
  write_json(fs::path(out_dir) / "summary.json", summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct SweepEntry {
  std::string name;
  ml::ExperimentSpec spec;
  std::vector<std::uint64_t> seeds;
};

std::vector<std::uint64_t> seeds_from_json(const ml::json& j,
                                           const std::vector<std::uint64_t>& fallback) {
  if (j.contains("seeds")) {
    std::vector<std::uint64_t> seeds;
    for (const auto& s : j.at("seeds")) seeds.push_back(s.get<std::uint64_t>());
    return seeds;
  }
  if (j.contains("n_seeds") || j.contains("first_seed")) {
    std::vector<std::uint64_t> seeds;
    const auto n = j.value("n_seeds", 25);
    const auto first = j.value("first_seed", std::uint64_t{1});
    for (int k = 0; k < n; ++k) seeds.push_back(first + static_cast<std::uint64_t>(k));
    return seeds;
  }
  return fallback;
}

// Sweep spec: either one "experiment"/"experiment_file" or an
// "experiments" array of named experiment specs; seeds may be set at the
// top level and overridden per entry.
std::vector<SweepEntry> load_sweep(const std::string& spec_path) {
  std::ifstream in(spec_path);
  if (!in) throw std::runtime_error("cannot open sweep file: " + spec_path);
  const ml::json j = ml::json::parse(in);
  const fs::path base = fs::path(spec_path).parent_path();

  const std::vector<std::uint64_t> default_seeds = seeds_from_json(j, {1, 2, 3, 4});

  const auto load_entry = [&](const ml::json& ej, const std::string& default_name) {
    SweepEntry e;
    e.name = ej.value("name", default_name);
    if (ej.contains("experiment_file"))
      e.spec = ml::load_experiment(base / ej.at("experiment_file").get<std::string>());
    else if (ej.contains("experiment"))
      e.spec = ml::experiment_from_json(ej.at("experiment"), base);
    else
      e.spec = ml::experiment_from_json(ej, base);
    e.seeds = seeds_from_json(ej, default_seeds);
    if (e.seeds.empty()) throw std::invalid_argument("sweep: entry '" + e.name + "' has no seeds");
    return e;
  };

  std::vector<SweepEntry> entries;
  if (j.contains("experiments")) {
    std::size_t k = 0;
    for (const auto& ej : j.at("experiments"))
      entries.push_back(load_entry(ej, "exp" + std::to_string(k++)));
  } else {
    entries.push_back(load_entry(j, "exp0"));
  }
  if (entries.empty()) throw std::invalid_argument("sweep: no experiments");
  return entries;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_dir, bool trajectories) {
  const std::vector<SweepEntry> entries = load_sweep(spec_path);
  fs::create_directories(out_dir);

  std::ofstream metrics(fs::path(out_dir) / "metrics.csv");
  if (!metrics) throw std::runtime_error("cannot write metrics.csv");
  metrics << "name,n_boats,seed,phase,kind,rise_time_s,rms_error,overshoot_frac,settled\n";

  struct Bucket {
    std::size_t n_boats = 0;
    std::vector<double> rise, rms, shoot;
  };
  std::map<std::tuple<std::string, std::size_t, std::string>, Bucket> buckets;

  for (const SweepEntry& entry : entries) {
    for (std::uint64_t seed : entry.seeds) {
      ml::ExperimentSpec one = entry.spec;
      one.disturbance.seed = seed;
      const ml::RunResult run = ml::run_experiment(one);
      if (trajectories) {
        const fs::path dir = fs::path(out_dir) / (entry.name + "_seed_" + std::to_string(seed));
        fs::create_directories(dir);
        std::ofstream out(dir / "trajectory.csv");
        ml::write_trajectory_csv(out, run.trajectory);
      }
      for (std::size_t i = 1; i < one.phases.size(); ++i) {
        const ml::PhaseWindow w = ml::phase_window(one, i);
        const ml::ControlTarget& prev = one.phases[i - 1].target;
        const auto emit = [&](const char* kind, const ml::StepReport& rep) {
          char row[256];
          std::snprintf(row, sizeof row, "%s,%zu,%llu,%zu,%s,%.17g,%.17g,%.17g,%d\n",
                        entry.name.c_str(), one.plant.size(),
                        static_cast<unsigned long long>(seed), i, kind, rep.rise_time_s,
                        rep.rms_error, rep.overshoot_frac, rep.settled ? 1 : 0);
          metrics << row;
          Bucket& b = buckets[{entry.name, i, kind}];
          b.n_boats = one.plant.size();
          b.rise.push_back(rep.rise_time_s);
          b.rms.push_back(rep.rms_error);
          b.shoot.push_back(rep.overshoot_frac);
        };
        if (prev.v_desired != w.target.v_desired)
          emit("speed", ml::speed_step_report(run, w));
        if (ml::wrap_angle(w.target.yaw_desired - prev.yaw_desired) != 0.0)
          emit("yaw", ml::yaw_step_report(run, w));
      }
    }
  }

  std::ofstream table(fs::path(out_dir) / "summary.csv");
  if (!table) throw std::runtime_error("cannot write summary.csv");
  table << "name,n_boats,phase,kind,metric,q1,median,q3,iqr\n";
  ml::json steps = ml::json::array();
  for (const auto& [key, b] : buckets) {
    const auto& [name, phase, kind] = key;
    const auto emit_row = [&](const char* metric, const std::vector<double>& xs) {
      const ml::Spread s = ml::spread(xs);
      char row[256];
      std::snprintf(row, sizeof row, "%s,%zu,%zu,%s,%s,%.17g,%.17g,%.17g,%.17g\n", name.c_str(),
                    b.n_boats, phase, kind.c_str(), metric, s.q1, s.median, s.q3, s.iqr());
      table << row;
    };
    emit_row("rise_time_s", b.rise);
    emit_row("rms_error", b.rms);
    emit_row("overshoot_frac", b.shoot);
    ml::json sj;
    sj["name"] = name;
    sj["n_boats"] = b.n_boats;
    sj["phase"] = phase;
    sj["kind"] = kind;
    sj["n_runs"] = b.rise.size();
    sj["rise_time_s"] = spread_to_json(b.rise);
    sj["rms_error"] = spread_to_json(b.rms);
    sj["overshoot_frac"] = spread_to_json(b.shoot);
    steps.push_back(std::move(sj));
  }
  ml::json summary;
  summary["steps"] = std::move(steps);
  write_json(fs::path(out_dir) / "summary.json", summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_guard_verify(const std::string& schedule_path, const std::string& lattice_path,
                     int reference_n, int samples, const ml::TailGeometry& geom) {
  std::ifstream in(schedule_path);
  if (!in) throw std::runtime_error("cannot open schedule file: " + schedule_path);
  const ml::CycleSchedule sched = ml::schedule_from_json(ml::json::parse(in));

  ml::LatticeConfig lattice;
  if (!lattice_path.empty())
    lattice = ml::load_lattice(lattice_path);
  else if (reference_n > 0)
    lattice = ml::reference_params(reference_n);
  else
    lattice = ml::reference_params(static_cast<int>(sched.commands.size()));

  const ml::GuardVerdict verdict = ml::verify_schedule(sched, lattice, geom, samples);
  std::cout << ml::verdict_to_json(verdict).dump(2) << "\n";
  return verdict.safe ? 0 : 1;
}

int cmd_fit_drag(const std::string& data_path, double mass, const std::string& out_path) {
  std::ifstream in(data_path);
  if (!in) throw std::runtime_error("cannot open data file: " + data_path);
  const auto rows = ml::read_two_column_csv(in);
  std::vector<double> t, v;
  for (const auto& r : rows) {
    t.push_back(r[0]);
    v.push_back(r[1]);
  }
  const ml::DragFit fit = ml::fit_drag(t, v, mass);
  const ml::json j = ml::drag_fit_to_json(fit);
  if (!out_path.empty()) write_json(out_path, j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_calibrate_thrust(const std::string& data_path, double drag_linear, int n_boats,
                         double period, const std::string& out_path) {
  std::ifstream in(data_path);
  if (!in) throw std::runtime_error("cannot open data file: " + data_path);
  const auto rows = ml::read_two_column_csv(in);
  std::vector<ml::ThrustCalibrationPoint> points;
  for (const auto& r : rows) points.push_back({r[0], r[1]});
  const ml::ThrustCurve curve = ml::calibrate_thrust(points, drag_linear, n_boats, period);
  const ml::json j = ml::thrust_curve_to_json(curve);
  if (!out_path.empty()) write_json(out_path, j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar simulator and controller for parallel lattices of single-thruster "
               "swimming modules"};
  app.require_subcommand(1);

  std::string spec_path, out_dir = "out", data_path, out_path, lattice_path, schedule_path;
  int reference_n = 0, samples = 720, n_boats = 0;
  double mass = 0.0, drag_linear = 0.0, period = ml::kDefaultPeriod;
  ml::TailGeometry geom;
  bool trajectories = false;

  auto* run = app.add_subcommand("run", "Run one closed-loop experiment");
  run->add_option("--spec", spec_path, "experiment JSON")->required();
  run->add_option("--out", out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "Repeat experiments across disturbance seeds");
  sweep->add_option("--spec", spec_path, "sweep JSON")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_flag("--trajectories", trajectories, "also write per-run trajectory CSVs");

  auto* guard = app.add_subcommand("guard", "Waveform schedule safety checks");
  guard->require_subcommand(1);
  auto* verify = guard->add_subcommand("verify", "Verify one cycle schedule (exit 0 safe, 1 unsafe)");
  verify->add_option("schedule", schedule_path, "schedule JSON")->required();
  verify->add_option("--lattice", lattice_path, "lattice JSON (default: reference lattice)");
  verify->add_option("--reference-n", reference_n, "use the built-in n-boat reference lattice");
  verify->add_option("--samples", samples, "samples per cycle");
  verify->add_option("--tail-reach", geom.tail_reach, "tail length, m");
  verify->add_option("--body-radius", geom.body_radius, "hull radius, m");

  auto* sysid = app.add_subcommand("sysid", "Model identification from logged data");
  sysid->require_subcommand(1);
  auto* fit = sysid->add_subcommand("fit-drag", "Fit quadratic drag to a coast-down");
  fit->add_option("--data", data_path, "CSV with time_s,speed columns")->required();
  fit->add_option("--mass", mass, "mass (or moment of inertia for yaw), SI")->required();
  fit->add_option("--out", out_path, "also write the fit JSON here");
  auto* cal = sysid->add_subcommand("calibrate-thrust", "Thrust curve from steady speeds");
  cal->add_option("--data", data_path, "CSV with amp_rad,steady_speed_mps columns")->required();
  cal->add_option("--drag-linear", drag_linear, "linear drag coefficient, kg/m")->required();
  cal->add_option("--n-boats", n_boats, "boats sharing the amplitude")->required();
  cal->add_option("--period", period, "oscillation period, s");
  cal->add_option("--out", out_path, "also write the curve JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(spec_path, out_dir);
    if (sweep->parsed()) return cmd_sweep(spec_path, out_dir, trajectories);
    if (verify->parsed())
      return cmd_guard_verify(schedule_path, lattice_path, reference_n, samples, geom);
    if (fit->parsed()) return cmd_fit_drag(data_path, mass, out_path);
    if (cal->parsed()) return cmd_calibrate_thrust(data_path, drag_linear, n_boats, period, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
