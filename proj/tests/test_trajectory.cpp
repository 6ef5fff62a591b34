#include <cmath>
#include <numbers>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "modlattice/trajectory.hpp"

using namespace modlattice;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

// Builds a kinematic trajectory from a world-position function sampled at
// dt, with yaw fixed at zero so surge reads along +y.
template <typename FX, typename FY>
Trajectory from_path(FX fx, FY fy, double duration, double dt, double period = kDefaultPeriod) {
  Trajectory traj;
  traj.dt = dt;
  traj.period = period;
  const int n = static_cast<int>(std::lround(duration / dt));
  for (int k = 0; k <= n; ++k) {
    TrajectorySample s;
    s.t = k * dt;
    s.state.x = fx(s.t);
    s.state.y = fy(s.t);
    traj.samples.push_back(s);
  }
  return traj;
}

}  // namespace

TEST_CASE("period-wise speed is exact for uniform motion") {
  const double v = 0.042;
  Trajectory traj = from_path([](double) { return 0.0; }, [v](double t) { return v * t; }, 15.0,
                              0.015);
  for (auto& s : traj.samples) s.state.v_surge = v;
  const std::vector<double> speeds = period_speed(traj);
  for (double s : speeds) REQUIRE_THAT(s, WithinAbs(v, 1e-12));
}

TEST_CASE("period-wise speed cancels an oscillation of exactly one period") {
  // Position = ramp + sinusoid at the cycle frequency: the trailing
  // one-period displacement window sees the sinusoid contribute zero.
  const double v = 0.05, amp = 0.01;
  const double omega = 2.0 * pi / kDefaultPeriod;
  Trajectory traj =
      from_path([](double) { return 0.0; },
                [=](double t) { return v * t + amp * std::sin(omega * t); }, 15.0, 0.015);
  const std::vector<double> speeds = period_speed(traj);
  const auto back = static_cast<std::size_t>(std::lround(kDefaultPeriod / traj.dt));
  for (std::size_t k = back; k < speeds.size(); ++k) REQUIRE_THAT(speeds[k], WithinAbs(v, 1e-10));
}

TEST_CASE("before one full period the instantaneous surge speed stands in") {
  Trajectory traj = from_path([](double) { return 0.0; }, [](double t) { return 0.03 * t; }, 3.0,
                              0.015);
  for (auto& s : traj.samples) s.state.v_surge = 0.99;  // marker value
  const std::vector<double> speeds = period_speed(traj);
  const auto back = static_cast<std::size_t>(std::lround(kDefaultPeriod / traj.dt));
  for (std::size_t k = 0; k < back; ++k) REQUIRE(speeds[k] == 0.99);
  for (std::size_t k = back; k < speeds.size(); ++k) REQUIRE_THAT(speeds[k], WithinAbs(0.03, 1e-12));
}

TEST_CASE("period-wise speed projects on the current heading") {
  // Motion along world -x with yaw at +pi/2 is pure positive surge.
  Trajectory traj = from_path([](double t) { return -0.04 * t; }, [](double) { return 0.0; }, 8.0,
                              0.015);
  for (auto& s : traj.samples) s.state.yaw = pi / 2.0;
  const std::vector<double> speeds = period_speed(traj);
  REQUIRE_THAT(speeds.back(), WithinAbs(0.04, 1e-12));
}

TEST_CASE("a first-order response rises in tau times ln 10") {
  const double tau = 1.8, setpoint = 0.06;
  std::vector<double> t, v;
  for (int k = 0; k <= 4000; ++k) {
    t.push_back(k * 0.005);
    v.push_back(setpoint * (1.0 - std::exp(-t.back() / tau)));
  }
  // 90% crossing of 1 - exp(-t/tau) happens at tau ln 10.
  CHECK_THAT(rise_time(t, v, 0.0, setpoint), WithinRel(tau * std::log(10.0), 1e-4));
}

TEST_CASE("rise time interpolates between samples and handles edge cases") {
  const std::vector<double> t = {0.0, 1.0, 2.0, 3.0};
  SECTION("linear crossing mid-segment") {
    const std::vector<double> v = {0.0, 0.4, 0.8, 1.2};
    // Target 0.9: crosses between t=2 (0.8) and t=3 (1.2) at 1/4 in.
    CHECK_THAT(rise_time(t, v, 0.0, 1.0), WithinAbs(2.25, 1e-12));
  }
  SECTION("already there at the start") {
    const std::vector<double> v = {1.0, 1.0, 1.0, 1.0};
    CHECK(rise_time(t, v, 0.0, 1.0) == 0.0);
  }
  SECTION("never crossing yields NaN") {
    const std::vector<double> v = {0.0, 0.1, 0.2, 0.3};
    CHECK(std::isnan(rise_time(t, v, 0.0, 1.0)));
  }
  SECTION("downward steps work symmetrically") {
    const std::vector<double> v = {1.0, 0.6, 0.2, 0.0};
    // Falling to 0: target 0.1, crossed between 0.2 and 0.0 at t=2.5.
    CHECK_THAT(rise_time(t, v, 1.0, 0.0), WithinAbs(2.5, 1e-12));
  }
  SECTION("zero step is rejected") {
    const std::vector<double> v = {0.0, 0.0, 0.0, 0.0};
    REQUIRE_THROWS_AS(rise_time(t, v, 0.5, 0.5), std::invalid_argument);
  }
}

TEST_CASE("rms error over a window matches closed forms") {
  std::vector<double> t, v;
  for (int k = 0; k <= 10000; ++k) {
    t.push_back(k * 0.01);
    v.push_back(0.06 + 0.004 * std::sin(2.0 * pi * t.back() / 3.0));
  }
  // Pure sinusoid about the setpoint: RMS = amplitude / sqrt(2). Window a
  // whole number of sin periods so the average is clean.
  CHECK_THAT(rms_error(t, v, 0.06, 0.0, 30.0), WithinRel(0.004 / std::sqrt(2.0), 1e-3));

  const std::vector<double> flat(t.size(), 0.06);
  CHECK(rms_error(t, flat, 0.06, 10.0, 60.0) == 0.0);
  REQUIRE_THROWS_AS(rms_error(t, v, 0.06, 200.0, 300.0), std::invalid_argument);
}

TEST_CASE("overshoot is the peak past the setpoint in step units") {
  const std::vector<double> rising = {0.0, 0.5, 1.1, 0.9, 1.05, 1.0};
  CHECK_THAT(overshoot(rising, 0.0, 1.0), WithinAbs(0.1, 1e-12));

  const std::vector<double> clean = {0.0, 0.5, 0.9, 0.95};
  CHECK(overshoot(clean, 0.0, 1.0) == 0.0);

  // Downward step: excursion below the setpoint counts.
  const std::vector<double> falling = {1.0, 0.4, -0.2, 0.1};
  CHECK_THAT(overshoot(falling, 1.0, 0.0), WithinAbs(0.2, 1e-12));
  REQUIRE_THROWS_AS(overshoot(rising, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("yaw progress unwraps against the initial heading") {
  // A heading sweeping through the pi seam: absolute values jump, progress
  // does not.
  std::vector<double> yaw;
  for (int k = 0; k <= 100; ++k) yaw.push_back(wrap_angle(2.5 + 0.01 * k));
  const std::vector<double> prog = yaw_progress(yaw, 2.5);
  for (int k = 0; k <= 100; ++k) REQUIRE_THAT(prog[k], WithinAbs(0.01 * k, 1e-12));

  // A full 2pi offset in the recorded heading leaves progress unchanged.
  std::vector<double> shifted = yaw;
  for (double& a : shifted) a += 2.0 * pi;
  const std::vector<double> prog2 = yaw_progress(shifted, 2.5);
  for (std::size_t k = 0; k < prog.size(); ++k) REQUIRE_THAT(prog2[k], WithinAbs(prog[k], 1e-9));
}

TEST_CASE("quantiles follow the linear-interpolation convention") {
  const std::vector<double> xs = {4.0, 2.0, 1.0, 3.0};  // unsorted on purpose
  CHECK_THAT(quantile(xs, 0.25), WithinAbs(1.75, 1e-15));
  CHECK_THAT(quantile(xs, 0.5), WithinAbs(2.5, 1e-15));
  CHECK_THAT(quantile(xs, 0.75), WithinAbs(3.25, 1e-15));
  CHECK(quantile(xs, 0.0) == 1.0);
  CHECK(quantile(xs, 1.0) == 4.0);
  CHECK(quantile({7.0}, 0.5) == 7.0);
  REQUIRE_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(quantile(xs, 1.5), std::invalid_argument);

  const Spread s = spread(xs);
  CHECK_THAT(s.iqr(), WithinAbs(1.5, 1e-15));
  CHECK_THAT(s.median, WithinAbs(2.5, 1e-15));

  // Identical runs collapse to a degenerate spread.
  const Spread flat = spread({0.3, 0.3, 0.3, 0.3, 0.3});
  CHECK(flat.iqr() == 0.0);
  CHECK(flat.q1 == flat.q3);
}

TEST_CASE("mean of a handful of values") {
  CHECK_THAT(mean({1.0, 2.0, 6.0}), WithinAbs(3.0, 1e-15));
  REQUIRE_THROWS_AS(mean({}), std::invalid_argument);
}
