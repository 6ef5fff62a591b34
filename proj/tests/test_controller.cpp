#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "modlattice/controller.hpp"
#include "modlattice/undock_guard.hpp"

using namespace modlattice;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

// Independent optimality oracle: solve the equality-constrained
// least-squares problem (min ||f||^2 s.t. P f = b) through its stationarity
// system instead of the pseudoinverse formula.
Eigen::VectorXd constrained_min_norm(const Eigen::Matrix2Xd& p, const Eigen::Vector2d& b) {
  const Eigen::Index n = p.cols();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 2, n + 2);
  kkt.topLeftCorner(n, n).setIdentity();
  kkt.topRightCorner(n, 2) = p.transpose();
  kkt.bottomLeftCorner(2, n) = p;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 2);
  rhs.tail(2) = b;
  return kkt.fullPivLu().solve(rhs).head(n);
}

LatticeConfig random_config(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> gap(0.8 * kDefaultSpacing, 1.5 * kDefaultSpacing);
  std::uniform_real_distribution<double> mass(0.5, 0.8);
  LatticeConfig cfg;
  cfg.drag_linear = 7.0;
  cfg.drag_yaw = 32e-3;
  cfg.drag_sway = 7.0;
  std::vector<double> raw = {0.0};
  for (std::size_t i = 1; i < n; ++i) raw.push_back(raw.back() + gap(rng));
  double total = 0.0, moment = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    BoatParams b = default_boat();
    b.mass = mass(rng);
    cfg.boats.push_back(b);
    total += b.mass;
    moment += b.mass * raw[i];
  }
  const double com = moment / total;
  for (std::size_t i = 0; i < n; ++i) cfg.positions_x.push_back(raw[i] - com);
  return cfg;
}

}  // namespace

TEST_CASE("minimum-norm allocation matches the constrained least-squares oracle") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> force(-0.1, 0.1);
  std::uniform_real_distribution<double> torque(-0.02, 0.02);
  std::uniform_int_distribution<std::size_t> boats(2, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const LatticeConfig cfg = random_config(rng, boats(rng));
    const double net_f = force(rng);
    const double net_tau = torque(rng);
    const Eigen::VectorXd f = allocate_min_norm(cfg, net_f, net_tau);
    const Eigen::Matrix2Xd p = structural_matrix(cfg);
    const Eigen::VectorXd oracle = constrained_min_norm(p, {net_f, net_tau});
    REQUIRE((f - oracle).lpNorm<Eigen::Infinity>() < 1e-9);
    const Eigen::Vector2d realized = p * f;
    REQUIRE_THAT(realized[0], WithinAbs(net_f, 1e-10));
    REQUIRE_THAT(realized[1], WithinAbs(net_tau, 1e-10));
  }
}

TEST_CASE("symmetric three-boat allocations have closed forms") {
  const LatticeConfig cfg = reference_params(3);
  const double s = kDefaultSpacing;

  const Eigen::VectorXd pure_force = allocate_min_norm(cfg, 0.03, 0.0);
  for (int i = 0; i < 3; ++i) REQUIRE_THAT(pure_force[i], WithinAbs(0.01, 1e-15));

  const double tau = 0.004;
  const Eigen::VectorXd pure_torque = allocate_min_norm(cfg, 0.0, tau);
  CHECK_THAT(pure_torque[0], WithinAbs(-tau / (2.0 * s), 1e-15));
  CHECK_THAT(pure_torque[1], WithinAbs(0.0, 1e-15));
  CHECK_THAT(pure_torque[2], WithinAbs(tau / (2.0 * s), 1e-15));
}

TEST_CASE("allocation is linear in the target and affine in boat position") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> val(-0.05, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    const LatticeConfig cfg = random_config(rng, 4 + trial % 3);
    const double f1 = val(rng), t1 = val(rng), f2 = val(rng), t2 = val(rng);
    const Eigen::VectorXd a = allocate_min_norm(cfg, f1, t1);
    const Eigen::VectorXd b = allocate_min_norm(cfg, f2, t2);
    const Eigen::VectorXd ab = allocate_min_norm(cfg, 2.0 * f1 - 3.0 * f2, 2.0 * t1 - 3.0 * t2);
    REQUIRE((ab - (2.0 * a - 3.0 * b)).lpNorm<Eigen::Infinity>() < 1e-12);

    // f_i = alpha + beta x_i exactly: fit the line and check residuals.
    const auto n = static_cast<Eigen::Index>(cfg.size());
    Eigen::MatrixXd design(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      design(i, 0) = 1.0;
      design(i, 1) = cfg.positions_x[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d line = design.colPivHouseholderQr().solve(a);
    REQUIRE((design * line - a).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("no exact solution has smaller internal force norm") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> val(-0.05, 0.05);
  std::normal_distribution<double> perturb(0.0, 0.01);
  for (int trial = 0; trial < 100; ++trial) {
    const LatticeConfig cfg = random_config(rng, 5);
    const Eigen::VectorXd best = allocate_min_norm(cfg, val(rng), val(rng));
    const Eigen::Matrix2Xd p = structural_matrix(cfg);
    // Move within the solution set: add any vector from the nullspace of P.
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(p);
    const Eigen::MatrixXd null_basis = lu.kernel();
    Eigen::VectorXd z(null_basis.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = perturb(rng);
    const Eigen::VectorXd other = best + null_basis * z;
    REQUIRE((p * other - p * best).lpNorm<Eigen::Infinity>() < 1e-12);
    REQUIRE(other.squaredNorm() >= best.squaredNorm() - 1e-18);
    // Orthogonality of the solution to the nullspace is what makes it minimal.
    REQUIRE(std::abs(best.dot(null_basis * z)) < 1e-12);
  }
}

TEST_CASE("two boats achieve any target exactly") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> val(-0.02, 0.02);
  for (int trial = 0; trial < 200; ++trial) {
    const LatticeConfig cfg = random_config(rng, 2);
    const double net_f = val(rng), net_tau = val(rng);
    const Eigen::VectorXd f = allocate_min_norm(cfg, net_f, net_tau);
    const Eigen::Vector2d realized = structural_matrix(cfg) * f;
    REQUIRE_THAT(realized[0], WithinAbs(net_f, 1e-12));
    REQUIRE_THAT(realized[1], WithinAbs(net_tau, 1e-12));
  }
}

TEST_CASE("scaling the target up never shrinks any pre-clamp force") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> val(-0.05, 0.05);
  for (int trial = 0; trial < 100; ++trial) {
    const LatticeConfig cfg = random_config(rng, 3 + trial % 4);
    const double net_f = val(rng), net_tau = val(rng);
    Eigen::VectorXd prev = allocate_min_norm(cfg, 0.0, 0.0);
    for (double scale : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const Eigen::VectorXd f = allocate_min_norm(cfg, scale * net_f, scale * net_tau);
      for (Eigen::Index i = 0; i < f.size(); ++i)
        REQUIRE(std::abs(f[i]) >= std::abs(prev[i]) - 1e-15);
      prev = f;
    }
  }
}

TEST_CASE("degenerate geometry is reported") {
  LatticeConfig cfg = reference_params(2);
  cfg.positions_x = {0.1, 0.1};  // both boats at the same offset
  REQUIRE_THROWS_AS(allocate_min_norm(cfg, 0.01, 0.0), std::invalid_argument);
}

TEST_CASE("allocation clamps per boat and reports saturation") {
  const LatticeConfig cfg = reference_params(3);
  const double f_max = cfg.boats[0].f_max;

  const Allocation mild = allocate(cfg, 0.03, 0.0);
  CHECK_FALSE(mild.saturated);
  for (double f : mild.forces) CHECK(std::abs(f) <= f_max);

  const Allocation hot = allocate(cfg, 1.0, 0.0);
  CHECK(hot.saturated);
  for (double f : hot.forces) CHECK_THAT(f, WithinAbs(f_max, 1e-15));

  const Allocation spin = allocate(cfg, 0.0, -1.0);
  CHECK(spin.saturated);
  CHECK_THAT(spin.forces[0], WithinAbs(f_max, 1e-15));
  CHECK_THAT(spin.forces[2], WithinAbs(-f_max, 1e-15));
}

TEST_CASE("feedforward force and torque cancel quadratic drag") {
  const LatticeConfig cfg = reference_params(3);
  CHECK_THAT(surge_force_for_speed(cfg, 0.06), WithinAbs(7.0 * 0.06 * 0.06, 1e-15));
  CHECK_THAT(surge_force_for_speed(cfg, -0.06), WithinAbs(-7.0 * 0.06 * 0.06, 1e-15));
  CHECK(surge_force_for_speed(cfg, 0.0) == 0.0);

  const double inertia = aggregate(cfg).total_inertia;
  CHECK_THAT(torque_for_yaw_accel(cfg, 0.5, 0.0), WithinRel(inertia * 0.5, 1e-14));
  CHECK_THAT(torque_for_yaw_accel(cfg, 0.0, 0.3), WithinAbs(32e-3 * 0.09, 1e-15));
  CHECK_THAT(torque_for_yaw_accel(cfg, 0.0, -0.3), WithinAbs(-32e-3 * 0.09, 1e-15));
}

TEST_CASE("yaw command is a PD law on the wrapped error") {
  YawLoopGains g;
  g.kp = 0.4;
  g.kd = 0.0;
  CHECK_THAT(yaw_accel_command(g, pi / 2.0, 0.0, 0.0), WithinAbs(0.2 * pi, 1e-15));
  CHECK(yaw_accel_command(g, 1.0, 1.0, 0.0) == 0.0);
  // A raw error of 3pi/2 wraps to the shorter way round: -pi/2.
  CHECK_THAT(yaw_accel_command(g, 3.0 * pi / 2.0, 0.0, 0.0), WithinAbs(-0.2 * pi, 1e-12));

  g.kd = 0.9;
  // Derivative acts on the measured rate only, so a setpoint step alone
  // produces no derivative kick.
  CHECK_THAT(yaw_accel_command(g, pi, 0.0, 0.0) - yaw_accel_command(g, 0.0, 0.0, 0.0),
             WithinAbs(g.kp * pi, 1e-12));
  CHECK_THAT(yaw_accel_command(g, 0.0, 0.0, 0.5), WithinAbs(-0.45, 1e-15));
}

TEST_CASE("speed loop integrates the tracking error onto the setpoint") {
  VelocityLoopGains g;
  g.kp = 0.5;
  g.kd = 0.0;
  VelocityLoop loop(g, 1.5);

  // Hand evaluation: desired 0.06, observing 0, one cycle of 1.5 s adds
  // 0.5 * 0.06 * 1.5 = 0.045 on top of the feedforward setpoint.
  CHECK_THAT(loop.update(0.06, 0.0), WithinAbs(0.105, 1e-15));

  loop.reset();
  CHECK_THAT(loop.update(0.06, 0.06), WithinAbs(0.06, 1e-15));  // zero error: pure feedforward
  CHECK_THAT(loop.update(0.06, 0.06), WithinAbs(0.06, 1e-15));

  loop.reset();
  double prev = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double cmd = loop.update(0.06, 0.0);  // persistent error walks the command up
    REQUIRE(cmd > prev);
    prev = cmd;
  }
}

TEST_CASE("speed loop derivative term responds to error rate") {
  VelocityLoopGains g;
  g.kp = 0.0;
  g.kd = 0.4;
  VelocityLoop loop(g, 2.0);
  CHECK_THAT(loop.update(0.06, 0.00), WithinAbs(0.06, 1e-15));  // first cycle: no history yet
  // Error fell from 0.06 to 0.02: rate -0.02/s adds 0.4 * -0.02 * 2.0.
  CHECK_THAT(loop.update(0.06, 0.04), WithinAbs(0.06 - 0.016, 1e-15));
}

TEST_CASE("changing the speed setpoint restarts the loop from the new feedforward") {
  ControllerGains gains;
  gains.velocity.kp = 0.5;
  gains.velocity.kd = 0.0;
  LatticeController ctl(reference_params(3), gains);

  ControlObservation obs;  // lattice stubbornly at rest
  for (int k = 0; k < 5; ++k) ctl.step({0.06, 0.0}, obs);
  REQUIRE(ctl.commanded_speed() > 0.2);  // correction has wound up

  ctl.step({0.03, 0.0}, obs);
  // Correction restarted: one cycle of error on the new setpoint only.
  CHECK_THAT(ctl.commanded_speed(), WithinAbs(0.03 + 0.5 * 0.03 * kDefaultPeriod, 1e-12));

  // Repeating the same setpoint must not restart it.
  ctl.step({0.03, 0.0}, obs);
  CHECK(ctl.commanded_speed() > 0.03 + 0.5 * 0.03 * kDefaultPeriod);
}

TEST_CASE("zero setpoint at rest commands an all-idle schedule") {
  LatticeController ctl(reference_params(3));
  const Allocation a = ctl.step({0.0, 0.0}, {0.0, 0.0, 0.0});
  const CycleSchedule sched =
      schedule_cycle(a.forces, ctl.config(), 2.0 * pi / kDefaultPeriod, 0);
  for (const auto& cmd : sched.commands) {
    CHECK(cmd.amplitude == 0.0);
    CHECK(cmd.centerline == kForward);
  }
}

TEST_CASE("pure surge demand on a symmetric lattice loads boats equally") {
  LatticeController ctl(reference_params(4));
  const Allocation a = ctl.step({0.06, 0.0}, {0.0, 0.0, 0.0});
  for (double f : a.forces) {
    REQUIRE(f > 0.0);
    REQUIRE_THAT(f, WithinAbs(a.forces[0], 1e-15));
  }
  const CycleSchedule sched =
      schedule_cycle(a.forces, ctl.config(), 2.0 * pi / kDefaultPeriod, 0);
  for (const auto& cmd : sched.commands) {
    CHECK(cmd.centerline == kForward);
    CHECK_THAT(cmd.amplitude, WithinAbs(sched.commands[0].amplitude, 1e-15));
  }
}

TEST_CASE("pure yaw demand deploys an antisymmetric force pattern") {
  LatticeController ctl(reference_params(3));
  const Allocation a = ctl.step({0.0, pi / 2.0}, {0.0, 0.0, 0.0});
  REQUIRE(a.forces[0] < 0.0);
  REQUIRE_THAT(a.forces[1], WithinAbs(0.0, 1e-15));
  REQUIRE(a.forces[2] > 0.0);
  REQUIRE_THAT(a.forces[0], WithinAbs(-a.forces[2], 1e-15));

  const CycleSchedule sched =
      schedule_cycle(a.forces, ctl.config(), 2.0 * pi / kDefaultPeriod, 0);
  CHECK(sched.commands[0].centerline == kReverse);
  CHECK(sched.commands[2].centerline == kForward);
  CHECK_THAT(sched.commands[0].amplitude, WithinAbs(sched.commands[2].amplitude, 1e-12));
}

TEST_CASE("every emitted schedule satisfies the guard's static premises") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> speed(-0.1, 0.1);
  std::uniform_real_distribution<double> angle(-2.0 * pi, 2.0 * pi);
  std::uniform_real_distribution<double> rate(-1.0, 1.0);
  const double omega = 2.0 * pi / kDefaultPeriod;

  for (int n = 2; n <= 5; ++n) {
    LatticeController ctl(reference_params(n));
    for (int trial = 0; trial < 2500; ++trial) {
      const ControlTarget target{speed(rng), angle(rng)};
      const ControlObservation obs{speed(rng), angle(rng), rate(rng)};
      const Allocation a = ctl.step(target, obs);
      const CycleSchedule sched = schedule_cycle(a.forces, ctl.config(), omega, trial);
      REQUIRE(check_assumptions(sched).ok);
    }
  }
}
