#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rrrsim/control.hpp"
#include "rrrsim/simulation.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace rrrsim;
using testsupport::kElbowUp;
using testsupport::WorkspaceSampler;

namespace {
const Geometry kGeom = Geometry::symmetric_default();
const DynamicsParams kParams = DynamicsParams::defaults();

Scenario regulation_scenario() {
  Scenario sc;
  sc.detection_enabled = false;
  sc.duration = 1.0;
  return sc;
}
}  // namespace

TEST_CASE("damping design reduces to 2 sqrt(mk) in the diagonal case") {
  CHECK((damping_design(Mat3::Identity(), Vec3::Ones(), Vec3::Ones()) -
         2.0 * Mat3::Identity())
            .lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK(damping_design(Mat3::Identity(), Vec3::Ones(), Vec3::Zero()).norm() ==
        0.0);
  const Vec3 masses(2.0, 2.0, 0.5);
  const Vec3 springs(2000.0, 2000.0, 85.0);
  const Mat3 d = damping_design(Mat3(masses.asDiagonal()), springs,
                                Vec3::Ones());
  for (int i = 0; i < 3; ++i) {
    CHECK(d(i, i) ==
          Catch::Approx(2.0 * std::sqrt(masses[i] * springs[i])).margin(1e-9));
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(d(i, j)) < 1e-12);
  }
}

TEST_CASE("damping design rejects indefinite inertia") {
  Mat3 bad = Mat3::Identity();
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(damping_design(bad, Vec3::Ones(), Vec3::Ones()),
                  NotSpdError);
}

TEST_CASE("designed damping is symmetric positive definite") {
  WorkspaceSampler sampler(kGeom, 113);
  for (int n = 0; n < 20; ++n) {
    const PlatformPose x = sampler.sample();
    const JointConfig q = inverse_kinematics(x, kElbowUp, kGeom);
    const Mat3 m = mass_matrix_x(q, x, kGeom, kParams);
    const Mat3 d = damping_design(m, Vec3(2000, 2000, 85), Vec3::Ones());
    CHECK((d - d.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Mat3> es(d);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("quintic segments are rest-to-rest and C2 consistent") {
  QuinticTrajectory traj(Vec3(0.0, 0.0, 0.0));
  traj.add_segment(Vec3(0.05, -0.02, 0.2), 0.7);
  traj.add_segment(Vec3(-0.01, 0.03, -0.1), 0.5);
  CHECK(traj.duration() == Catch::Approx(1.2));
  // Boundary conditions.
  for (double t : {0.0, 0.7, 1.2, 5.0}) {
    const TrajectorySample s = traj.sample(t);
    CHECK(s.vel.norm() < 1e-12);
    CHECK(s.acc.norm() < 1e-12);
  }
  CHECK((traj.sample(0.7).pos - Vec3(0.05, -0.02, 0.2)).norm() < 1e-12);
  CHECK((traj.sample(9.0).pos - Vec3(-0.01, 0.03, -0.1)).norm() < 1e-12);
  // Derivative consistency inside a segment.
  const double h = 1e-6;
  for (double t : {0.2, 0.55, 0.9, 1.1}) {
    const TrajectorySample s = traj.sample(t);
    const Vec3 vel_fd =
        (traj.sample(t + h).pos - traj.sample(t - h).pos) / (2.0 * h);
    const Vec3 acc_fd =
        (traj.sample(t + h).vel - traj.sample(t - h).vel) / (2.0 * h);
    CHECK((s.vel - vel_fd).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK((s.acc - acc_fd).lpNorm<Eigen::Infinity>() < 1e-5);
  }
}

TEST_CASE("controller output is zero at rest on the target") {
  const RobotModel model(kGeom, kParams);
  ImpedanceController ctrl(model, ImpedanceGains{});
  const PlatformPose x{0.01, 0.02, 0.05};
  const JointConfig q = inverse_kinematics(x, kElbowUp, kGeom);
  TrajectorySample ref;
  ref.pos = x.vec();
  const ControlOutput out = ctrl.compute(q, x, Vec3::Zero(), ref);
  CHECK(out.f_platform.norm() == 0.0);
  CHECK(out.tau.norm() == 0.0);
}

TEST_CASE("controller error is continuous across the orientation branch") {
  const RobotModel model(kGeom, kParams);
  ImpedanceController ctrl(model, ImpedanceGains{});
  TrajectorySample ref;
  ref.pos = Vec3(0.0, 0.0, std::numbers::pi);
  const double eps = 1e-6;
  const PlatformPose xa{0.0, 0.0, std::numbers::pi - eps};
  const PlatformPose xb{0.0, 0.0, -std::numbers::pi + eps};
  const ControlOutput fa = ctrl.compute(
      inverse_kinematics(xa, kElbowUp, kGeom), xa, Vec3::Zero(), ref);
  const ControlOutput fb = ctrl.compute(
      inverse_kinematics(xb, kElbowUp, kGeom), xb, Vec3::Zero(), ref);
  CHECK((fa.f_platform - fb.f_platform).lpNorm<Eigen::Infinity>() < 1e-2);
}

TEST_CASE("linearized error dynamics are Hurwitz for positive damping") {
  WorkspaceSampler sampler(kGeom, 127);
  const PlatformPose x = sampler.sample();
  const JointConfig q = inverse_kinematics(x, kElbowUp, kGeom);
  const Mat3 m = mass_matrix_x(q, x, kGeom, kParams);
  const Vec3 k(2000, 2000, 85);
  const Mat3 d = damping_design(m, k, Vec3::Ones());
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
  a.topRightCorner<3, 3>().setIdentity();
  const Mat3 minv = m.inverse();
  a.bottomLeftCorner<3, 3>() = -minv * Mat3(k.asDiagonal());
  a.bottomRightCorner<3, 3>() = -minv * d;
  const auto ev = a.eigenvalues();
  for (int i = 0; i < 6; ++i) CHECK(ev[i].real() < -1e-3);
}

TEST_CASE("constant force sets the static deflection by the stiffness") {
  Scenario sc = regulation_scenario();
  sc.gains.stiffness = Vec3(1000.0, 1000.0, 85.0);
  sc.contact.type = ContactType::PrescribedWrench;
  sc.contact.location = {0, 0, Vec2::Zero()};
  sc.contact.amplitude = Vec3(0.0, 1.0, 0.0);
  sc.contact.onset = 0.0;
  sc.duration = 1.5;
  const RunLog log = run(sc);
  REQUIRE(!log.aborted);
  const LogRow& last = log.rows.back();
  // K_d (x - x_d) = F_ext in steady state.
  const Vec3 residual = sc.gains.stiffness.asDiagonal() * (last.x - last.x_d) -
                        last.f_ext;
  CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(last.x[1] - last.x_d[1] == Catch::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("step response follows the linear error-dynamics oracle") {
  Scenario sc = regulation_scenario();
  sc.gains.stiffness = Vec3(2000.0, 2000.0, 85.0);
  sc.contact.type = ContactType::PrescribedWrench;
  sc.contact.location = {0, 0, Vec2::Zero()};
  sc.contact.amplitude = Vec3(0.0, 10.0, 0.0);
  sc.contact.onset = 0.2;
  sc.duration = 1.2;
  const RunLog log = run(sc);
  REQUIRE(!log.aborted);

  const JointConfig q0 =
      inverse_kinematics(sc.start_pose, kElbowUp, kGeom);
  const Mat3 m0 = mass_matrix_x(q0, sc.start_pose, kGeom, kParams);
  const Mat3 d0 = damping_design(m0, sc.gains.stiffness, Vec3::Ones());
  const auto oracle = oracles::linear_error_dynamics(
      m0, d0, Mat3(sc.gains.stiffness.asDiagonal()),
      [&](double t) { return t >= 0.0 ? Vec3(0.0, 10.0, 0.0) : Vec3::Zero(); },
      1.0, 1e-3);

  const double steady = 10.0 / 2000.0;
  double max_dev = 0.0, max_disp = 0.0;
  for (const auto& row : log.rows) {
    const double disp = row.x[1] - sc.start_pose.ry;
    max_disp = std::max(max_disp, disp);
    if (row.t >= 0.2) {
      const size_t k = static_cast<size_t>(std::round((row.t - 0.2) / 1e-3));
      if (k < oracle.size())
        max_dev = std::max(max_dev, std::abs(disp - oracle[k][1]));
    }
  }
  CHECK(max_dev < 2e-4);
  CHECK(max_disp < steady * 1.01);  // critically damped, no overshoot
  CHECK(log.rows.back().x[1] - sc.start_pose.ry ==
        Catch::Approx(steady).epsilon(0.01));
}

TEST_CASE("zero-torque reaction reduces to gravity compensation") {
  const RobotModel model(kGeom, kParams);
  ImpedanceController ctrl(model, ImpedanceGains{});
  ctrl.trigger_zero_torque();
  CHECK(ctrl.zero_torque_active());
  WorkspaceSampler sampler(kGeom, 131);
  const PlatformPose x = sampler.sample();
  const JointConfig q = inverse_kinematics(x, kElbowUp, kGeom);
  TrajectorySample ref;
  ref.pos = Vec3(0.05, 0.05, 0.3);  // ignored once zero torque is active
  const ControlOutput out = ctrl.compute(q, x, sampler.sample_twist(), ref);
  CHECK(out.tau.norm() == 0.0);

  DynamicsParams heavy = kParams;
  heavy.gravity = Vec2(0.0, -9.81);
  const RobotModel model_g(kGeom, heavy);
  ImpedanceController ctrl_g(model_g, ImpedanceGains{});
  ctrl_g.trigger_zero_torque();
  const ControlOutput out_g = ctrl_g.compute(q, x, Vec3::Zero(), ref);
  CHECK((out_g.f_platform - gravity_x(q, x, kGeom, heavy))
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("gravity compensation holds the platform against gravity") {
  Scenario sc = regulation_scenario();
  sc.dynamics.gravity = Vec2(0.0, -9.81);
  sc.dynamics.coulomb = Vec3::Constant(0.5);
  // A brief push above a lowered threshold switches into the reaction; the
  // hold is then gravity compensation only.
  sc.detection_enabled = true;
  sc.detection.epsilon = Vec3(2.0, 2.0, 0.5);
  sc.contact.type = ContactType::PrescribedWrench;
  sc.contact.location = {0, 0, Vec2::Zero()};
  sc.contact.amplitude = Vec3(6.0, 0.0, 0.0);
  sc.contact.profile = "pulse";
  sc.contact.frequency = 6.0;
  sc.contact.onset = 0.1;
  sc.duration = 2.0;
  const RunLog log = run(sc);
  REQUIRE(!log.aborted);
  REQUIRE(!log.events.empty());
  const LogRow& last = log.rows.back();
  CHECK(last.trig_mo == 1);
  // At rest at the end: gravity is compensated, no runaway fall.
  CHECK(last.xd.norm() < 5e-3);
  CHECK(std::abs(last.x[1]) < 0.03);
}

TEST_CASE("platform decelerates under friction after zero-torque") {
  Scenario sc = regulation_scenario();
  sc.dynamics.coulomb = Vec3::Constant(0.5);
  sc.detection_enabled = true;
  sc.detection.epsilon = Vec3(3.0, 3.0, 0.5);
  sc.waypoints.push_back({Vec3(0.04, 0.0, 0.0), 0.4});
  sc.contact.type = ContactType::PrescribedWrench;
  sc.contact.location = {0, 0, Vec2::Zero()};
  sc.contact.amplitude = Vec3(0.0, 5.0, 0.0);
  sc.contact.profile = "pulse";
  sc.contact.frequency = 6.0;
  sc.contact.onset = 0.15;
  sc.duration = 2.0;
  const RunLog log = run(sc);
  REQUIRE(!log.aborted);
  REQUIRE(!log.events.empty());
  const double t_react = log.events.front().t_detect;
  double v_react = 0.0;
  const double v_end = log.rows.back().xd.norm();
  for (const auto& row : log.rows)
    if (std::abs(row.t - t_react) < 0.5e-3) v_react = row.xd.norm();
  CHECK(v_end < 5e-3);
  CHECK(v_end < v_react + 1e-9);
  // Torques are exactly zero from the reaction tick on (g = 0).
  for (const auto& row : log.rows)
    if (row.t > t_react + 1e-6) CHECK(row.tau.norm() == 0.0);
}
