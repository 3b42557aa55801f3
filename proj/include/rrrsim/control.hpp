#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "rrrsim/dynamics.hpp"
#include "rrrsim/errors.hpp"
#include "rrrsim/types.hpp"

namespace rrrsim {

/// Diagonal stiffness (N/m, N/m, N m/rad) and modal damping factors.
struct ImpedanceGains {
  Vec3 stiffness = Vec3(2000.0, 2000.0, 85.0);
  Vec3 modal_damping = Vec3::Ones();

  void validate() const {
    if (stiffness.minCoeff() <= 0.0)
      throw ConfigError("impedance stiffness must be positive");
    if (modal_damping.minCoeff() < 0.0)
      throw ConfigError("modal damping must be non-negative");
  }
};

namespace detail {

/// Unique SPD square root by symmetric eigendecomposition, eigenvalues
/// floored at 1e-12.
inline Mat3 spd_sqrt(const Mat3& m) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  if (es.info() != Eigen::Success)
    throw NotSpdError("eigendecomposition failed");
  Vec3 ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-9)
    throw NotSpdError("matrix is not positive semi-definite");
  for (int i = 0; i < 3; ++i) ev[i] = std::sqrt(std::max(ev[i], 1e-12));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Factorized damping D_d = M~ D_xi K~ + K~ D_xi M~ with M~, K~ the SPD
/// square roots of the inertia and stiffness matrices. Yields the requested
/// modal damping of the error dynamics for the current inertia.
inline Mat3 damping_design(const Mat3& mass, const Vec3& stiffness,
                           const Vec3& modal_damping) {
  const Mat3 m_root = detail::spd_sqrt(mass);
  const Mat3 k_root = Vec3(stiffness.cwiseSqrt()).asDiagonal();
  const Mat3 dxi = modal_damping.asDiagonal();
  return m_root * dxi * k_root + k_root * dxi * m_root;
}

struct TrajectorySample {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  Vec3 acc = Vec3::Zero();
};

/// Rest-to-rest quintic segments between via poses; C2 within segments,
/// zero velocity and acceleration at every via pose. Holds the last pose
/// after the final segment.
class QuinticTrajectory {
 public:
  explicit QuinticTrajectory(const Vec3& start) : start_(start) {}

  QuinticTrajectory& add_segment(const Vec3& target, double duration) {
    if (!(duration > 0.0)) throw ConfigError("segment duration must be > 0");
    segments_.push_back({target, duration});
    return *this;
  }

  double duration() const {
    double t = 0.0;
    for (const auto& s : segments_) t += s.duration;
    return t;
  }

  TrajectorySample sample(double t) const {
    Vec3 from = start_;
    for (const auto& s : segments_) {
      if (t <= s.duration) {
        const double u = t / s.duration;
        const double u2 = u * u, u3 = u2 * u;
        const double sp = u3 * (10.0 - 15.0 * u + 6.0 * u2);
        const double sv = 30.0 * u2 * (1.0 - 2.0 * u + u2) / s.duration;
        const double sa =
            60.0 * u * (1.0 - 3.0 * u + 2.0 * u2) / (s.duration * s.duration);
        const Vec3 d = s.target - from;
        return {from + sp * d, sv * d, sa * d};
      }
      t -= s.duration;
      from = s.target;
    }
    return {from, Vec3::Zero(), Vec3::Zero()};
  }

 private:
  struct Segment {
    Vec3 target;
    double duration;
  };
  Vec3 start_;
  std::vector<Segment> segments_;
};

struct ControlOutput {
  Vec3 f_platform = Vec3::Zero();  // F_m
  Vec3 tau = Vec3::Zero();         // J_{x,qa}^T F_m
};

/// Cartesian impedance controller with dynamics feedforward,
///   F_m = c^ + g^ + M^ xdd_d + F^_fr + K_d e + D_d edot,
/// e = x_d - x with the orientation error wrapped. D_d is recomputed from the
/// current inertia every step. After trigger_zero_torque() the output reduces
/// to gravity compensation.
class ImpedanceController {
 public:
  ImpedanceController(const RobotModel& model, ImpedanceGains gains)
      : model_(&model), gains_(std::move(gains)) {
    gains_.validate();
  }

  ControlOutput compute(const JointConfig& q, const PlatformPose& x,
                        const Vec3& xdot, const TrajectorySample& ref) const {
    const Mat3 jxqa = jacobian_x_qa(q, x, model_->geometry());
    ControlOutput out;
    if (zero_torque_) {
      out.f_platform = model_->gravity(q, x);
      out.tau = jxqa.transpose() * out.f_platform;
      return out;
    }
    Vec3 e = ref.pos - x.vec();
    e[2] = wrap_angle(e[2]);
    const Vec3 edot = ref.vel - xdot;
    const Mat3 mass = model_->mass(q, x);
    const Mat3 damping =
        damping_design(mass, gains_.stiffness, gains_.modal_damping);
    out.f_platform = model_->coriolis(q, x, xdot).c + model_->gravity(q, x) +
                     mass * ref.acc + model_->friction(q, x, xdot) +
                     gains_.stiffness.asDiagonal() * e + damping * edot;
    out.tau = jxqa.transpose() * out.f_platform;
    return out;
  }

  void trigger_zero_torque() { zero_torque_ = true; }
  bool zero_torque_active() const { return zero_torque_; }
  const ImpedanceGains& gains() const { return gains_; }

 private:
  const RobotModel* model_;
  ImpedanceGains gains_;
  bool zero_torque_ = false;
};

}  // namespace rrrsim
