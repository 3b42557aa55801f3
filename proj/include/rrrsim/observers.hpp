#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "rrrsim/dynamics.hpp"
#include "rrrsim/errors.hpp"
#include "rrrsim/types.hpp"

namespace rrrsim {

/// Model drift term of the generalized momentum,
///   beta^ = g^_x + F^_fr,x - C^_x^T xdot,
/// so that pdot_x = F_m - beta + F_ext along the true dynamics.
inline Vec3 beta_hat(const RobotModel& model, const JointConfig& q,
                     const PlatformPose& x, const Vec3& xdot) {
  return model.gravity(q, x) + model.friction(q, x, xdot) -
         model.coriolis(q, x, xdot).C.transpose() * xdot;
}

/// Generalized-momentum observer with diagonal gain K_o,
///   F^_ext = K_o (p_x - p_x(0) - int (F_m - beta^ + F^_ext) dt).
/// The inner integral is discretized trapezoidally; the implicit appearance
/// of F^_ext in its own integrand is solved per axis. Error dynamics per axis
/// are a first-order lag with time constant 1/k_o.
class MomentumObserver {
 public:
  explicit MomentumObserver(const Vec3& gain) : k_o_(gain) {
    if (k_o_.minCoeff() <= 0.0)
      throw ConfigError("momentum observer gain must be positive");
  }

  void reset() {
    primed_ = false;
    f_hat_.setZero();
    integral_.setZero();
  }

  const Vec3& estimate() const { return f_hat_; }

  Vec3 step(const Vec3& p, const Vec3& f_m, const Vec3& beta, double dt) {
    const Vec3 u = f_m - beta;
    if (!primed_) {
      primed_ = true;
      p0_ = p;
      integral_.setZero();
      f_hat_.setZero();
      prev_integrand_ = u;
      return f_hat_;
    }
    for (int i = 0; i < 3; ++i) {
      const double rhs =
          k_o_[i] * (p[i] - p0_[i] - integral_[i] -
                     0.5 * dt * (prev_integrand_[i] + u[i]));
      f_hat_[i] = rhs / (1.0 + 0.5 * dt * k_o_[i]);
    }
    const Vec3 integrand = u + f_hat_;
    integral_ += 0.5 * dt * (prev_integrand_ + integrand);
    prev_integrand_ = integrand;
    return f_hat_;
  }

 private:
  Vec3 k_o_;
  Vec3 p0_ = Vec3::Zero();
  Vec3 integral_ = Vec3::Zero();
  Vec3 prev_integrand_ = Vec3::Zero();
  Vec3 f_hat_ = Vec3::Zero();
  bool primed_ = false;
};

/// Covariance parameters of the momentum/force Kalman filter. q_* are the
/// diagonal process-noise entries of the discrete model per step, r the
/// momentum measurement noise.
struct KalmanConfig {
  double q_momentum = 1e-3;
  Vec3 q_force = Vec3::Constant(10.0);
  Vec3 r = Vec3::Constant(1e-4);
  double p0_momentum = 1e-3;
  double p0_force = 1.0;

  void validate() const {
    if (q_momentum < 0.0 || q_force.minCoeff() < 0.0 || r.minCoeff() < 0.0)
      throw ConfigError("Kalman covariances must be non-negative");
  }
};

/// Kalman filter on the constant-force state-space model
///   [pdot; Fdot^] = [[0, I], [0, 0]] [p; F^] + [F_m - beta^; 0],  y = p,
/// discretized exactly over one step. The force block is corrected only in
/// the update through the cross covariance.
class KalmanForceObserver {
 public:
  explicit KalmanForceObserver(KalmanConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
  }

  void reset() { primed_ = false; }

  const Vec3 estimate() const { return z_.tail<3>(); }

  Vec3 step(const Vec3& p_meas, const Vec3& f_m, const Vec3& beta, double dt) {
    if (!primed_) {
      primed_ = true;
      z_.head<3>() = p_meas;
      z_.tail<3>().setZero();
      cov_.setZero();
      cov_.topLeftCorner<3, 3>() = Mat3::Identity() * cfg_.p0_momentum;
      cov_.bottomRightCorner<3, 3>() = Mat3::Identity() * cfg_.p0_force;
      return z_.tail<3>();
    }
    // Predict: Phi = [[I, dt I], [0, I]], input enters the momentum block.
    Mat6 phi = Mat6::Identity();
    phi.topRightCorner<3, 3>() = Mat3::Identity() * dt;
    z_.head<3>() += dt * z_.tail<3>() + dt * (f_m - beta);
    Mat6 q_proc = Mat6::Zero();
    q_proc.topLeftCorner<3, 3>() = Mat3::Identity() * cfg_.q_momentum;
    q_proc.bottomRightCorner<3, 3>() = cfg_.q_force.asDiagonal();
    cov_ = phi * cov_ * phi.transpose() + q_proc;
    // Update with y = p.
    const Mat3 s = cov_.topLeftCorner<3, 3>() + Mat3(cfg_.r.asDiagonal());
    const Eigen::Matrix<double, 6, 3> gain =
        cov_.leftCols<3>() * s.inverse();
    z_ += gain * (p_meas - z_.head<3>());
    cov_ -= gain * cov_.topRows<3>();
    const double asym = (cov_ - cov_.transpose()).lpNorm<Eigen::Infinity>();
    if (asym > 1e-6 * (1.0 + cov_.lpNorm<Eigen::Infinity>()))
      throw NotSpdError("Kalman covariance lost symmetry");
    cov_ = 0.5 * (cov_ + cov_.transpose());
    return z_.tail<3>();
  }

  const Mat6& covariance() const { return cov_; }

 private:
  KalmanConfig cfg_;
  Vec6 z_ = Vec6::Zero();
  Mat6 cov_ = Mat6::Zero();
  bool primed_ = false;
};

/// Gains of the second-order sliding-mode observer with linear terms.
/// Defaults give a ~50 ms settling into a 2 percent band for a 10 N step at
/// a 1 kHz rate with chattering well under detection thresholds.
struct SosmlGains {
  Vec3 t1 = Vec3::Constant(40.0);
  Vec3 t2 = Vec3::Constant(250.0);
  Vec3 s1 = Vec3::Constant(80.0);
  Vec3 s2 = Vec3::Constant(22500.0);

  /// Positivity is required; as a convergence condition the sgn-term gain s1
  /// must dominate the assumed bound on the force rate. The bound is a
  /// configuration input.
  void validate(double disturbance_bound = 0.0) const {
    if (t1.minCoeff() <= 0.0 || t2.minCoeff() <= 0.0 ||
        s1.minCoeff() <= 0.0 || s2.minCoeff() <= 0.0)
      throw ConfigError("SOSML gains must be positive");
    if (disturbance_bound > 0.0 && s1.minCoeff() <= disturbance_bound)
      throw ConfigError("SOSML s1 must exceed the disturbance-rate bound");
  }
};

/// Second-order sliding mode with linear terms:
///   p^dot = (F_m - beta^) - T1 |p~|^(1/2) sgn(p~) - T2 p~ + F^_ext
///   F^dot = -S1 sgn(p~) - S2 p~,     p~ = p^ - p,
/// integrated by explicit Euler. Converges in finite time for admissible
/// gains instead of the momentum observer's exponential decay.
class SosmlObserver {
 public:
  explicit SosmlObserver(SosmlGains gains) : gains_(std::move(gains)) {
    gains_.validate();
  }

  void reset() { primed_ = false; }

  const Vec3& estimate() const { return f_hat_; }

  Vec3 step(const Vec3& p, const Vec3& f_m, const Vec3& beta, double dt) {
    if (!primed_) {
      primed_ = true;
      p_hat_ = p;
      f_hat_.setZero();
      return f_hat_;
    }
    const Vec3 ptilde = p_hat_ - p;
    Vec3 dp, df;
    for (int i = 0; i < 3; ++i) {
      const double sgn = ptilde[i] > 0.0 ? 1.0 : (ptilde[i] < 0.0 ? -1.0 : 0.0);
      const double root = std::sqrt(std::abs(ptilde[i]));
      dp[i] = f_m[i] - beta[i] - gains_.t1[i] * root * sgn -
              gains_.t2[i] * ptilde[i] + f_hat_[i];
      df[i] = -gains_.s1[i] * sgn - gains_.s2[i] * ptilde[i];
    }
    p_hat_ += dt * dp;
    f_hat_ += dt * df;
    return f_hat_;
  }

  const Vec3& momentum_estimate() const { return p_hat_; }

 private:
  SosmlGains gains_;
  Vec3 p_hat_ = Vec3::Zero();
  Vec3 f_hat_ = Vec3::Zero();
  bool primed_ = false;
};

/// Which observers a run instantiates.
struct ObserverSelection {
  bool mo = true;
  bool kf = true;
  bool sosml = true;
};

/// The three observers stepped in lockstep from the same measured state and
/// the same applied force. The bank owns the one-step delay between a
/// commanded force and the momentum it explains, so simulation and offline
/// replay share one code path and agree bitwise.
class ObserverBank {
 public:
  ObserverBank(const RobotModel& model, const ObserverSelection& sel,
               const Vec3& mo_gain, const KalmanConfig& kf_cfg,
               const SosmlGains& sosml_gains)
      : model_(&model) {
    if (sel.mo) mo_.emplace(mo_gain);
    if (sel.kf) kf_.emplace(kf_cfg);
    if (sel.sosml) sosml_.emplace(sosml_gains);
  }

  /// Steps every enabled observer using the force commanded one tick earlier.
  void step(const JointConfig& q, const PlatformPose& x, const Vec3& xdot,
            double dt) {
    const Vec3 p = model_->momentum(q, x, xdot);
    const Vec3 beta = beta_hat(*model_, q, x, xdot);
    if (mo_) mo_->step(p, applied_f_m_, beta, dt);
    if (kf_) kf_->step(p, applied_f_m_, beta, dt);
    if (sosml_) sosml_->step(p, applied_f_m_, beta, dt);
  }

  /// Records the force commanded at the current tick; it becomes the input
  /// of the next step.
  void set_applied_force(const Vec3& f_m) { applied_f_m_ = f_m; }

  Vec3 mo_estimate() const { return mo_ ? mo_->estimate() : Vec3::Zero(); }
  Vec3 kf_estimate() const { return kf_ ? kf_->estimate() : Vec3::Zero(); }
  Vec3 sosml_estimate() const {
    return sosml_ ? sosml_->estimate() : Vec3::Zero();
  }
  bool has_mo() const { return mo_.has_value(); }
  bool has_kf() const { return kf_.has_value(); }
  bool has_sosml() const { return sosml_.has_value(); }

 private:
  const RobotModel* model_;
  std::optional<MomentumObserver> mo_;
  std::optional<KalmanForceObserver> kf_;
  std::optional<SosmlObserver> sosml_;
  Vec3 applied_f_m_ = Vec3::Zero();
};

}  // namespace rrrsim
