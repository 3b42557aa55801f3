#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rrrsim/control.hpp"
#include "rrrsim/detection.hpp"
#include "rrrsim/dynamics.hpp"
#include "rrrsim/errors.hpp"
#include "rrrsim/kinematics.hpp"
#include "rrrsim/observers.hpp"
#include "rrrsim/types.hpp"

namespace rrrsim {

enum class ContactType { None, PrescribedWrench, SpringWall, ClampSpring };

/// Contact injected into a run. PrescribedWrench applies a time profile at
/// the location; SpringWall is a unilateral penalty wall acting on the
/// location point; ClampSpring ties the location point to a fixed anchor
/// (its own position at engagement) through a spring-damper.
struct ContactSpec {
  ContactType type = ContactType::None;
  ContactLocation location;
  double onset = 0.0;
  // prescribed wrench
  Vec3 amplitude = Vec3::Zero();
  std::string profile = "step";  // step | ramp | sine | pulse
  double ramp_duration = 1.0;
  double frequency = 1.0;  // sine frequency; a pulse is one positive lobe
  // spring wall / clamp spring
  Vec2 wall_point = Vec2::Zero();
  Vec2 wall_normal = Vec2(1.0, 0.0);
  double stiffness = 5000.0;  // traffic-cone scale
  double damping = 50.0;
};

/// Stateful evaluation of the contact wrench at the location point,
/// expressed in world axes. Point contacts carry no moment.
class ContactForce {
 public:
  explicit ContactForce(const ContactSpec& spec) : spec_(spec) {}

  /// Clamp contacts anchor to the point's position the first time this is
  /// called with t >= onset.
  void maybe_engage(double t, const Vec2& point) {
    if (spec_.type == ContactType::ClampSpring && !engaged_ &&
        t >= spec_.onset) {
      engaged_ = true;
      anchor_ = point;
    }
  }

  Vec3 link_wrench(double t, const Vec2& point, const Vec2& velocity) const {
    switch (spec_.type) {
      case ContactType::None:
        return Vec3::Zero();
      case ContactType::PrescribedWrench: {
        if (t < spec_.onset) return Vec3::Zero();
        const double u = t - spec_.onset;
        if (spec_.profile == "ramp")
          return spec_.amplitude *
                 std::min(1.0, u / std::max(spec_.ramp_duration, 1e-9));
        if (spec_.profile == "sine")
          return spec_.amplitude *
                 std::sin(2.0 * std::numbers::pi * spec_.frequency * u);
        if (spec_.profile == "pulse") {
          if (u >= 0.5 / spec_.frequency) return Vec3::Zero();
          return spec_.amplitude *
                 std::sin(2.0 * std::numbers::pi * spec_.frequency * u);
        }
        return spec_.amplitude;  // step
      }
      case ContactType::SpringWall: {
        if (t < spec_.onset) return Vec3::Zero();
        const Vec2 n = spec_.wall_normal.normalized();
        const double s = n.dot(point - spec_.wall_point);
        if (s >= 0.0) return Vec3::Zero();
        const double fn =
            -spec_.stiffness * s - spec_.damping * n.dot(velocity);
        if (fn <= 0.0) return Vec3::Zero();  // unilateral, pull-off at zero
        return Vec3(fn * n.x(), fn * n.y(), 0.0);
      }
      case ContactType::ClampSpring: {
        if (!engaged_) return Vec3::Zero();
        const Vec2 f =
            spec_.stiffness * (anchor_ - point) - spec_.damping * velocity;
        return Vec3(f.x(), f.y(), 0.0);
      }
    }
    return Vec3::Zero();
  }

  bool engaged() const { return engaged_; }
  const Vec2& anchor() const { return anchor_; }

 private:
  ContactSpec spec_;
  bool engaged_ = false;
  Vec2 anchor_ = Vec2::Zero();
};

/// Encoder quantisation and velocity filtering of the test bench.
struct SensorPipeline {
  bool enabled = false;
  double quantum_active = 0.0056 * std::numbers::pi / 180.0;   // rad
  double quantum_passive = 0.1 * std::numbers::pi / 180.0;     // rad
  double velocity_cutoff_hz = 30.0;

  void validate() const {
    if (!(quantum_active > 0.0) || !(quantum_passive > 0.0))
      throw ConfigError("encoder quanta must be positive");
    if (!(velocity_cutoff_hz > 0.0))
      throw ConfigError("velocity cutoff must be positive");
  }
};

struct Measurement {
  Vec3 q_a = Vec3::Zero();
  Vec3 q_p = Vec3::Zero();
  Vec3 qd_a = Vec3::Zero();
};

/// Angle quantisation, backward-difference velocity and first-order low-pass,
/// stepped at the control rate. Disabled, it passes the exact state through.
class MeasurementPipeline {
 public:
  explicit MeasurementPipeline(const SensorPipeline& cfg) : cfg_(cfg) {}

  Measurement sample(const JointConfig& q_true, const Vec3& qd_a_true,
                     double dt) {
    if (!cfg_.enabled) return {q_true.q_a, q_true.q_p, qd_a_true};
    Measurement m;
    for (int i = 0; i < 3; ++i) {
      m.q_a[i] = quantize(q_true.q_a[i], cfg_.quantum_active);
      m.q_p[i] = quantize(q_true.q_p[i], cfg_.quantum_passive);
    }
    Vec3 raw = Vec3::Zero();
    if (primed_) raw = (m.q_a - prev_q_a_) / dt;
    prev_q_a_ = m.q_a;
    primed_ = true;
    const double alpha =
        1.0 - std::exp(-2.0 * std::numbers::pi * cfg_.velocity_cutoff_hz * dt);
    filtered_ += alpha * (raw - filtered_);
    m.qd_a = filtered_;
    return m;
  }

  static double quantize(double v, double quantum) {
    return quantum * std::round(v / quantum);
  }

 private:
  SensorPipeline cfg_;
  Vec3 prev_q_a_ = Vec3::Zero();
  Vec3 filtered_ = Vec3::Zero();
  bool primed_ = false;
};

/// Complete description of one closed-loop run.
struct Scenario {
  std::string name = "scenario";
  Geometry geometry = Geometry::symmetric_default();
  DynamicsParams dynamics = DynamicsParams::defaults();
  ModelMismatch mismatch;
  ImpedanceGains gains;
  Vec3 mo_gain = Vec3::Constant(20.0);  // 1/(50 ms)
  KalmanConfig kf;
  SosmlGains sosml;
  double sosml_disturbance_bound = 0.0;
  ObserverSelection observers;
  DetectionConfig detection;
  bool detection_enabled = true;
  /// Which observer's detector stops the motion: first | mo | kf | sosml | none.
  std::string reaction_source = "first";
  PlatformPose start_pose;
  std::array<int, 3> working_mode = {1, 1, 1};
  struct Waypoint {
    Vec3 target = Vec3::Zero();
    double duration = 1.0;
  };
  std::vector<Waypoint> waypoints;
  ContactSpec contact;
  SensorPipeline pipeline;
  double duration = 1.0;
  std::uint64_t seed = 0;
  int plant_substeps = 4;
  double control_rate_hz = 1000.0;
  /// Std of the additive torque-measurement noise seen by the observers (N m).
  double torque_noise_std = 0.0;
  /// Fit a force/displacement slope over the run and report it in the summary.
  bool fit_stiffness = false;

  void validate() const {
    geometry.validate();
    dynamics.validate();
    gains.validate();
    detection.validate();
    pipeline.validate();
    kf.validate();
    sosml.validate(sosml_disturbance_bound);
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    if (plant_substeps < 1) throw ConfigError("plant_substeps must be >= 1");
    if (!(control_rate_hz > 0.0))
      throw ConfigError("control rate must be positive");
    for (int s : working_mode)
      if (s != 1 && s != -1) throw ConfigError("working mode entries are +-1");
    if (contact.type != ContactType::None) {
      validate_location(contact.location, geometry);
      if (contact.onset < 0.0 || contact.onset > duration)
        throw ConfigError("contact onset outside run duration");
    }
    if (reaction_source != "first" && reaction_source != "mo" &&
        reaction_source != "kf" && reaction_source != "sosml" &&
        reaction_source != "none")
      throw ConfigError("unknown reaction source '" + reaction_source + "'");
    for (const auto& w : waypoints)
      if (!(w.duration > 0.0)) throw ConfigError("waypoint duration must be > 0");
  }
};

struct LogRow {
  double t = 0.0;
  Vec3 x = Vec3::Zero();      // pose estimate driving control and observers
  Vec3 xd = Vec3::Zero();     // twist estimate
  Vec3 x_d = Vec3::Zero();    // desired pose
  Vec3 f_m = Vec3::Zero();    // platform force commanded at t (observer view)
  Vec3 tau = Vec3::Zero();    // actuator torques commanded at t
  Vec3 f_ext = Vec3::Zero();  // true external platform force at t
  Vec3 f_mo = Vec3::Zero();
  Vec3 f_kf = Vec3::Zero();
  Vec3 f_sosml = Vec3::Zero();
  int trig_mo = 0;
  int trig_kf = 0;
  int trig_sosml = 0;
};

struct RunLog {
  std::vector<LogRow> rows;
  std::vector<ContactEvent> events;
  std::vector<std::pair<std::string, std::string>> summary;
  bool aborted = false;
  std::string abort_reason;
  double t_onset = std::numeric_limits<double>::quiet_NaN();
  double max_constraint_residual = 0.0;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Least-squares line slope of y over x (free intercept).
inline double fit_slope(const std::vector<double>& xs,
                        const std::vector<double>& ys) {
  const auto n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t k = 0; k < xs.size(); ++k) {
    sx += xs[k];
    sy += ys[k];
    sxx += xs[k] * xs[k];
    sxy += xs[k] * ys[k];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) return 0.0;
  return (n * sxy - sx * sy) / denom;
}

}  // namespace detail

/// Runs one scenario: sense -> forward kinematics -> observers -> detection
/// -> control (or reaction) -> plant integration with RK4 substeps, logging
/// every control tick. Deterministic for a given scenario and seed.
/// Singularity or convergence failures abort with a partial log.
inline RunLog run(const Scenario& sc) {
  sc.validate();
  RunLog log;
  const double dt = 1.0 / sc.control_rate_hz;
  const double dt_sub = dt / sc.plant_substeps;
  const int ticks = static_cast<int>(std::llround(sc.duration / dt));

  const RobotModel plant_model(sc.geometry, sc.dynamics);  // exact plant
  const RobotModel hat_model(sc.geometry, sc.dynamics, sc.mismatch);

  QuinticTrajectory traj(sc.start_pose.vec());
  for (const auto& w : sc.waypoints) traj.add_segment(w.target, w.duration);

  ImpedanceController controller(hat_model, sc.gains);
  ObserverBank bank(hat_model, sc.observers, sc.mo_gain, sc.kf, sc.sosml);
  MeasurementPipeline pipeline(sc.pipeline);
  ContactForce contact(sc.contact);

  struct NamedDetector {
    std::string name;
    ContactDetector det;
    bool enabled;
  };
  std::array<NamedDetector, 3> detectors = {
      NamedDetector{"mo", ContactDetector(sc.detection), sc.observers.mo},
      NamedDetector{"kf", ContactDetector(sc.detection), sc.observers.kf},
      NamedDetector{"sosml", ContactDetector(sc.detection),
                    sc.observers.sosml}};

  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Plant state in operational coordinates; phi left unwrapped so that the
  // integrator sees a continuous state.
  Vec3 x_true = sc.start_pose.vec();
  Vec3 xd_true = Vec3::Zero();
  double peak_f_ext = 0.0;
  Vec3 peak_f_ext_axes = Vec3::Zero();
  double reaction_time = std::numeric_limits<double>::quiet_NaN();

  // The contact wrench at the location point plus its projection, as the
  // plant RHS sees it.
  auto external_force = [&](double t, const JointConfig& q,
                            const PlatformPose& pose,
                            const Vec3& xd) -> std::pair<Vec3, Vec3> {
    if (sc.contact.type == ContactType::None)
      return {Vec3::Zero(), Vec3::Zero()};
    const ContactJacobians cj =
        contact_jacobians(sc.contact.location, q, pose, sc.geometry);
    const PlatformPose cp =
        contact_point_pose(sc.contact.location, q, sc.geometry);
    const Vec2 v_c = (cj.xc_x * xd).head<2>();
    const Vec3 f_link = contact.link_wrench(t, cp.position(), v_c);
    return {f_link, cj.xc_x.transpose() * f_link};
  };

  auto plant_rhs = [&](double t, const Vec3& xv, const Vec3& xdv,
                       const Vec3& tau) -> Vec3 {
    const PlatformPose pose = PlatformPose::from_vec(xv);
    const JointConfig q = inverse_kinematics(pose, sc.working_mode, sc.geometry);
    const auto [f_link, f_ext] = external_force(t, q, pose, xdv);
    const Mat3 jxqa = jacobian_x_qa(q, pose, sc.geometry);
    const Vec3 f_m = jxqa.transpose().partialPivLu().solve(tau);
    return forward_dynamics(q, pose, xdv, f_m, f_ext, sc.geometry,
                            sc.dynamics);
  };

  try {
    for (int k = 0; k < ticks; ++k) {
      const double t = k * dt;
      const PlatformPose pose_true = PlatformPose::from_vec(x_true);
      const JointConfig q_true =
          inverse_kinematics(pose_true, sc.working_mode, sc.geometry);
      log.max_constraint_residual = std::max(
          log.max_constraint_residual,
          full_constraints(q_true, pose_true, sc.geometry)
              .lpNorm<Eigen::Infinity>());

      // Sense. The active-joint rates follow from the constraint Jacobian.
      const Vec3 qd_a_true = [&] {
        const Mat9x3 jqx = jacobian_q_x(q_true, pose_true, sc.geometry);
        return Vec3((jqx * xd_true)(0), (jqx * xd_true)(3),
                    (jqx * xd_true)(6));
      }();
      const Measurement meas = pipeline.sample(q_true, qd_a_true, dt);

      // Working-mode guard: the configured branch must match the measured
      // elbow signs (quantisation aside).
      for (int i = 0; i < 3; ++i) {
        if (std::abs(meas.q_p[i]) > 4.0 * sc.pipeline.quantum_passive &&
            (meas.q_p[i] >= 0.0 ? 1 : -1) != sc.working_mode[i])
          throw Error("working mode violated on chain " + std::to_string(i));
      }

      // State estimate: forward kinematics when the pipeline distorts the
      // measurements, exact state otherwise.
      PlatformPose x_hat;
      JointConfig q_hat;
      Vec3 xd_hat;
      if (sc.pipeline.enabled) {
        x_hat = forward_kinematics(meas.q_a, meas.q_p, sc.geometry);
        q_hat = inverse_kinematics(x_hat, sc.working_mode, sc.geometry);
        xd_hat = jacobian_x_qa(q_hat, x_hat, sc.geometry) * meas.qd_a;
      } else {
        x_hat = pose_true.normalized();
        q_hat = q_true;
        xd_hat = xd_true;
      }

      bank.step(q_hat, x_hat, xd_hat, dt);

      LogRow row;
      row.t = t;
      row.x = x_hat.vec();
      row.xd = xd_hat;
      row.f_mo = bank.mo_estimate();
      row.f_kf = bank.kf_estimate();
      row.f_sosml = bank.sosml_estimate();

      // Detection and reaction.
      if (sc.detection_enabled) {
        const std::array<Vec3, 3> estimates = {row.f_mo, row.f_kf,
                                               row.f_sosml};
        for (int d = 0; d < 3; ++d) {
          auto& nd = detectors[d];
          if (!nd.enabled || nd.det.triggered()) continue;
          if (nd.det.update(estimates[d])) {
            ContactEvent ev;
            ev.observer = nd.name;
            ev.t_onset = log.t_onset;
            ev.t_detect = t;
            ev.dt_cd = t - log.t_onset;
            ev.axis = nd.det.axis();
            log.events.push_back(ev);
            const bool reacts =
                sc.reaction_source == "first" || sc.reaction_source == nd.name;
            if (reacts && !controller.zero_torque_active()) {
              controller.trigger_zero_torque();
              reaction_time = t;
            }
          }
        }
      }
      row.trig_mo = detectors[0].det.triggered() ? 1 : 0;
      row.trig_kf = detectors[1].det.triggered() ? 1 : 0;
      row.trig_sosml = detectors[2].det.triggered() ? 1 : 0;

      // Control.
      const TrajectorySample ref = traj.sample(t);
      const ControlOutput out = controller.compute(q_hat, x_hat, xd_hat, ref);
      row.x_d = ref.pos;
      row.tau = out.tau;
      Vec3 f_m_observed = out.f_platform;
      if (sc.torque_noise_std > 0.0) {
        Vec3 tau_noisy = out.tau;
        for (int i = 0; i < 3; ++i)
          tau_noisy[i] += sc.torque_noise_std * gauss(rng);
        f_m_observed = jacobian_x_qa(q_hat, x_hat, sc.geometry)
                           .transpose()
                           .partialPivLu()
                           .solve(tau_noisy);
      }
      row.f_m = f_m_observed;
      bank.set_applied_force(f_m_observed);

      // True external force at the tick, as the integrator's first stage
      // sees it.
      if (sc.contact.type != ContactType::None) {
        contact.maybe_engage(t, contact_point_pose(sc.contact.location,
                                                   q_true, sc.geometry)
                                    .position());
        const auto [f_link_t, f_ext_t] =
            external_force(t, q_true, pose_true, xd_true);
        row.f_ext = f_ext_t;
        if (std::isnan(log.t_onset) && f_link_t.norm() > 0.0) log.t_onset = t;
        peak_f_ext = std::max(peak_f_ext, f_ext_t.norm());
        for (int i = 0; i < 3; ++i)
          peak_f_ext_axes[i] = std::max(peak_f_ext_axes[i],
                                        std::abs(f_ext_t[i]));
      }
      log.rows.push_back(row);

      // Plant integration over the tick, torque zero-order hold.
      for (int s = 0; s < sc.plant_substeps; ++s) {
        const double ts = t + s * dt_sub;
        if (sc.contact.type != ContactType::None) {
          const PlatformPose p_sub = PlatformPose::from_vec(x_true);
          const JointConfig q_sub =
              inverse_kinematics(p_sub, sc.working_mode, sc.geometry);
          contact.maybe_engage(
              ts, contact_point_pose(sc.contact.location, q_sub, sc.geometry)
                      .position());
          if (std::isnan(log.t_onset)) {
            const auto [f_link_s, unused] =
                external_force(ts, q_sub, p_sub, xd_true);
            (void)unused;
            if (f_link_s.norm() > 0.0) log.t_onset = ts;
          }
        }
        const Vec3 k1 = plant_rhs(ts, x_true, xd_true, out.tau);
        const Vec3 k1v = xd_true;
        const Vec3 k2 =
            plant_rhs(ts + 0.5 * dt_sub, x_true + 0.5 * dt_sub * k1v,
                      xd_true + 0.5 * dt_sub * k1, out.tau);
        const Vec3 k2v = xd_true + 0.5 * dt_sub * k1;
        const Vec3 k3 =
            plant_rhs(ts + 0.5 * dt_sub, x_true + 0.5 * dt_sub * k2v,
                      xd_true + 0.5 * dt_sub * k2, out.tau);
        const Vec3 k3v = xd_true + 0.5 * dt_sub * k2;
        const Vec3 k4 = plant_rhs(ts + dt_sub, x_true + dt_sub * k3v,
                                  xd_true + dt_sub * k3, out.tau);
        const Vec3 k4v = xd_true + dt_sub * k3;
        x_true += dt_sub / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        xd_true += dt_sub / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    }
  } catch (const Error& e) {
    log.aborted = true;
    log.abort_reason = e.what();
  }

  // Summary.
  auto put = [&](const std::string& key, const std::string& value) {
    log.summary.emplace_back(key, value);
  };
  auto put_d = [&](const std::string& key, double v) {
    put(key, detail::format_double(v));
  };
  put("name", sc.name);
  put("aborted", log.aborted ? "1" : "0");
  if (log.aborted) put("abort_reason", log.abort_reason);
  put_d("duration", sc.duration);
  put("ticks", std::to_string(log.rows.size()));
  put_d("peak_f_ext_norm", peak_f_ext);
  put_d("peak_f_ext_x", peak_f_ext_axes[0]);
  put_d("peak_f_ext_y", peak_f_ext_axes[1]);
  put_d("peak_f_ext_phi", peak_f_ext_axes[2]);
  put_d("max_constraint_residual", log.max_constraint_residual);
  put_d("t_onset", log.t_onset);
  for (const auto& nd : detectors) {
    if (!nd.enabled) continue;
    const ContactEvent* ev = nullptr;
    for (const auto& e : log.events)
      if (e.observer == nd.name) ev = &e;
    put("detected_" + nd.name, ev ? "1" : "0");
    if (ev) {
      put_d("t_detect_" + nd.name, ev->t_detect);
      put_d("dt_cd_" + nd.name, ev->dt_cd);
      put("axis_" + nd.name, std::to_string(ev->axis));
    }
  }
  put("reaction_triggered", std::isnan(reaction_time) ? "0" : "1");
  if (!std::isnan(reaction_time)) put_d("t_reaction", reaction_time);
  if (!log.rows.empty()) {
    const LogRow& last = log.rows.back();
    Vec3 err = last.x_d - last.x;
    err[2] = wrap_angle(err[2]);
    put_d("final_pose_error", err.norm());
  }
  if (sc.fit_stiffness && !log.rows.empty()) {
    int axis = 0;
    sc.contact.amplitude.cwiseAbs().maxCoeff(&axis);
    double fmax = 0.0;
    for (const auto& r : log.rows)
      fmax = std::max(fmax, std::abs(r.f_ext[axis]));
    std::vector<double> xs, fs;
    for (const auto& r : log.rows) {
      if (std::abs(r.f_ext[axis]) >= 0.05 * fmax && fmax > 0.0) {
        xs.push_back(r.x[axis]);
        fs.push_back(r.f_ext[axis]);
      }
    }
    if (xs.size() >= 2) {
      put("k_fit_axis", std::to_string(axis));
      put_d("k_fit", detail::fit_slope(xs, fs));
    }
  }
  return log;
}

}  // namespace rrrsim
