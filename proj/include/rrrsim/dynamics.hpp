#pragma once

#include <array>
#include <cmath>

#include "rrrsim/errors.hpp"
#include "rrrsim/geometry.hpp"
#include "rrrsim/kinematics.hpp"
#include "rrrsim/types.hpp"

namespace rrrsim {

/// Rigid-body parameters of one link: mass, centre of mass in the link frame
/// and rotational inertia about that centre.
struct LinkParams {
  double mass = 0.0;
  Vec2 com = Vec2::Zero();
  double inertia = 0.0;
};

struct DynamicsParams {
  std::array<LinkParams, 3> proximal{};
  std::array<LinkParams, 3> distal{};
  LinkParams platform{};
  Vec3 viscous = Vec3::Zero();          // active joints, N m s/rad
  Vec3 coulomb = Vec3::Zero();          // active joints, N m
  Vec3 viscous_passive = Vec3::Zero();  // optional, off by default
  double coulomb_vel_eps = 1e-3;        // tanh smoothing velocity, rad/s
  Vec2 gravity = Vec2::Zero();          // in-plane gravity, m/s^2
  double fd_step = 1e-6;                // pose step for inertia derivatives

  /// Desk-scale defaults: 0.5 kg slender-rod links, 1.0 kg disc platform,
  /// light viscous + Coulomb friction on the direct drives.
  static DynamicsParams defaults() {
    DynamicsParams p;
    for (int i = 0; i < 3; ++i) {
      p.proximal[i] = {0.5, Vec2(0.125, 0.0), 0.5 * 0.25 * 0.25 / 12.0};
      p.distal[i] = {0.5, Vec2(0.125, 0.0), 0.5 * 0.25 * 0.25 / 12.0};
    }
    p.platform = {1.0, Vec2::Zero(), 0.5 * 1.0 * 0.10 * 0.10};
    p.viscous = Vec3::Constant(0.05);
    p.coulomb = Vec3::Constant(0.1);
    return p;
  }

  void validate() const {
    auto check_link = [](const LinkParams& l, const char* name) {
      if (!(l.mass > 0.0) || !(l.inertia > 0.0))
        throw ConfigError(std::string(name) +
                          ": mass and inertia must be positive");
    };
    for (int i = 0; i < 3; ++i) {
      check_link(proximal[i], "proximal link");
      check_link(distal[i], "distal link");
    }
    check_link(platform, "platform");
    if (viscous.minCoeff() < 0.0 || coulomb.minCoeff() < 0.0 ||
        viscous_passive.minCoeff() < 0.0)
      throw ConfigError("friction coefficients must be non-negative");
    if (!(coulomb_vel_eps > 0.0))
      throw ConfigError("coulomb_vel_eps must be positive");
  }
};

namespace detail {

/// 2x2 chain mass matrix in (q_a, q_p) coordinates. Derived from the two-link
/// kinetic energy in absolute link angles (theta1 = q_a, theta2 = q_a + q_p)
/// and transformed by [theta1; theta2] = [[1,0],[1,1]] [q_a; q_p].
inline Mat2 chain_mass_matrix(const Geometry& g, const DynamicsParams& p,
                              const JointConfig& q, int i) {
  const double l1 = g.link_len_1[i];
  const LinkParams& a = p.proximal[i];
  const LinkParams& b = p.distal[i];
  const double m11 = a.inertia + a.mass * a.com.squaredNorm() +
                     b.mass * l1 * l1;
  const double m22 = b.inertia + b.mass * b.com.squaredNorm();
  const double m12 =
      b.mass * l1 * unit(q.q_a[i]).dot(rot2(q.q_a[i] + q.q_p[i]) * b.com);
  Mat2 m;
  m << m11 + 2.0 * m12 + m22, m12 + m22,
       m12 + m22, m22;
  return m;
}

/// Platform rigid-body matrix in operational coordinates, allowing a
/// platform-frame COM offset.
inline Mat3 platform_mass_matrix(const DynamicsParams& p,
                                 const PlatformPose& x) {
  const Vec2 w = rot2(x.phi) * p.platform.com;
  const double m = p.platform.mass;
  Mat3 mm;
  mm << m, 0.0, -m * w.y(),
        0.0, m, m * w.x(),
        -m * w.y(), m * w.x(),
        p.platform.inertia + m * w.squaredNorm();
  return mm;
}

}  // namespace detail

/// Operational-space inertia M_x: the platform block plus every chain's
/// joint-space mass matrix projected through the constraint Jacobian,
/// M_x = M_platform(x) + sum_i J_{qi,x}^T M_chain,i J_{qi,x}.
inline Mat3 mass_matrix_x(const JointConfig& q, const PlatformPose& x,
                          const Geometry& g, const DynamicsParams& p) {
  const Mat9x3 jqx = jacobian_q_x(q, x, g);
  Mat3 m = detail::platform_mass_matrix(p, x);
  for (int i = 0; i < 3; ++i) {
    const Mat2 mc = detail::chain_mass_matrix(g, p, q, i);
    const auto ja = jqx.row(3 * i);      // active
    const auto jp = jqx.row(3 * i + 1);  // passive
    m += mc(0, 0) * ja.transpose() * ja + mc(1, 1) * jp.transpose() * jp +
         mc(0, 1) * (ja.transpose() * jp + jp.transpose() * ja);
  }
  return m;
}

/// M_x as a function of the pose alone, with joint angles recovered by
/// inverse kinematics in the given working mode.
inline Mat3 mass_matrix_at(const PlatformPose& x,
                           const std::array<int, 3>& sigma, const Geometry& g,
                           const DynamicsParams& p) {
  return mass_matrix_x(inverse_kinematics(x, sigma, g), x, g, p);
}

struct CoriolisTerms {
  Vec3 c = Vec3::Zero();  // c_x = C_x * xdot
  Mat3 C = Mat3::Zero();  // Christoffel factor, Mdot = C + C^T
};

/// Centrifugal/Coriolis vector and its factor from Christoffel symbols of
/// M_x(x), with the pose partials of M_x taken by central differences on the
/// constraint manifold (joints re-solved per probe pose). The factor
/// satisfies c = C xdot and skew-symmetry of Mdot - 2C.
inline CoriolisTerms coriolis_x(const JointConfig& q, const PlatformPose& x,
                                const Vec3& xdot, const Geometry& g,
                                const DynamicsParams& p) {
  const double h = p.fd_step;
  std::array<Mat3, 3> dM;
  for (int k = 0; k < 3; ++k) {
    Vec3 xp = x.vec(), xm = x.vec();
    xp[k] += h;
    xm[k] -= h;
    dM[k] = (mass_matrix_at(PlatformPose::from_vec(xp), q.sigma, g, p) -
             mass_matrix_at(PlatformPose::from_vec(xm), q.sigma, g, p)) /
            (2.0 * h);
  }
  CoriolisTerms out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double cij = 0.0;
      for (int k = 0; k < 3; ++k)
        cij += 0.5 * (dM[k](i, j) + dM[j](i, k) - dM[i](j, k)) * xdot[k];
      out.C(i, j) = cij;
    }
  out.c = out.C * xdot;
  return out;
}

namespace detail {

/// Linear COM Jacobians (2x3) of all seven bodies w.r.t. the platform pose.
/// Order: proximal 0..2, distal 0..2, platform.
inline std::array<Eigen::Matrix<double, 2, 3>, 7> body_com_jacobians(
    const JointConfig& q, const PlatformPose& x, const Geometry& g,
    const DynamicsParams& p) {
  const Mat9x3 jqx = jacobian_q_x(q, x, g);
  std::array<Eigen::Matrix<double, 2, 3>, 7> jb;
  for (int i = 0; i < 3; ++i) {
    const double qa = q.q_a[i], q12 = q.q_a[i] + q.q_p[i];
    const RowVec3 ra = jqx.row(3 * i);
    const RowVec3 rp = jqx.row(3 * i + 1);
    jb[i] = perp(rot2(qa) * p.proximal[i].com) * ra;
    jb[3 + i] = g.link_len_1[i] * perp(unit(qa)) * ra +
                perp(rot2(q12) * p.distal[i].com) * (ra + rp);
  }
  jb[6].setZero();
  jb[6].leftCols<2>().setIdentity();
  jb[6].col(2) = perp(rot2(x.phi) * p.platform.com);
  return jb;
}

inline std::array<double, 7> body_masses(const DynamicsParams& p) {
  return {p.proximal[0].mass, p.proximal[1].mass, p.proximal[2].mass,
          p.distal[0].mass, p.distal[1].mass, p.distal[2].mass,
          p.platform.mass};
}

}  // namespace detail

/// Gravity vector g_x = dU/dx assembled from the body COM Jacobians.
/// Zero in the default horizontal-plane configuration.
inline Vec3 gravity_x(const JointConfig& q, const PlatformPose& x,
                      const Geometry& g, const DynamicsParams& p) {
  if (p.gravity.isZero()) return Vec3::Zero();
  const auto jb = detail::body_com_jacobians(q, x, g, p);
  const auto masses = detail::body_masses(p);
  Vec3 gx = Vec3::Zero();
  for (int b = 0; b < 7; ++b)
    gx -= masses[b] * (jb[b].transpose() * p.gravity);
  return gx;
}

/// Joint friction (viscous + smoothed Coulomb at the drives, optional
/// viscous term at the passive joints) mapped to platform coordinates by
/// virtual work, F_fr,x = J_{q,x}^T tau_fr.
inline Vec3 friction_x(const JointConfig& q, const PlatformPose& x,
                       const Vec3& xdot, const Geometry& g,
                       const DynamicsParams& p) {
  const Mat9x3 jqx = jacobian_q_x(q, x, g);
  const Vec9 qdot = jqx * xdot;
  Vec9 tau = Vec9::Zero();
  for (int i = 0; i < 3; ++i) {
    const double va = qdot[3 * i];
    tau[3 * i] = p.viscous[i] * va +
                 p.coulomb[i] * std::tanh(va / p.coulomb_vel_eps);
    tau[3 * i + 1] = p.viscous_passive[i] * qdot[3 * i + 1];
  }
  return jqx.transpose() * tau;
}

/// F_m = M_x xdd + c_x + g_x + F_fr,x - F_ext.
inline Vec3 inverse_dynamics(const JointConfig& q, const PlatformPose& x,
                             const Vec3& xdot, const Vec3& xddot,
                             const Vec3& f_ext, const Geometry& g,
                             const DynamicsParams& p) {
  return mass_matrix_x(q, x, g, p) * xddot + coriolis_x(q, x, xdot, g, p).c +
         gravity_x(q, x, g, p) + friction_x(q, x, xdot, g, p) - f_ext;
}

/// xdd = M_x^{-1} (F_m + F_ext - c_x - g_x - F_fr,x), via Cholesky.
inline Vec3 forward_dynamics(const JointConfig& q, const PlatformPose& x,
                             const Vec3& xdot, const Vec3& f_m,
                             const Vec3& f_ext, const Geometry& g,
                             const DynamicsParams& p) {
  const Mat3 m = mass_matrix_x(q, x, g, p);
  Eigen::LLT<Mat3> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotSpdError("operational-space inertia is not positive definite");
  return llt.solve(f_m + f_ext - coriolis_x(q, x, xdot, g, p).c -
                   gravity_x(q, x, g, p) - friction_x(q, x, xdot, g, p));
}

struct WrenchProjection {
  Vec3 platform;   // F_ext = J_{xC,x}^T F_link
  Vec3 actuators;  // tau_ext = J_{xC,qa}^T F_link
};

/// Projects a planar wrench acting at a structure point to equivalent
/// platform forces and actuator torques.
inline WrenchProjection project_link_wrench(const ContactLocation& loc,
                                            const Vec3& f_link,
                                            const JointConfig& q,
                                            const PlatformPose& x,
                                            const Geometry& g) {
  const ContactJacobians j = contact_jacobians(loc, q, x, g);
  return {j.xc_x.transpose() * f_link, j.xc_qa.transpose() * f_link};
}

/// F = J_{x,qa}^{-T} tau, the platform force equivalent of actuator torques.
inline Vec3 actuator_to_platform(const Vec3& tau, const JointConfig& q,
                                 const PlatformPose& x, const Geometry& g) {
  const Mat3 j = jacobian_x_qa(q, x, g);
  return j.transpose().partialPivLu().solve(tau);
}

/// Multiplicative error knobs for the model terms used by the controller and
/// observers, to study robustness against imperfect identification.
struct ModelMismatch {
  double mass = 1.0;
  double coriolis = 1.0;
  double gravity = 1.0;
  double friction = 1.0;
};

/// Dynamics model bundle handed to the controller and observers. With unit
/// mismatch it evaluates the same terms as the plant.
class RobotModel {
 public:
  RobotModel(Geometry geom, DynamicsParams params, ModelMismatch mm = {})
      : geom_(std::move(geom)), params_(std::move(params)), mismatch_(mm) {}

  const Geometry& geometry() const { return geom_; }
  const DynamicsParams& params() const { return params_; }

  Mat3 mass(const JointConfig& q, const PlatformPose& x) const {
    return mismatch_.mass * mass_matrix_x(q, x, geom_, params_);
  }
  CoriolisTerms coriolis(const JointConfig& q, const PlatformPose& x,
                         const Vec3& xdot) const {
    CoriolisTerms t = coriolis_x(q, x, xdot, geom_, params_);
    t.c *= mismatch_.coriolis;
    t.C *= mismatch_.coriolis;
    return t;
  }
  Vec3 gravity(const JointConfig& q, const PlatformPose& x) const {
    return mismatch_.gravity * gravity_x(q, x, geom_, params_);
  }
  Vec3 friction(const JointConfig& q, const PlatformPose& x,
                const Vec3& xdot) const {
    return mismatch_.friction * friction_x(q, x, xdot, geom_, params_);
  }
  /// Generalized momentum p_x = M_x xdot under the model estimate.
  Vec3 momentum(const JointConfig& q, const PlatformPose& x,
                const Vec3& xdot) const {
    return mass(q, x) * xdot;
  }

 private:
  Geometry geom_;
  DynamicsParams params_;
  ModelMismatch mismatch_;
};

}  // namespace rrrsim
