#pragma once

#include <array>
#include <cmath>

#include "rrrsim/errors.hpp"
#include "rrrsim/geometry.hpp"
#include "rrrsim/types.hpp"

namespace rrrsim {

/// Joint angles of all three chains plus the working-mode signs. Per chain:
/// q_a is the actuated base angle (absolute, world frame), q_p the passive
/// elbow angle relative to the proximal link, q_c the platform coupling angle
/// relative to the distal link. The platform orientation of a consistent
/// configuration is phi = q_a[i] + q_p[i] + q_c[i] for every chain i.
struct JointConfig {
  Vec3 q_a = Vec3::Zero();
  Vec3 q_p = Vec3::Zero();
  Vec3 q_c = Vec3::Zero();
  std::array<int, 3> sigma = {1, 1, 1};

  /// Stacked per-chain order [q_a0, q_p0, q_c0, q_a1, ...].
  Vec9 stacked() const {
    Vec9 q;
    for (int i = 0; i < 3; ++i) {
      q[3 * i + 0] = q_a[i];
      q[3 * i + 1] = q_p[i];
      q[3 * i + 2] = q_c[i];
    }
    return q;
  }
};

namespace detail {

constexpr double kSingularDetTol = 1e-10;

/// Elbow position of chain i.
inline Vec2 elbow_point(const Geometry& g, const JointConfig& q, int i) {
  return g.base_anchor[i] + g.link_len_1[i] * unit(q.q_a[i]);
}

/// Coupling point of chain i from the chain's serial kinematics.
inline Vec2 chain_coupling_point(const Geometry& g, const JointConfig& q,
                                 int i) {
  return elbow_point(g, q, i) +
         g.link_len_2[i] * unit(q.q_a[i] + q.q_p[i]);
}

/// d(Gamma_i)/d(q_i): 3x3 block of the full constraint Jacobian w.r.t. the
/// chain's own joints. Rows are [loop x, loop y, rotation].
inline Mat3 gamma_dq_block(const Geometry& g, const JointConfig& q, int i) {
  const double l1 = g.link_len_1[i], l2 = g.link_len_2[i];
  const Vec2 du_a = l1 * perp(unit(q.q_a[i]));
  const Vec2 du_p = l2 * perp(unit(q.q_a[i] + q.q_p[i]));
  Mat3 b;
  b << du_a.x() + du_p.x(), du_p.x(), 0.0,
       du_a.y() + du_p.y(), du_p.y(), 0.0,
       1.0, 1.0, 1.0;
  return b;
}

/// d(Gamma_i)/dx: 3x3 block w.r.t. the platform pose.
inline Mat3 gamma_dx_block(const Geometry& g, const PlatformPose& x, int i) {
  const Vec2 w = perp(rot2(x.phi) * g.platform_coupling_local[i]);
  Mat3 b;
  b << -1.0, 0.0, -w.x(),
       0.0, -1.0, -w.y(),
       0.0, 0.0, -1.0;
  return b;
}

}  // namespace detail

/// Analytic inverse kinematics. For each chain the coupling point is solved
/// as a planar two-link problem; sigma[i] selects the elbow branch as the
/// sign of q_p[i]. Throws UnreachableError when a coupling point lies outside
/// the chain's annulus |l1 - l2| <= d <= l1 + l2.
inline JointConfig inverse_kinematics(const PlatformPose& x,
                                      const std::array<int, 3>& sigma,
                                      const Geometry& g) {
  JointConfig q;
  q.sigma = sigma;
  for (int i = 0; i < 3; ++i) {
    const double l1 = g.link_len_1[i], l2 = g.link_len_2[i];
    const Vec2 w = g.coupling_point(i, x) - g.base_anchor[i];
    const double d = w.norm();
    if (d > l1 + l2 || d < std::abs(l1 - l2))
      throw UnreachableError(i, d);
    double c = (d * d - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    c = std::clamp(c, -1.0, 1.0);
    const double qp = sigma[i] * std::acos(c);
    const double qa = std::atan2(w.y(), w.x()) -
                      std::atan2(l2 * std::sin(qp), l1 + l2 * std::cos(qp));
    q.q_a[i] = wrap_angle(qa);
    q.q_p[i] = qp;
    q.q_c[i] = wrap_angle(x.phi - q.q_a[i] - q.q_p[i]);
  }
  return q;
}

/// Full loop-closure constraints Gamma(q, x), three rows per chain:
/// two position rows and one rotation row. Zero iff (q, x) is consistent.
inline Vec9 full_constraints(const JointConfig& q, const PlatformPose& x,
                             const Geometry& g) {
  Vec9 r;
  for (int i = 0; i < 3; ++i) {
    const Vec2 loop = detail::chain_coupling_point(g, q, i) -
                      g.coupling_point(i, x);
    r[3 * i + 0] = loop.x();
    r[3 * i + 1] = loop.y();
    r[3 * i + 2] = wrap_angle(q.q_a[i] + q.q_p[i] + q.q_c[i] - x.phi);
  }
  return r;
}

/// J_{q,x} = -Gamma_dq^{-1} Gamma_dx maps a platform twist to all nine joint
/// rates. Gamma_dq is block diagonal per chain; a block with
/// |det| = l1*l2*|sin q_p| below threshold raises SingularChainError.
inline Mat9x3 jacobian_q_x(const JointConfig& q, const PlatformPose& x,
                           const Geometry& g) {
  Mat9x3 j;
  for (int i = 0; i < 3; ++i) {
    const Mat3 dq = detail::gamma_dq_block(g, q, i);
    if (std::abs(dq.determinant()) < detail::kSingularDetTol)
      throw SingularChainError(i);
    j.middleRows<3>(3 * i) = -dq.inverse() * detail::gamma_dx_block(g, x, i);
  }
  return j;
}

/// J_{x,qa} = -(Gamma_red)_dx^{-1} (Gamma_red)_dqa maps active joint rates to
/// the platform twist. Gamma_red eliminates the passive angles: per chain it
/// is the squared-length condition on the distal link. Raises
/// PlatformSingularError at type II singularities.
inline Mat3 jacobian_x_qa(const JointConfig& q, const PlatformPose& x,
                          const Geometry& g) {
  Mat3 red_dx;
  Vec3 red_dqa;
  const Mat2 rot = rot2(x.phi);
  for (int i = 0; i < 3; ++i) {
    // Distal-link vector from elbow to coupling point, written from x and q_a.
    const Vec2 d = g.coupling_point(i, x) - g.base_anchor[i] -
                   g.link_len_1[i] * unit(q.q_a[i]);
    const Vec2 w = perp(rot * g.platform_coupling_local[i]);
    red_dx(i, 0) = 2.0 * d.x();
    red_dx(i, 1) = 2.0 * d.y();
    red_dx(i, 2) = 2.0 * d.dot(w);
    red_dqa[i] = -2.0 * g.link_len_1[i] * d.dot(perp(unit(q.q_a[i])));
  }
  if (std::abs(red_dx.determinant()) < detail::kSingularDetTol)
    throw PlatformSingularError();
  return -red_dx.inverse() * Mat3(red_dqa.asDiagonal());
}

namespace detail {

/// Initial pose estimate for forward kinematics: coupling points of chains 0
/// and 1 from their serial kinematics fix the platform by a planar rigid-body
/// fit; chain 2 serves as a consistency check only.
inline PlatformPose triangulate_pose(const Vec3& q_a, const Vec3& q_p,
                                     const Geometry& g) {
  JointConfig q;
  q.q_a = q_a;
  q.q_p = q_p;
  const Vec2 b0 = chain_coupling_point(g, q, 0);
  const Vec2 b1 = chain_coupling_point(g, q, 1);
  const Vec2 lb0 = g.platform_coupling_local[0];
  const Vec2 lb1 = g.platform_coupling_local[1];
  const Vec2 dw = b1 - b0;
  const Vec2 dl = lb1 - lb0;
  const double phi = std::atan2(dw.y(), dw.x()) - std::atan2(dl.y(), dl.x());
  const Vec2 r = b0 - rot2(phi) * lb0;
  return PlatformPose{r.x(), r.y(), wrap_angle(phi)};
}

}  // namespace detail

/// Newton-Raphson forward kinematics
///   x_{k+1} = x_k + J_{x,qa}(x_k) (q_a - IK(x_k, sigma)),
/// started from the pose triangulated out of the measured (q_a, q_p). The
/// elbow branch is read off the sign of the measured passive angles.
/// Converged when ||q_a - IK(x)||_inf < tol. Throws NoConvergenceError when
/// the iteration exhausts max_iter or leaves the reachable workspace;
/// PlatformSingularError propagates.
inline PlatformPose forward_kinematics(const Vec3& q_a, const Vec3& q_p,
                                       const Geometry& g, double tol = 1e-10,
                                       int max_iter = 20) {
  std::array<int, 3> sigma;
  for (int i = 0; i < 3; ++i) sigma[i] = q_p[i] >= 0.0 ? 1 : -1;
  PlatformPose x = detail::triangulate_pose(q_a, q_p, g);
  for (int it = 0; it < max_iter; ++it) {
    JointConfig q;
    Vec3 e;
    try {
      q = inverse_kinematics(x, sigma, g);
      for (int i = 0; i < 3; ++i) e[i] = wrap_angle(q_a[i] - q.q_a[i]);
      if (e.lpNorm<Eigen::Infinity>() < tol) return x.normalized();
      x = PlatformPose::from_vec(x.vec() + jacobian_x_qa(q, x, g) * e);
    } catch (const UnreachableError&) {
      throw NoConvergenceError(it + 1);
    } catch (const SingularChainError&) {
      throw NoConvergenceError(it + 1);
    }
  }
  throw NoConvergenceError(max_iter);
}

/// A body-fixed point on the structure. link 1 is the proximal link (frame
/// origin at the base anchor, x-axis along the link), link 2 the distal link
/// (origin at the elbow), link 0 the mobile platform (origin at the platform
/// frame, chain index ignored). offset is expressed in that body frame.
struct ContactLocation {
  int chain = 0;
  int link = 2;
  Vec2 offset = Vec2::Zero();
};

inline void validate_location(const ContactLocation& loc, const Geometry& g) {
  if (loc.chain < 0 || loc.chain > 2)
    throw ConfigError("contact chain index out of range");
  if (loc.link < 0 || loc.link > 2)
    throw ConfigError("contact link index must be 0 (platform), 1 or 2");
  if (loc.link == 0) {
    double rmax = 0.0;
    for (const auto& b : g.platform_coupling_local)
      rmax = std::max(rmax, b.norm());
    if (loc.offset.norm() > rmax + g.link_half_width)
      throw ConfigError("platform contact offset outside platform bound");
    return;
  }
  const double len = loc.link == 1 ? g.link_len_1[loc.chain]
                                   : g.link_len_2[loc.chain];
  if (loc.offset.x() < 0.0 || loc.offset.x() > len)
    throw ConfigError("contact offset beyond link length");
  if (std::abs(loc.offset.y()) > g.link_half_width)
    throw ConfigError("contact offset beyond link half-width");
}

/// Pose of the body-fixed contact frame, by serial kinematics of the
/// affected chain (or of chain 0 plus the coupling angles for a platform
/// location).
inline PlatformPose contact_point_pose(const ContactLocation& loc,
                                       const JointConfig& q,
                                       const Geometry& g) {
  validate_location(loc, g);
  const int i = loc.link == 0 ? 0 : loc.chain;
  const double qa = q.q_a[i], q12 = q.q_a[i] + q.q_p[i];
  Vec2 p;
  double theta;
  switch (loc.link) {
    case 1:
      p = g.base_anchor[i] + rot2(qa) * loc.offset;
      theta = qa;
      break;
    case 2:
      p = detail::elbow_point(g, q, i) + rot2(q12) * loc.offset;
      theta = q12;
      break;
    default: {  // platform, reached through chain 0
      const double phi = q12 + q.q_c[i];
      p = detail::chain_coupling_point(g, q, i) +
          rot2(phi) * (loc.offset - g.platform_coupling_local[i]);
      theta = phi;
      break;
    }
  }
  return PlatformPose{p.x(), p.y(), wrap_angle(theta)};
}

struct ContactJacobians {
  Mat3x9 xc_q;   // contact twist from all joint rates (serial chain path)
  Mat3 xc_x;    // contact twist from the platform twist
  Mat3 xc_qa;   // contact twist from active joint rates
};

/// Jacobians of the contact frame twist [v_x, v_y, w_z]. xc_q differentiates
/// the serial chain expression and is therefore zero outside the affected
/// chain's block; xc_x = xc_q * J_{q,x} and xc_qa = xc_x * J_{x,qa} couple in
/// the loop constraints.
inline ContactJacobians contact_jacobians(const ContactLocation& loc,
                                          const JointConfig& q,
                                          const PlatformPose& x,
                                          const Geometry& g) {
  validate_location(loc, g);
  const int i = loc.link == 0 ? 0 : loc.chain;
  const double qa = q.q_a[i], q12 = q.q_a[i] + q.q_p[i];
  ContactJacobians out;
  out.xc_q.setZero();
  auto block = [&](int joint) -> Eigen::Block<Mat3x9, 3, 1> {
    return out.xc_q.block<3, 1>(0, 3 * i + joint);
  };
  switch (loc.link) {
    case 1: {
      const Vec2 da = perp(rot2(qa) * loc.offset);
      block(0) << da.x(), da.y(), 1.0;
      break;
    }
    case 2: {
      const Vec2 lever = perp(rot2(q12) * loc.offset);
      const Vec2 da = g.link_len_1[i] * perp(unit(qa)) + lever;
      block(0) << da.x(), da.y(), 1.0;
      block(1) << lever.x(), lever.y(), 1.0;
      break;
    }
    default: {
      const double phi = q12 + q.q_c[i];
      const Vec2 lever =
          perp(rot2(phi) * (loc.offset - g.platform_coupling_local[i]));
      const double l1 = g.link_len_1[i], l2 = g.link_len_2[i];
      const Vec2 da = l1 * perp(unit(qa)) + l2 * perp(unit(q12)) + lever;
      const Vec2 dp = l2 * perp(unit(q12)) + lever;
      block(0) << da.x(), da.y(), 1.0;
      block(1) << dp.x(), dp.y(), 1.0;
      block(2) << lever.x(), lever.y(), 1.0;
      break;
    }
  }
  out.xc_x = out.xc_q * jacobian_q_x(q, x, g);
  out.xc_qa = out.xc_x * jacobian_x_qa(q, x, g);
  return out;
}

}  // namespace rrrsim
