#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace rrrsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat9x3 = Eigen::Matrix<double, 9, 3>;
using Mat3x9 = Eigen::Matrix<double, 3, 9>;
using RowVec3 = Eigen::Matrix<double, 1, 3>;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::fmod(a, 2.0 * pi);
  if (a <= -pi)
    a += 2.0 * pi;
  else if (a > pi)
    a -= 2.0 * pi;
  return a;
}

/// Unit vector at angle a from the world x-axis.
inline Vec2 unit(double a) { return {std::cos(a), std::sin(a)}; }

/// v rotated by +90 deg. Equals d/da of a vector attached to a frame at
/// angle a, so it shows up in every planar velocity expression.
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

inline Mat2 rot2(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// Platform pose x = [r_x, r_y, phi_z] in the world frame.
struct PlatformPose {
  double rx = 0.0;
  double ry = 0.0;
  double phi = 0.0;

  Vec2 position() const { return {rx, ry}; }
  Vec3 vec() const { return {rx, ry, phi}; }
  static PlatformPose from_vec(const Vec3& v) { return {v[0], v[1], v[2]}; }
  PlatformPose normalized() const { return {rx, ry, wrap_angle(phi)}; }
};

}  // namespace rrrsim
