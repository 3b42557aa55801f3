#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "rrrsim/errors.hpp"
#include "rrrsim/types.hpp"

namespace rrrsim {

/// Kinematic geometry of the planar 3-RRR mechanism. Chain i runs from
/// base_anchor[i] through a proximal link (link_len_1[i]) and a distal link
/// (link_len_2[i]) to a platform coupling point located at
/// platform_coupling_local[i] in the platform frame.
struct Geometry {
  std::array<Vec2, 3> base_anchor{};
  std::array<Vec2, 3> platform_coupling_local{};
  std::array<double, 3> link_len_1{};
  std::array<double, 3> link_len_2{};
  /// Lateral bound for contact points, measured from the link axis.
  double link_half_width = 0.02;

  /// Symmetric desk-scale layout: base anchors on a 0.35 m circle at
  /// 90/210/330 deg, coupling points on a 0.10 m circle at the same angles,
  /// both links 0.25 m.
  static Geometry symmetric_default() {
    Geometry g;
    constexpr double deg = std::numbers::pi / 180.0;
    const std::array<double, 3> angles = {90.0 * deg, 210.0 * deg, 330.0 * deg};
    for (int i = 0; i < 3; ++i) {
      g.base_anchor[i] = 0.35 * unit(angles[i]);
      g.platform_coupling_local[i] = 0.10 * unit(angles[i]);
      g.link_len_1[i] = 0.25;
      g.link_len_2[i] = 0.25;
    }
    return g;
  }

  /// World position of chain i's coupling point for platform pose x.
  Vec2 coupling_point(int i, const PlatformPose& x) const {
    return x.position() + rot2(x.phi) * platform_coupling_local[i];
  }

  void validate() const {
    for (int i = 0; i < 3; ++i) {
      if (!(link_len_1[i] > 0.0) || !(link_len_2[i] > 0.0))
        throw ConfigError("link lengths of chain " + std::to_string(i) +
                          " must be positive");
    }
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        if ((base_anchor[i] - base_anchor[j]).norm() < 1e-9)
          throw ConfigError("base anchors " + std::to_string(i) + " and " +
                            std::to_string(j) + " coincide");
    if (!(link_half_width > 0.0))
      throw ConfigError("link_half_width must be positive");
  }
};

}  // namespace rrrsim
