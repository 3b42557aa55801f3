#pragma once

#include <array>
#include <cmath>
#include <random>

#include "rrrsim/geometry.hpp"
#include "rrrsim/kinematics.hpp"
#include "rrrsim/types.hpp"

namespace testsupport {

using namespace rrrsim;

/// Draws poses that every chain reaches with margin from both the stretched
/// and folded singularities (elbow kept well bent).
class WorkspaceSampler {
 public:
  explicit WorkspaceSampler(const Geometry& g, std::uint64_t seed = 1234)
      : geom_(g), rng_(seed) {}

  PlatformPose sample() {
    std::uniform_real_distribution<double> pos(-0.08, 0.08);
    std::uniform_real_distribution<double> ang(-0.35, 0.35);
    for (int tries = 0; tries < 1000; ++tries) {
      const PlatformPose x{pos(rng_), pos(rng_), ang(rng_)};
      if (acceptable(x)) return x;
    }
    return PlatformPose{};
  }

  Vec3 sample_twist(double lin = 0.5, double rot = 2.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {lin * u(rng_), lin * u(rng_), rot * u(rng_)};
  }

  bool acceptable(const PlatformPose& x) const {
    for (int i = 0; i < 3; ++i) {
      const double l1 = geom_.link_len_1[i], l2 = geom_.link_len_2[i];
      const double d = (geom_.coupling_point(i, x) - geom_.base_anchor[i]).norm();
      if (d > l1 + l2 || d < std::abs(l1 - l2)) return false;
      const double c = (d * d - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
      if (std::abs(c) > 0.93) return false;  // |sin q_p| >= ~0.37
    }
    return true;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  Geometry geom_;
  std::mt19937_64 rng_;
};

constexpr std::array<int, 3> kElbowUp = {1, 1, 1};

}  // namespace testsupport
