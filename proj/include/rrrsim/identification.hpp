#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "rrrsim/dynamics.hpp"
#include "rrrsim/errors.hpp"
#include "rrrsim/kinematics.hpp"
#include "rrrsim/types.hpp"

namespace rrrsim {

/// One calibration point: measured motor currents against the torques that
/// an external contact wrench projects onto the drives.
struct CalibrationSample {
  Vec3 current = Vec3::Zero();   // A
  Vec3 torque = Vec3::Zero();    // N m, from project_link_wrench
  std::string body = "MP";       // C{i}L{j} or MP
};

struct TorqueConstantFit {
  Vec3 k_t = Vec3::Zero();   // N m / A per axis
  Vec3 rmse = Vec3::Zero();  // N m per axis
  int samples = 0;
};

/// Per-axis least-squares fit of torque = k_t * current through the origin.
/// Requires min_samples points and a per-axis current spread of at least
/// min_current_range; otherwise InsufficientExcitationError.
inline TorqueConstantFit fit_torque_constant(
    const std::vector<CalibrationSample>& samples, int min_samples = 10,
    double min_current_range = 1.0) {
  if (static_cast<int>(samples.size()) < min_samples)
    throw InsufficientExcitationError(
        "need at least " + std::to_string(min_samples) +
        " calibration samples, got " + std::to_string(samples.size()));
  TorqueConstantFit fit;
  fit.samples = static_cast<int>(samples.size());
  for (int axis = 0; axis < 3; ++axis) {
    double lo = samples.front().current[axis];
    double hi = lo;
    double sii = 0.0, sti = 0.0;
    for (const auto& s : samples) {
      lo = std::min(lo, s.current[axis]);
      hi = std::max(hi, s.current[axis]);
      sii += s.current[axis] * s.current[axis];
      sti += s.torque[axis] * s.current[axis];
    }
    if (hi - lo < min_current_range)
      throw InsufficientExcitationError(
          "axis " + std::to_string(axis) + ": current range " +
          std::to_string(hi - lo) + " A below required " +
          std::to_string(min_current_range) + " A");
    fit.k_t[axis] = sti / sii;
    double sq = 0.0;
    for (const auto& s : samples) {
      const double r = s.torque[axis] - fit.k_t[axis] * s.current[axis];
      sq += r * r;
    }
    fit.rmse[axis] = std::sqrt(sq / samples.size());
  }
  return fit;
}

/// Validation point: measured platform force against the state it was
/// recorded in, so the current-based estimate can be projected to the
/// platform.
struct ValidationSample {
  std::string body = "MP";
  Vec3 current = Vec3::Zero();
  Vec3 f_platform = Vec3::Zero();  // measured external platform force
  JointConfig q;
  PlatformPose x;
};

/// Platform force inferred from motor currents through a torque-constant fit;
/// the quasi-static counterpart of the momentum-observer estimate.
inline Vec3 estimate_platform_force(const TorqueConstantFit& fit,
                                    const ValidationSample& s,
                                    const Geometry& g) {
  const Vec3 tau = fit.k_t.cwiseProduct(s.current);
  return actuator_to_platform(tau, s.q, s.x, g);
}

struct BodyErrorStats {
  std::string body;
  int count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct ValidationReport {
  std::vector<BodyErrorStats> per_body;
  double max_abs_error = 0.0;
};

/// Distribution of the x-axis force error (f_x - f^_x) per contacted body.
/// Quartiles use linear interpolation; results do not depend on sample order.
inline ValidationReport validate_fit(const TorqueConstantFit& fit,
                                     const std::vector<ValidationSample>& vs,
                                     const Geometry& g) {
  std::map<std::string, std::vector<double>> errors;
  ValidationReport report;
  for (const auto& s : vs) {
    const Vec3 est = estimate_platform_force(fit, s, g);
    const double e = s.f_platform[0] - est[0];
    errors[s.body].push_back(e);
    report.max_abs_error = std::max(report.max_abs_error, std::abs(e));
  }
  auto quantile = [](std::vector<double>& v, double p) {
    const double idx = p * (v.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(idx));
    const auto hi = static_cast<size_t>(std::ceil(idx));
    return v[lo] + (idx - lo) * (v[hi] - v[lo]);
  };
  for (auto& [body, v] : errors) {
    std::sort(v.begin(), v.end());
    BodyErrorStats st;
    st.body = body;
    st.count = static_cast<int>(v.size());
    st.min = v.front();
    st.max = v.back();
    st.q1 = quantile(v, 0.25);
    st.median = quantile(v, 0.5);
    st.q3 = quantile(v, 0.75);
    report.per_body.push_back(st);
  }
  return report;
}

/// Body label for a contact location, C{chain+1}L{link} or MP.
inline std::string body_label(const ContactLocation& loc) {
  if (loc.link == 0) return "MP";
  return "C" + std::to_string(loc.chain + 1) + "L" + std::to_string(loc.link);
}

}  // namespace rrrsim
