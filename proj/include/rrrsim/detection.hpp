#pragma once

#include <cmath>
#include <string>

#include "rrrsim/errors.hpp"
#include "rrrsim/types.hpp"

namespace rrrsim {

/// Per-axis contact thresholds on the estimated external force.
struct DetectionConfig {
  Vec3 epsilon = Vec3(12.0, 12.0, 1.0);
  /// Samples an axis must exceed its threshold consecutively before the
  /// detector latches; 1 triggers on first exceedance.
  int consecutive = 1;

  void validate() const {
    if (epsilon.minCoeff() <= 0.0)
      throw ConfigError("detection thresholds must be positive");
    if (consecutive < 1)
      throw ConfigError("detection consecutive count must be >= 1");
  }
};

/// Latching threshold detector: trips as soon as |F^_ext,i| > eps_i on any
/// axis (after the configured consecutive count) and stays tripped. The first
/// exceeding axis is recorded.
class ContactDetector {
 public:
  explicit ContactDetector(DetectionConfig cfg) : cfg_(cfg) {
    cfg_.validate();
  }

  bool update(const Vec3& f_hat_ext) {
    if (triggered_) return true;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(f_hat_ext[i]) > cfg_.epsilon[i]) {
        if (++count_[i] >= cfg_.consecutive) {
          triggered_ = true;
          axis_ = i;
          return true;
        }
      } else {
        count_[i] = 0;
      }
    }
    return false;
  }

  bool triggered() const { return triggered_; }
  int axis() const { return axis_; }
  void reset() {
    triggered_ = false;
    axis_ = -1;
    count_ = {0, 0, 0};
  }

 private:
  DetectionConfig cfg_;
  bool triggered_ = false;
  int axis_ = -1;
  std::array<int, 3> count_ = {0, 0, 0};
};

/// Ground truth and detection record of one contact.
struct ContactEvent {
  std::string observer;
  double t_onset = 0.0;
  double t_detect = 0.0;
  double dt_cd = 0.0;  // t_detect - t_onset
  int axis = -1;
};

}  // namespace rrrsim
