#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "rrrsim/identification.hpp"
#include "calibration_gen.hpp"
#include "support.hpp"

using namespace rrrsim;

namespace {
const Geometry kGeom = Geometry::symmetric_default();
const Vec3 kTrue = Vec3::Constant(6.1);
}  // namespace

TEST_CASE("noiseless regression recovers the torque constant exactly") {
  const auto samples = calibration::calibration_set(kGeom, kTrue, 70, 5, 0.0);
  const TorqueConstantFit fit = fit_torque_constant(samples);
  for (int i = 0; i < 3; ++i) {
    CHECK(fit.k_t[i] == Catch::Approx(6.1).epsilon(1e-12));
    CHECK(fit.rmse[i] < 1e-12);
  }
  CHECK(fit.samples == 70);
}

TEST_CASE("fit reports the injected torque noise as its RMSE") {
  double k_sum = 0.0;
  int n_seeds = 10;
  for (int seed = 0; seed < n_seeds; ++seed) {
    const auto samples =
        calibration::calibration_set(kGeom, kTrue, 120, 100 + seed, 1.1);
    const TorqueConstantFit fit = fit_torque_constant(samples);
    for (int i = 0; i < 3; ++i)
      CHECK(fit.rmse[i] == Catch::Approx(1.1).epsilon(0.15));
    k_sum += fit.k_t.mean();
  }
  CHECK(k_sum / n_seeds == Catch::Approx(6.1).epsilon(0.01));
}

TEST_CASE("insufficient excitation is rejected") {
  std::vector<CalibrationSample> few(5);
  CHECK_THROWS_AS(fit_torque_constant(few), InsufficientExcitationError);
  // Samples whose currents are all identical span no range.
  std::vector<CalibrationSample> flat(20);
  for (auto& s : flat) {
    s.current = Vec3::Constant(1.0);
    s.torque = Vec3::Constant(6.1);
  }
  CHECK_THROWS_AS(fit_torque_constant(flat), InsufficientExcitationError);
}

TEST_CASE("through-origin fit is scale equivariant in the currents") {
  auto samples = calibration::calibration_set(kGeom, kTrue, 40, 7, 0.3);
  const TorqueConstantFit fit = fit_torque_constant(samples);
  for (auto& s : samples) s.current *= 2.0;
  const TorqueConstantFit half = fit_torque_constant(samples);
  for (int i = 0; i < 3; ++i)
    CHECK(half.k_t[i] == Catch::Approx(0.5 * fit.k_t[i]).epsilon(1e-12));
}

TEST_CASE("fit error decreases monotonically with the noise level") {
  double prev = 1e9;
  for (double noise : {1.0, 0.1, 0.01}) {
    const auto samples =
        calibration::calibration_set(kGeom, kTrue, 200, 11, noise);
    const TorqueConstantFit fit = fit_torque_constant(samples);
    const double err = (fit.k_t - kTrue).lpNorm<Eigen::Infinity>();
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("perfect fit and perfect currents give zero validation error") {
  TorqueConstantFit fit;
  fit.k_t = kTrue;
  const auto vs = calibration::validation_set(kGeom, kTrue, 70, 13, 0.0);
  const ValidationReport report = validate_fit(fit, vs, kGeom);
  CHECK(report.max_abs_error < 1e-10);
  CHECK(report.per_body.size() == 7);
  for (const auto& st : report.per_body) {
    CHECK(std::abs(st.median) < 1e-10);
    CHECK(st.count == 10);
  }
}

TEST_CASE("a biased torque constant shows up in the per-body medians") {
  TorqueConstantFit fit;
  fit.k_t = 1.05 * kTrue;  // +5 percent misestimate
  auto vs = calibration::validation_set(kGeom, kTrue, 140, 17, 0.0);
  // Align the pulls so the x-components share a sign, as in a directed
  // pulling experiment; everything is linear in the wrench.
  for (auto& s : vs)
    if (s.f_platform[0] < 0.0) {
      s.f_platform = -s.f_platform;
      s.current = -s.current;
    }
  const ValidationReport report = validate_fit(fit, vs, kGeom);
  int biased = 0;
  for (const auto& st : report.per_body)
    if (st.median < -0.1) ++biased;  // f - f^ trends negative
  CHECK(biased >= 6);
}

TEST_CASE("validation stats are independent of sample order") {
  TorqueConstantFit fit;
  fit.k_t = kTrue;
  auto vs = calibration::validation_set(kGeom, kTrue, 60, 19, 0.4);
  const ValidationReport a = validate_fit(fit, vs, kGeom);
  std::mt19937_64 rng(3);
  std::shuffle(vs.begin(), vs.end(), rng);
  const ValidationReport b = validate_fit(fit, vs, kGeom);
  REQUIRE(a.per_body.size() == b.per_body.size());
  CHECK(a.max_abs_error == b.max_abs_error);
  for (size_t k = 0; k < a.per_body.size(); ++k) {
    CHECK(a.per_body[k].body == b.per_body[k].body);
    CHECK(a.per_body[k].median == b.per_body[k].median);
    CHECK(a.per_body[k].q1 == b.per_body[k].q1);
    CHECK(a.per_body[k].q3 == b.per_body[k].q3);
  }
}

TEST_CASE("body labels") {
  CHECK(body_label({0, 1, Vec2::Zero()}) == "C1L1");
  CHECK(body_label({2, 2, Vec2::Zero()}) == "C3L2");
  CHECK(body_label({1, 0, Vec2::Zero()}) == "MP");
}
