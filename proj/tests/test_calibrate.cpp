#include "varsketch/calibrate.hpp"
#include "varsketch/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace varsketch;

namespace {

CalibrationPoint counts(std::size_t m, std::uint64_t failures, std::uint64_t trials) {
  CalibrationPoint p;
  p.m = m;
  p.failures = failures;
  p.trials = trials;
  p.rate = trials ? static_cast<double>(failures) / static_cast<double>(trials) : 0.0;
  return p;
}

double neg_log_model(const PhiFunction::PowerLaw& f, double m) {
  return f.intercept + f.log_weight * std::log(m) + f.scale * std::pow(m, f.exponent);
}

void expect_conservative(const CalibrationResult& r) {
  std::size_t usable = 0, under = 0;
  for (const auto& p : r.points) {
    if (p.failures == 0 || p.failures == p.trials) continue;
    ++usable;
    under += neg_log_model(r.conservative, static_cast<double>(p.m)) <= -std::log(p.rate) + 1e-9;
  }
  ASSERT_GT(usable, 0u);
  EXPECT_GE(static_cast<double>(under) / static_cast<double>(usable), 0.9);
  EXPECT_GE(r.fraction_under, 0.9);
}

}  // namespace

TEST(Calibrate, ZeroTrialPointIsDegenerate) {
  EXPECT_THROW(fit_calibration({counts(10, 5, 1000), counts(20, 0, 0)}, 1), DegenerateFitError);
}

TEST(Calibrate, AllZeroOrAllOneFailuresAreDegenerate) {
  EXPECT_THROW(fit_calibration({counts(10, 1000, 1000), counts(20, 0, 1000), counts(40, 0, 1000)}, 1),
               DegenerateFitError);
  EXPECT_THROW(fit_calibration({counts(10, 400, 1000), counts(20, 0, 1000)}, 1), DegenerateFitError);
}

TEST(Calibrate, ValidatesArguments) {
  OperatorSpec g{SketchKind::gaussian, 1, {16}, 0};
  const std::vector<std::size_t> grid{10, 20};
  EXPECT_THROW(calibrate_phi(g, 0.3, grid, 999, 1), ValidationError);
  EXPECT_THROW(calibrate_phi(g, 0.3, {}, 1000, 1), ValidationError);
  EXPECT_THROW(calibrate_phi(g, 1.5, grid, 1000, 1), ValidationError);
  EXPECT_THROW(calibrate_phi(OperatorSpec{SketchKind::identity, 16, {16}, 0}, 0.3, grid, 1000, 1),
               ValidationError);
}

TEST(Calibrate, RecoversSyntheticPowerLaw) {
  // −log f = 0.3 + ½·log m + 0.02·m^0.8, counts at 10⁸ trials
  const std::uint64_t trials = 100000000;
  std::vector<CalibrationPoint> pts;
  for (std::size_t m : {20, 40, 80, 120, 160, 200, 250}) {
    const double f = std::exp(-(0.3 + 0.5 * std::log(m) + 0.02 * std::pow(m, 0.8)));
    pts.push_back(counts(m, static_cast<std::uint64_t>(std::llround(f * trials)), trials));
  }
  const auto r = fit_calibration(pts, 3);
  EXPECT_EQ(r.usable_points, 7u);
  EXPECT_NEAR(r.fit.exponent, 0.8, 0.01);
  EXPECT_NEAR(r.fit.scale, 0.02, 0.002);
  EXPECT_LE(r.exponent_ci.lo, 0.8);
  EXPECT_GE(r.exponent_ci.hi, 0.8);
  expect_conservative(r);
}

TEST(Calibrate, GaussianExponentNearOne) {
  OperatorSpec g{SketchKind::gaussian, 1, {4}, 0};
  const std::vector<std::size_t> grid{20, 40, 80, 120, 160, 200, 250};
  const auto r = calibrate_phi(g, 0.3, grid, 5000, 2024);
  EXPECT_NEAR(r.fit.exponent, 1.0, 0.2);
  expect_conservative(r);
}

TEST(Calibrate, KhatriRaoOrderTwoExponentNearHalf) {
  OperatorSpec kr{SketchKind::khatri_rao, 1, {16, 16}, 0};
  const std::vector<std::size_t> grid{50, 100, 200, 300, 400, 600, 800, 1000};
  const auto r = calibrate_phi(kr, 0.3, grid, 5000, 2024);
  EXPECT_GE(r.fit.exponent, 0.4);
  EXPECT_LE(r.fit.exponent, 0.7);
  expect_conservative(r);
}

TEST(Calibrate, DeterministicGivenSeed) {
  OperatorSpec g{SketchKind::rademacher, 1, {8}, 0};
  const std::vector<std::size_t> grid{10, 20, 40};
  EXPECT_EQ(calibration_to_json(calibrate_phi(g, 0.3, grid, 1000, 5)),
            calibration_to_json(calibrate_phi(g, 0.3, grid, 1000, 5)));
}

TEST(Calibrate, BootstrapIntervalCoversFitOnNoisyCounts) {
  // the same law at 5000 trials: the interval must be nondegenerate and contain the fit
  const std::uint64_t trials = 5000;
  std::vector<CalibrationPoint> pts;
  for (std::size_t m : {10, 20, 40, 60, 80}) {
    const double f = std::exp(-(0.3 + 0.5 * std::log(m) + 0.02 * std::pow(m, 0.8)));
    pts.push_back(counts(m, static_cast<std::uint64_t>(std::llround(f * trials)), trials));
  }
  const auto r = fit_calibration(pts, 4);
  EXPECT_LT(r.exponent_ci.lo, r.exponent_ci.hi);
  EXPECT_LE(r.exponent_ci.lo, r.fit.exponent);
  EXPECT_GE(r.exponent_ci.hi, r.fit.exponent);
}
