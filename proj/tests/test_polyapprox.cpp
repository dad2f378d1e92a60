#include "varsketch/errors.hpp"
#include "varsketch/polyapprox.hpp"
#include "varsketch/rng.hpp"
#include "varsketch/sketch.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace varsketch;

namespace {

// 10⁴ equispaced points on [lo, hi] plus the given breakpoints.
std::vector<double> grid(double lo, double hi, std::initializer_list<double> extra = {}) {
  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i) xs.push_back(lo + (hi - lo) * i / 9999.0);
  xs.insert(xs.end(), extra);
  return xs;
}

double relu_sup_error(std::size_t d) {
  const auto p = relu_approx(d);
  double e = 0;
  for (double x : grid(-1, 1, {0.0})) e = std::max(e, std::abs(p(x) - std::max(x, 0.0)));
  return e;
}

// Naive T_k evaluation by the trigonometric definition.
double cheb_sum(const ChebyshevPoly& p, double x) {
  const double t = (2 * x - p.lo - p.hi) / (p.hi - p.lo);
  double s = 0;
  for (std::size_t k = 0; k < p.coeffs.size(); ++k) s += p.coeffs[k] * std::cos(k * std::acos(t));
  return s;
}

double median_of(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(Chebyshev, ClenshawMatchesTrigonometricDefinition) {
  const ChebyshevPoly p{0.0, 3.0, {0.5, -1.0, 0.25, 2.0, -0.125}};
  for (double x : {0.0, 0.3, 1.5, 2.9, 3.0}) EXPECT_NEAR(p(x), cheb_sum(p, x), 1e-13);
}

TEST(Chebyshev, InterpolationReproducesPolynomials) {
  auto f = [](double x) { return 1 - 2 * x + 0.5 * x * x * x; };
  const auto p = ChebyshevPoly::interpolate(f, 3, -2.0, 5.0);
  EXPECT_EQ(p.degree(), 3u);
  for (double x : {-2.0, 0.0, 1.7, 5.0}) EXPECT_NEAR(p(x), f(x), 1e-11);
}

TEST(Relu, EndpointsWithinRate) {
  for (std::size_t d : {2u, 5u, 8u, 33u}) {
    const auto p = relu_approx(d);
    EXPECT_LE(std::abs(p(-1.0)), kReluConstant / d);
    EXPECT_LE(std::abs(p(1.0) - 1.0), kReluConstant / d);
  }
}

TEST(Relu, ErrorRateMatchesClosedForm) {
  double prev = 1e300;
  for (std::size_t d : {8u, 16u, 32u, 64u}) {
    const double e = relu_sup_error(d);
    EXPECT_NEAR(e, 1.0 / (std::numbers::pi * (d + 1)), 1e-12);
    EXPECT_LE(e, kReluConstant / d);
    EXPECT_GE(prev / e, 1.5);
    prev = e;
  }
  EXPECT_NEAR(relu_sup_error(9), 1.0 / (std::numbers::pi * 9), 1e-12);
}

TEST(Relu, OddPartIsHalfIdentity) {
  const auto p = relu_approx(20);
  for (double x : grid(0, 1)) EXPECT_NEAR((p(x) - x / 2) - (p(-x) + x / 2), 0.0, 1e-10);
}

TEST(Relu, RejectsLowDegree) { EXPECT_THROW(relu_approx(1), ValidationError); }

TEST(CountingUpper, ReferenceParametersPassGrid) {
  const double eps = 0.5, M = 3, eta = 0.25;
  const auto c = counting_poly_upper(eps, M, eta);
  EXPECT_TRUE(c.check.pass);
  EXPECT_EQ(c.degree_bound, static_cast<std::size_t>(std::ceil(kCountingConstant * M / (eps * eta))));
  EXPECT_EQ(c.degree_bound, 62u);
  EXPECT_LE(c.p.degree(), c.degree_bound);
  // independent re-check on a separate grid
  for (double x : grid(0, M, {1 + eps / 2, 1 + eps})) {
    const double v = c.p(x);
    EXPECT_GE(v, -1e-9);
    EXPECT_LE(v, 1 + 1e-9);
    if (x <= 1 + eps / 2) EXPECT_LE(v, eta);
    if (x >= 1 + eps) EXPECT_GE(v, 1 - eta);
  }
}

TEST(CountingUpper, MidpointInsideBand) {
  const double eps = 0.5, eta = 0.25;
  const double v = counting_poly_upper(eps, 3, eta).p(1 + 3 * eps / 4);
  EXPECT_GE(v, eta / 4);
  EXPECT_LE(v, 1 - eta / 4);
}

TEST(CountingUpper, DegreeLinearInM) {
  for (double M : {3.0, 4.5, 7.0})
    EXPECT_LE(counting_poly_upper(0.5, 2 * M, 0.25).degree_bound, 2 * counting_poly_upper(0.5, M, 0.25).degree_bound);
}

TEST(CountingUpper, RampApproximationWithinHalfEta) {
  const double eps = 0.5, eta = 0.25;
  const auto c = counting_poly_upper(eps, 3, eta);
  for (double x : grid(0, 3)) EXPECT_LE(std::abs(c.p1(x) - ramp_upper(x, eps)), eta / 2);
}

TEST(CountingUpper, ParameterRanges) {
  EXPECT_THROW(counting_poly_upper(0.0, 3, 0.25), ValidationError);
  EXPECT_THROW(counting_poly_upper(0.5, 2, 0.25), ValidationError);
  EXPECT_THROW(counting_poly_upper(0.5, 3, 0.5), ValidationError);
}

TEST(CountingLower, ReferenceParametersPassGrid) {
  const double eps = 0.5, M = 3, eta = 0.25;
  const auto r = counting_poly_lower(eps, M, eta);
  EXPECT_TRUE(r.check.pass);
  for (double x : grid(0, M, {1 - eps, 1 - eps / 2})) {
    const double v = r.p(x);
    EXPECT_GE(v, -1e-9);
    EXPECT_LE(v, 1 + 1e-9);
    if (x <= 1 - eps) EXPECT_GE(v, 1 - eta);
    if (x >= 1 - eps / 2) EXPECT_LE(v, eta);
  }
  EXPECT_GE(r.p(0), 1 - eta);
  EXPECT_LE(r.p(M), eta);
  for (double x : grid(0, 3)) EXPECT_LE(std::abs(r.p1(x) - ramp_lower(x, eps)), eta / 2);
}

TEST(MomBound, References) {
  EXPECT_EQ(mom_tail_bound(0.25, 0), 1.0);  // raw 2/√π ≈ 1.128 clamped
  EXPECT_NEAR(mom_tail_bound(0.2, 5), 0.064548378045272311, 1e-15);
  EXPECT_EQ(mom_tail_bound(0.0, 3), 0.0);
  EXPECT_THROW(mom_tail_bound(1.5, 1), ValidationError);
}

TEST(MomBound, NonincreasingInKBelowQuarter) {
  for (double p : {0.01, 0.1, 0.2, 0.24})
    for (std::uint64_t k = 0; k < 30; ++k) {
      const double a = mom_tail_bound(p, k), b = mom_tail_bound(p, k + 1);
      EXPECT_LE(b, a);
      if (a < 1.0 && b > 0.0) EXPECT_NEAR(b / a, 4 * p * std::sqrt((k + 0.25) / (k + 1.25)), 1e-12);
    }
}

TEST(MomExact, SmallCases) {
  EXPECT_NEAR(mom_exact_failure(0.2, 0), 0.4, 1e-15);  // 2p: either outer atom
  EXPECT_NEAR(mom_exact_failure(0.2, 5), 0.02330841088, 1e-10);
}

TEST(MomMonteCarlo, WithinBound) {
  const MomResult r = mom_monte_carlo(0.2, 5, 100000, 7);
  EXPECT_LE(r.rate, r.bound + (r.ci.hi - r.ci.lo) / 2);
  EXPECT_GE(r.exact, r.ci.lo);
  EXPECT_LE(r.exact, r.ci.hi);
}

TEST(MomMonteCarlo, VacuousAtHalf) {
  const MomResult r = mom_monte_carlo(0.5, 2, 2000, 1);
  EXPECT_EQ(r.bound, 1.0);
  EXPECT_LE(r.rate, 1.0);
}

TEST(MomMonteCarlo, KZeroMatchesExactEnumeration) {
  const MomResult r = mom_monte_carlo(0.2, 0, 20000, 3);
  EXPECT_GE(0.4, r.ci.lo);
  EXPECT_LE(0.4, r.ci.hi);
  EXPECT_LE(r.rate, r.bound);
}

TEST(MomMonteCarlo, DeterministicAndValidated) {
  EXPECT_EQ(mom_monte_carlo(0.1, 2, 1000, 5).failures, mom_monte_carlo(0.1, 2, 1000, 5).failures);
  EXPECT_THROW(mom_monte_carlo(0.1, 2, 999, 5), ValidationError);
}

TEST(Certify, AllUnitNormsPass) {
  const std::size_t k = 2;
  const double eta = 1.0 / (3 * (k + 1));
  const auto cert = certify_median_on_points(Matrix::Ones(2 * k + 1, 4), 0.5, 3, eta);
  EXPECT_TRUE(cert.pass);
  for (double P : cert.P) EXPECT_LE(P, (2 * k + 1) * eta);
}

TEST(Certify, MajorityAtUpperEdgeFailsWithWitness) {
  const std::size_t k = 2;
  const double eps = 0.5, eta = 1.0 / (3 * (k + 1));
  Matrix norms = Matrix::Ones(2 * k + 1, 3);
  for (std::size_t i = 0; i <= k; ++i) norms(static_cast<Eigen::Index>(i), 1) = 1 + eps;
  const auto cert = certify_median_on_points(norms, eps, 3, eta);
  EXPECT_FALSE(cert.pass);
  ASSERT_TRUE(cert.witness);
  EXPECT_EQ(*cert.witness, 1u);
}

TEST(Certify, SoundOnColumnsWithCentredMedian) {
  RandomStream rng(4);
  const std::size_t k = 3;
  const double eps = 0.4, eta = 1.0 / (3 * (k + 1));
  for (int t = 0; t < 50; ++t) {
    Matrix norms(2 * k + 1, 10);
    for (Eigen::Index i = 0; i < norms.size(); ++i) norms.data()[i] = 2.0 * rng.uniform();
    bool centred = true;
    for (Eigen::Index j = 0; j < norms.cols(); ++j) {
      std::vector<double> col(norms.col(j).data(), norms.col(j).data() + norms.rows());
      const double med = median_of(col);
      centred &= med >= 1 - eps / 2 && med <= 1 + eps / 2;
    }
    if (centred) EXPECT_TRUE(certify_median_on_points(norms, eps, 2, eta).pass);
  }
  // constructed case: medians exactly at the band edges
  Matrix edge(2 * k + 1, 2);
  for (Eigen::Index i = 0; i < edge.rows(); ++i) {
    edge(i, 0) = i < static_cast<Eigen::Index>(k) ? 0.0 : 1 + eps / 2;
    edge(i, 1) = i <= static_cast<Eigen::Index>(k) ? 1 - eps / 2 : 2.0;
  }
  EXPECT_TRUE(certify_median_on_points(edge, eps, 2, eta).pass);
}

TEST(Certify, GaussianCommitteeUsuallyPasses) {
  const std::size_t k = 1;
  const double eps = 0.4, eta = 1.0 / (3 * (k + 1));
  std::vector<DenseVector> pts;
  for (std::uint64_t i = 0; i < 20; ++i) {
    RandomStream rng(derive_seed(9, Role::points, i));
    std::vector<double> v(32);
    for (double& e : v) e = rng.gaussian();
    pts.push_back(normalize(DenseVector(v)));
  }
  int passes = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Matrix norms(2 * k + 1, 20);
    for (std::size_t i = 0; i < 2 * k + 1; ++i) {
      const auto op = make_gaussian(1000, 32, derive_seed(s, Role::member, i));
      for (std::size_t j = 0; j < 20; ++j)
        norms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = op.apply(pts[j]).norm_sq();
    }
    passes += certify_median_on_points(norms, eps, 3, eta).pass;
  }
  EXPECT_GE(passes, 190);
}

TEST(Certify, PreconditionsChecked) {
  EXPECT_THROW(certify_median_on_points(Matrix::Ones(3, 2), 0.5, 3, 0.2), ValidationError);  // η > 1/6
  EXPECT_THROW(certify_median_on_points(Matrix::Constant(3, 2, 4.0), 0.5, 3, 0.1), ValidationError);
  EXPECT_THROW(certify_median_on_points(Matrix::Ones(2, 2), 0.5, 3, 0.1), ValidationError);
}
