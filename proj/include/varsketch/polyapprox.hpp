#pragma once

// Polynomial certificates for the median sketch: Chebyshev approximations of
// ReLU, counting polynomials that switch from ~0 to ~1 across a transition
// band, the median-of-means tail bound and a finite-point certificate check.

#include "varsketch/stats.hpp"
#include "varsketch/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace varsketch {

/// Polynomial in the Chebyshev basis on [lo, hi]: Σ_k coeffs[k]·T_k(t) with
/// t = (2x − lo − hi)/(hi − lo). Evaluated by Clenshaw's recurrence.
struct ChebyshevPoly {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<double> coeffs;

  std::size_t degree() const noexcept { return coeffs.empty() ? 0 : coeffs.size() - 1; }
  double operator()(double x) const noexcept;

  /// Interpolant of f at the degree+1 Chebyshev points of the first kind.
  /// Exact (to rounding) when f is itself a polynomial of that degree.
  static ChebyshevPoly interpolate(const std::function<double(double)>& f, std::size_t degree,
                                   double lo, double hi);
};

/// Chebyshev projection of relu on [−1, 1], truncated at `degree` (≥ 2).
/// Sup error is 1/(π(d+1)) for even d and 1/(πd) for odd d, attained at 0.
ChebyshevPoly relu_approx(std::size_t degree);

/// Documented constant of relu_approx: sup error ≤ kReluConstant / degree.
inline constexpr double kReluConstant = 0.31830988618379067;  // 1/π

/// Degree constant of the counting polynomials: degree = ⌈c·M/(εη)⌉.
inline constexpr double kCountingConstant = 2.5464790894703255;  // 8/π

inline constexpr std::size_t kDefaultGrid = 10000;

struct GridCheck {
  double range_violation = 0.0;  ///< worst excursion outside [0, 1]
  double low_violation = 0.0;    ///< worst excess over η where p should be small
  double high_violation = 0.0;   ///< worst shortfall below 1 − η where p should be large
  double witness = 0.0;          ///< grid point of the worst violation overall
  bool pass = false;
};

struct CountingPoly {
  ChebyshevPoly p;        ///< (1 − η)·p1 + η/2
  ChebyshevPoly p1;       ///< approximation of the piecewise-linear ramp
  double eps = 0.0, M = 0.0, eta = 0.0;
  std::size_t degree_bound = 0;  ///< ⌈kCountingConstant·M/(εη)⌉
  GridCheck check;
};

/// Polynomial on [0, M] that is ≤ η on [0, 1+ε/2] and ≥ 1−η on [1+ε, M],
/// with values in [0, 1]. Requires ε ∈ (0,1), M ≥ 3, η ∈ (0, 1/2). Throws
/// CertificationError carrying the violating grid point if the grid check
/// fails.
CountingPoly counting_poly_upper(double eps, double M, double eta, std::size_t grid = kDefaultGrid);

/// Mirror image: ≥ 1−η on [0, 1−ε] and ≤ η on [1−ε/2, M].
CountingPoly counting_poly_lower(double eps, double M, double eta, std::size_t grid = kDefaultGrid);

/// Exact piecewise-linear ramps the counting polynomials approximate.
double ramp_upper(double x, double eps);
double ramp_lower(double x, double eps);

/// (4p)^{k+1}/√(π(k + 1/4)), clamped to [0, 1].
double mom_tail_bound(double p, std::uint64_t k);

/// Exact failure probability of the median of 2k+1 draws from the
/// three-atom law {a−1, (a+b)/2, b+1} with masses {p, 1−2p, p}.
double mom_exact_failure(double p, std::uint64_t k);

struct MomResult {
  std::uint64_t failures = 0;
  std::uint64_t trials = 0;
  double rate = 0.0;
  Interval ci;          ///< 99% Wilson interval
  double bound = 0.0;   ///< mom_tail_bound(p, k)
  double exact = 0.0;   ///< mom_exact_failure(p, k)
};

/// Monte Carlo estimate of Pr(median ∉ [a, b]) under the three-atom law.
/// Requires p ∈ [0, 1/2] and trials ≥ 1000.
MomResult mom_monte_carlo(double p, std::uint64_t k, std::uint64_t trials, std::uint64_t seed);

struct MedianCertificate {
  bool pass = false;
  std::optional<std::size_t> witness;  ///< first failing column
  std::vector<double> P, R;            ///< Σ_i p(‖S_i x‖²), Σ_i r(‖S_i x‖²) per column
  double threshold = 0.0;              ///< (k+1)η + k
  std::size_t degree = 0;
};

/// Evaluates the counting sums of the (2k+1)×|Q| matrix of squared member
/// norms with polynomials built on [0, 2M]. Requires η ≤ 1/(3(k+1)) and all
/// entries in [0, M].
MedianCertificate certify_median_on_points(const Matrix& committee_norms, double eps, double M,
                                           double eta);

}  // namespace varsketch
