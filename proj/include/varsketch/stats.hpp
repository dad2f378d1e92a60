#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace varsketch {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for a binomial proportion at two-sided level
/// `confidence` (e.g. 0.99).
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double confidence);

/// Standard normal quantile (Acklam's rational approximation refined by one
/// Halley step; |error| < 1e-12 on (0, 1)).
double normal_quantile(double p);

/// Pr(X ≥ x) for X ~ Binomial(n, 1/2), exact.
double binomial_upper_tail_half(std::uint64_t n, std::uint64_t x);

struct McNemarResult {
  std::uint64_t only_a = 0;  ///< trials where arm A failed and arm B did not
  std::uint64_t only_b = 0;
  double p_value = 1.0;      ///< one-sided, alternative: A fails more often than B
};

/// Exact one-sided McNemar test on paired binary outcomes.
McNemarResult mcnemar_one_sided(const std::vector<bool>& fail_a, const std::vector<bool>& fail_b);

/// Linear-interpolated sample quantile (type 7); q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace varsketch
