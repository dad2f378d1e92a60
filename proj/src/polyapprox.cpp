#include "varsketch/polyapprox.hpp"

#include "varsketch/errors.hpp"
#include "varsketch/parallel.hpp"
#include "varsketch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace varsketch {

namespace {

constexpr double kTol = 1e-9;

double relu(double x) { return x > 0.0 ? x : 0.0; }

void check_params(double eps, double hi, double eta) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
  if (!(eta > 0.0 && eta < 0.5)) throw ValidationError("eta must lie in (0, 1/2)");
  if (!(hi >= 1.0 + eps)) throw ValidationError("interval must contain the transition band");
}

std::size_t counting_degree(double eps, double hi, double eta) {
  return static_cast<std::size_t>(std::ceil(kCountingConstant * hi / (eps * eta) - 1e-12));
}

// relu(x − s) on [0, hi] through the [−1, 1] approximation q:
// with u = 2x/hi − 1, x − s = (hi/2)(u − u_s) and u − u_s ∈ [−2, 2], so
// relu(x − s) = hi·relu((u − u_s)/2).
double shifted_relu(const ChebyshevPoly& q, double x, double s, double hi) {
  const double u = 2.0 * x / hi - 1.0;
  const double us = 2.0 * s / hi - 1.0;
  return hi * q((u - us) / 2.0);
}

std::vector<double> grid_points(double hi, std::size_t grid, std::initializer_list<double> breaks) {
  std::vector<double> xs;
  xs.reserve(grid + breaks.size());
  for (std::size_t i = 0; i < grid; ++i) xs.push_back(hi * static_cast<double>(i) / static_cast<double>(grid - 1));
  for (double b : breaks) xs.push_back(b);
  std::sort(xs.begin(), xs.end());
  return xs;
}

// small_band / large_band: closed intervals where p must be ≤ η / ≥ 1 − η.
GridCheck verify(const ChebyshevPoly& p, double eta, const std::vector<double>& xs,
                 std::pair<double, double> small_band, std::pair<double, double> large_band) {
  GridCheck c;
  double worst = 0.0;
  auto note = [&](double v, double x) {
    if (v > worst) {
      worst = v;
      c.witness = x;
    }
  };
  for (double x : xs) {
    const double v = p(x);
    const double range = std::max(-v, v - 1.0);
    c.range_violation = std::max(c.range_violation, range);
    note(range - kTol, x);
    if (x >= small_band.first && x <= small_band.second) {
      c.low_violation = std::max(c.low_violation, v - eta);
      note(v - eta, x);
    }
    if (x >= large_band.first && x <= large_band.second) {
      c.high_violation = std::max(c.high_violation, (1.0 - eta) - v);
      note((1.0 - eta) - v, x);
    }
  }
  c.pass = c.range_violation <= kTol && c.low_violation <= 0.0 && c.high_violation <= 0.0;
  return c;
}

CountingPoly build_counting(bool upper, double eps, double hi, double eta, std::size_t grid) {
  check_params(eps, hi, eta);
  if (grid < 2) throw ValidationError("grid needs at least two points");
  CountingPoly out;
  out.eps = eps;
  out.M = hi;
  out.eta = eta;
  out.degree_bound = counting_degree(eps, hi, eta);
  const ChebyshevPoly q = relu_approx(std::max<std::size_t>(2, out.degree_bound));

  const double s1 = upper ? 1.0 + eps / 2.0 : 1.0 - eps;
  const double s2 = upper ? 1.0 + eps : 1.0 - eps / 2.0;
  auto ramp = [&](double x) {
    const double diff = (2.0 / eps) * (shifted_relu(q, x, s1, hi) - shifted_relu(q, x, s2, hi));
    return upper ? diff : 1.0 - diff;
  };
  out.p1 = ChebyshevPoly::interpolate(ramp, out.degree_bound, 0.0, hi);
  out.p = out.p1;
  for (double& c : out.p.coeffs) c *= (1.0 - eta);
  out.p.coeffs[0] += eta / 2.0;

  const auto xs = grid_points(hi, grid, {0.0, 1.0 - eps, 1.0 - eps / 2.0, 1.0 + eps / 2.0, 1.0 + eps, hi});
  out.check = upper ? verify(out.p, eta, xs, {0.0, 1.0 + eps / 2.0}, {1.0 + eps, hi})
                    : verify(out.p, eta, xs, {1.0 - eps / 2.0, hi}, {0.0, 1.0 - eps});
  if (!out.check.pass) {
    std::ostringstream msg;
    msg << "counting polynomial fails grid verification at x = " << out.check.witness;
    throw CertificationError(msg.str(), out.check.witness);
  }
  return out;
}

}  // namespace

double ChebyshevPoly::operator()(double x) const noexcept {
  if (coeffs.empty()) return 0.0;
  const double t = (2.0 * x - lo - hi) / (hi - lo);
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = coeffs.size() - 1; k >= 1; --k) {
    const double b0 = coeffs[k] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return coeffs[0] + t * b1 - b2;
}

ChebyshevPoly ChebyshevPoly::interpolate(const std::function<double(double)>& f, std::size_t degree,
                                         double lo, double hi) {
  if (!(hi > lo)) throw ValidationError("interpolation interval must have hi > lo");
  const std::size_t n = degree + 1;
  std::vector<double> theta(n), fx(n);
  for (std::size_t i = 0; i < n; ++i) {
    theta[i] = std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    fx[i] = f(lo + (hi - lo) * (std::cos(theta[i]) + 1.0) / 2.0);
  }
  ChebyshevPoly p{lo, hi, std::vector<double>(n, 0.0)};
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += fx[i] * std::cos(static_cast<double>(k) * theta[i]);
    p.coeffs[k] = (k == 0 ? 1.0 : 2.0) * s / static_cast<double>(n);
  }
  return p;
}

ChebyshevPoly relu_approx(std::size_t degree) {
  if (degree < 2) throw ValidationError("relu_approx needs degree >= 2");
  ChebyshevPoly p{-1.0, 1.0, std::vector<double>(degree + 1, 0.0)};
  p.coeffs[0] = 1.0 / std::numbers::pi;
  p.coeffs[1] = 0.5;
  for (std::size_t j = 2; j <= degree; j += 2) {
    const double k = static_cast<double>(j / 2);
    const double sign = (j / 2) % 2 == 1 ? 1.0 : -1.0;
    p.coeffs[j] = sign * 2.0 / (std::numbers::pi * (4.0 * k * k - 1.0));
  }
  return p;
}

double ramp_upper(double x, double eps) {
  return (2.0 / eps) * (relu(x - (1.0 + eps / 2.0)) - relu(x - (1.0 + eps)));
}

double ramp_lower(double x, double eps) {
  return 1.0 - (2.0 / eps) * (relu(x - (1.0 - eps)) - relu(x - (1.0 - eps / 2.0)));
}

CountingPoly counting_poly_upper(double eps, double M, double eta, std::size_t grid) {
  if (!(M >= 3.0)) throw ValidationError("M must be at least 3");
  return build_counting(true, eps, M, eta, grid);
}

CountingPoly counting_poly_lower(double eps, double M, double eta, std::size_t grid) {
  if (!(M >= 3.0)) throw ValidationError("M must be at least 3");
  return build_counting(false, eps, M, eta, grid);
}

double mom_tail_bound(double p, std::uint64_t k) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0, 1]");
  if (p == 0.0) return 0.0;
  const double kk = static_cast<double>(k);
  const double log_b = (kk + 1.0) * std::log(4.0 * p) - 0.5 * std::log(std::numbers::pi * (kk + 0.25));
  return std::clamp(std::exp(log_b), 0.0, 1.0);
}

double mom_exact_failure(double p, std::uint64_t k) {
  if (!(p >= 0.0 && p <= 0.5)) throw ValidationError("p must lie in [0, 1/2]");
  if (p == 0.0) return 0.0;
  // Pr(Binomial(2k+1, p) ≥ k+1), once per side; the two sides are disjoint.
  const std::uint64_t n = 2 * k + 1;
  double tail = 0.0;
  for (std::uint64_t i = k + 1; i <= n; ++i) {
    const double lc = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
    tail += std::exp(lc + static_cast<double>(i) * std::log(p) + static_cast<double>(n - i) * std::log1p(-p));
  }
  return std::min(1.0, 2.0 * tail);
}

MomResult mom_monte_carlo(double p, std::uint64_t k, std::uint64_t trials, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 0.5)) throw ValidationError("p must lie in [0, 1/2]");
  if (trials < 1000) throw ValidationError("mom_monte_carlo needs at least 1000 trials");
  const std::uint64_t n = 2 * k + 1;
  std::vector<unsigned char> failed(trials, 0);
  parallel_for(trials, [&](std::size_t t) {
    RandomStream rng(seed, Role::mom, t);
    std::uint64_t low = 0, high = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double u = rng.uniform();
      if (u < p)
        ++low;
      else if (u >= 1.0 - p)
        ++high;
    }
    failed[t] = (low >= k + 1 || high >= k + 1) ? 1 : 0;
  });
  MomResult r;
  r.trials = trials;
  for (unsigned char f : failed) r.failures += f;
  r.rate = static_cast<double>(r.failures) / static_cast<double>(trials);
  r.ci = wilson_interval(r.failures, trials, 0.99);
  r.bound = mom_tail_bound(p, k);
  r.exact = mom_exact_failure(p, k);
  return r;
}

MedianCertificate certify_median_on_points(const Matrix& norms, double eps, double M, double eta) {
  if (norms.rows() == 0 || norms.rows() % 2 == 0) throw ValidationError("committee size must be odd");
  const auto k = static_cast<std::size_t>(norms.rows() - 1) / 2;
  if (!(eta > 0.0 && eta <= 1.0 / (3.0 * static_cast<double>(k + 1))))
    throw ValidationError("eta must lie in (0, 1/(3(k+1))]");
  if (!(M > 0.0)) throw ValidationError("M must be positive");
  if (norms.size() > 0 && (norms.minCoeff() < 0.0 || norms.maxCoeff() > M))
    throw ValidationError("committee norms must lie in [0, M]");

  const double hi = 2.0 * M;
  const CountingPoly up = build_counting(true, eps, hi, eta, kDefaultGrid);
  const CountingPoly lo = build_counting(false, eps, hi, eta, kDefaultGrid);

  MedianCertificate cert;
  cert.threshold = static_cast<double>(k + 1) * eta + static_cast<double>(k);
  cert.degree = up.p.degree();
  cert.P.assign(static_cast<std::size_t>(norms.cols()), 0.0);
  cert.R.assign(static_cast<std::size_t>(norms.cols()), 0.0);
  for (Eigen::Index j = 0; j < norms.cols(); ++j) {
    for (Eigen::Index i = 0; i < norms.rows(); ++i) {
      cert.P[j] += up.p(norms(i, j));
      cert.R[j] += lo.p(norms(i, j));
    }
    if (!cert.witness && (cert.P[j] > cert.threshold || cert.R[j] > cert.threshold))
      cert.witness = static_cast<std::size_t>(j);
  }
  cert.pass = !cert.witness.has_value();
  return cert;
}

}  // namespace varsketch
