#include "varsketch/calibrate.hpp"

#include "varsketch/errors.hpp"
#include "varsketch/parallel.hpp"
#include "varsketch/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace varsketch {

namespace {

constexpr std::size_t kBootstrap = 200;
constexpr double kLogWeight = 0.5;

struct Usable {
  std::vector<double> m, y, w;
};

Usable usable_points(const std::vector<CalibrationPoint>& pts) {
  Usable u;
  for (const auto& p : pts) {
    if (p.trials == 0) throw DegenerateFitError("grid point m = " + std::to_string(p.m) + " has zero trials");
    if (p.failures == 0 || p.failures >= p.trials) continue;
    const double f = static_cast<double>(p.failures) / static_cast<double>(p.trials);
    u.m.push_back(static_cast<double>(p.m));
    u.y.push_back(-std::log(f) - kLogWeight * std::log(static_cast<double>(p.m)));
    // inverse delta-method variance of −log f̂
    u.w.push_back(static_cast<double>(p.trials) * f / (1.0 - f));
  }
  return u;
}

// Weighted least squares over α; the intercept is free only when at least
// three points are available.
std::optional<PhiFunction::PowerLaw> profile_fit(const Usable& u) {
  const std::size_t n = u.m.size();
  if (n < 2) return std::nullopt;
  const bool with_intercept = n >= 3;
  double best_sse = std::numeric_limits<double>::infinity();
  std::optional<PhiFunction::PowerLaw> best;
  for (int step = 0; step <= 2950; ++step) {
    const double alpha = 0.05 + 0.001 * step;
    double sw = 0, sz = 0, sy = 0, szz = 0, szy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = std::pow(u.m[i], alpha);
      sw += u.w[i];
      sz += u.w[i] * z;
      sy += u.w[i] * u.y[i];
      szz += u.w[i] * z * z;
      szy += u.w[i] * z * u.y[i];
    }
    double b = 0.0, c = 0.0;
    if (with_intercept) {
      const double det = sw * szz - sz * sz;
      if (!(det > 0.0)) continue;
      c = (sw * szy - sz * sy) / det;
      b = (sy - c * sz) / sw;
    } else {
      c = szy / szz;
    }
    if (!(c > 0.0)) continue;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = u.y[i] - b - c * std::pow(u.m[i], alpha);
      sse += u.w[i] * r * r;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best = PhiFunction::PowerLaw{b, c, alpha, kLogWeight};
    }
  }
  return best;
}

// Bin(n, f) draw. Exact (geometric gaps between events of the rarer
// outcome) when the expected count of that outcome is at most 10⁴; above
// that a rounded normal draw, whose error is far below bootstrap noise.
std::uint64_t binomial(RandomStream& rng, std::uint64_t n, double f) {
  if (f <= 0.0) return 0;
  if (f >= 1.0) return n;
  const bool flip = f > 0.5;
  const double rare = flip ? 1.0 - f : f;
  const double N = static_cast<double>(n);
  if (N * rare > 1e4) {
    const double x = std::round(N * f + std::sqrt(N * f * (1.0 - f)) * rng.gaussian());
    return static_cast<std::uint64_t>(std::clamp(x, 0.0, N));
  }
  const double log_q = std::log1p(-rare);
  std::uint64_t hits = 0;
  double pos = 0.0;
  for (;;) {
    pos += std::floor(std::log(1.0 - rng.uniform()) / log_q) + 1.0;
    if (pos > static_cast<double>(n)) break;
    ++hits;
  }
  return flip ? n - hits : hits;
}

// Model value without the fixed log term (matches Usable::y).
double model(const PhiFunction::PowerLaw& f, double m) {
  return f.intercept + f.scale * std::pow(m, f.exponent);
}

}  // namespace

Point calibration_input(const OperatorSpec& spec) {
  const bool structured = spec.kind == SketchKind::khatri_rao || spec.kind == SketchKind::kronecker ||
                          spec.kind == SketchKind::kfjlt;
  if (structured) {
    std::vector<Matrix> factors;
    for (std::size_t n : spec.input_shape) factors.push_back(Matrix::Ones(static_cast<Eigen::Index>(n), 1));
    return normalize_cp(CPTensor(std::move(factors)));
  }
  const auto n = shape_size(spec.input_shape);
  return normalize(DenseVector(std::vector<double>(n, 1.0)));
}

CalibrationResult fit_calibration(std::vector<CalibrationPoint> points, std::uint64_t seed) {
  if (points.empty()) throw ValidationError("calibration grid must be nonempty");
  CalibrationResult r;
  const Usable u = usable_points(points);
  r.usable_points = u.m.size();
  if (u.m.size() < 2) {
    throw DegenerateFitError(
        "calibration needs at least two grid points with failure rate strictly between 0 and 1; got " +
        std::to_string(u.m.size()));
  }
  const auto fit = profile_fit(u);
  if (!fit) throw DegenerateFitError("no increasing power law fits the observed failure rates");
  r.fit = *fit;

  std::vector<double> resid(u.m.size());
  for (std::size_t i = 0; i < u.m.size(); ++i) resid[i] = u.y[i] - model(r.fit, u.m[i]);
  std::vector<double> sorted = resid;
  std::sort(sorted.begin(), sorted.end());
  const auto j = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(sorted.size())));
  r.conservative = r.fit;
  r.conservative.intercept += std::min(0.0, sorted[j]);
  std::size_t under = 0;
  for (std::size_t i = 0; i < u.m.size(); ++i) under += model(r.conservative, u.m[i]) <= u.y[i] + 1e-12;
  r.fraction_under = static_cast<double>(under) / static_cast<double>(u.m.size());

  std::vector<double> alphas(kBootstrap, std::numeric_limits<double>::quiet_NaN());
  parallel_for(kBootstrap, [&](std::size_t b) {
    RandomStream rng(seed, Role::calibrate, b);
    std::vector<CalibrationPoint> sim = points;
    for (auto& p : sim) {
      const double f = static_cast<double>(p.failures) / static_cast<double>(p.trials);
      p.failures = binomial(rng, p.trials, f);
    }
    const auto bf = profile_fit(usable_points(sim));
    if (bf) alphas[b] = bf->exponent;
  });
  std::erase_if(alphas, [](double a) { return std::isnan(a); });
  r.exponent_ci = alphas.size() >= 2 ? Interval{quantile(alphas, 0.025), quantile(alphas, 0.975)}
                                     : Interval{r.fit.exponent, r.fit.exponent};
  r.points = std::move(points);
  return r;
}

CalibrationResult calibrate_phi(const OperatorSpec& base, double eps, std::span<const std::size_t> m_grid,
                                std::uint64_t trials, std::uint64_t seed) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
  if (m_grid.empty()) throw ValidationError("calibration grid must be nonempty");
  if (trials < 1000) throw ValidationError("calibration needs at least 1000 trials per grid point");
  if (base.kind == SketchKind::kronecker || base.kind == SketchKind::identity)
    throw ValidationError("calibration needs a kind whose output dimension is a free parameter");

  const Point x = calibration_input(base);
  std::vector<CalibrationPoint> points;
  for (std::size_t g = 0; g < m_grid.size(); ++g) {
    OperatorSpec spec = base;
    spec.m = m_grid[g];
    const std::uint64_t grid_seed = derive_seed(seed, Role::calibrate, g);
    std::vector<unsigned char> failed(trials, 0);
    parallel_for(trials, [&](std::size_t t) {
      const SketchOperator op = make_operator(reseeded(spec, derive_seed(grid_seed, Role::trial, t)));
      const double v = apply(op, x).norm_sq();
      failed[t] = std::abs(v - 1.0) > eps ? 1 : 0;
    });
    CalibrationPoint p;
    p.m = m_grid[g];
    p.trials = trials;
    for (unsigned char f : failed) p.failures += f;
    p.rate = static_cast<double>(p.failures) / static_cast<double>(trials);
    p.ci = wilson_interval(p.failures, trials, 0.95);
    points.push_back(p);
  }
  CalibrationResult r = fit_calibration(std::move(points), derive_seed(seed, Role::calibrate, m_grid.size()));
  r.base = base;
  r.eps = eps;
  return r;
}

nlohmann::json calibration_to_json(const CalibrationResult& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"m", p.m}, {"failures", p.failures}, {"trials", p.trials}, {"rate", p.rate},
                   {"ci", {p.ci.lo, p.ci.hi}}});
  }
  auto law = [](const PhiFunction::PowerLaw& f) {
    return nlohmann::json{{"intercept", f.intercept}, {"log_weight", f.log_weight}, {"scale", f.scale},
                          {"exponent", f.exponent}};
  };
  return {{"operator", spec_to_json(r.base)},
          {"epsilon", r.eps},
          {"model", "-log f(m) = intercept + log_weight * log(m) + scale * m^exponent"},
          {"points", pts},
          {"fit", law(r.fit)},
          {"conservative_fit", law(r.conservative)},
          {"exponent_ci95", {r.exponent_ci.lo, r.exponent_ci.hi}},
          {"fraction_under", r.fraction_under},
          {"usable_points", r.usable_points}};
}

}  // namespace varsketch
