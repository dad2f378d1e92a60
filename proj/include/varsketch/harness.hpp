#pragma once

// Reproducible experiments over sampled point sets. Every random draw is a
// function of the master seed: points from (seed, points, i), per-trial
// operators from (seed, trial, t). Reports are JSON; everything that may
// differ between identical runs (timings, wall clock) lives in the
// "provenance" block.
//
// Distortions are measured on a finite sample of the set being sketched,
// not over the whole set; reports label them "sampled distortion".

#include "varsketch/median.hpp"
#include "varsketch/sketch.hpp"
#include "varsketch/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace varsketch {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

enum class PointFamily { random_unit_cp, cp_differences, fixed_target_residuals };

std::string_view to_string(PointFamily f) noexcept;
PointFamily parse_family(std::string_view name);

struct ExperimentConfig {
  Shape mode_lengths{8, 8, 8};
  std::size_t rank = 1;
  std::size_t points = 10;
  PointFamily family = PointFamily::random_unit_cp;
  Distribution factor_distribution = Distribution::gaussian;
  /// Draw a fresh point set per trial instead of one shared set.
  bool resample_points = false;
  /// Operator (single arm) or committee member spec. For compare this is
  /// the member spec with m = m₀.
  OperatorSpec op;
  std::size_t k = 0;
  double eps = 0.5;
  std::uint64_t trials = 100;
  std::uint64_t seed = 0;
  std::optional<std::string> report_path;
  std::optional<std::string> csv_path;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws ValidationError on schema or shape problems. A missing operator
/// "input_shape" is filled in from the problem.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
void validate(const ExperimentConfig& c);

/// FNV-1a of the canonical config JSON.
std::uint64_t config_hash(const ExperimentConfig& c);

/// Point set for trial t (t is ignored unless resample_points is set).
std::vector<Point> sample_points(const ExperimentConfig& c, std::uint64_t trial = 0);

/// Committee used in trial t (the pairwise experiment uses trial 0).
Committee trial_committee(const ExperimentConfig& c, std::uint64_t trial);

struct DistortionReport {
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  double failure_rate = 0.0;
  Interval failure_ci;                  ///< 95% Wilson
  std::vector<double> max_distortion;   ///< per trial
  std::vector<double> median_distortion;
  std::vector<bool> failed;             ///< max distortion > ε
  double q50 = 0, q90 = 0, q99 = 0, q_max = 0;  ///< quantiles of max_distortion
  std::optional<double> factored_seconds;  ///< one committee sketch phase, factored path
  std::optional<double> dense_seconds;     ///< same, materialize then dense
};

DistortionReport run_distortion(const ExperimentConfig& c);

struct CompareReport {
  std::uint64_t trials = 0;
  std::size_t m0 = 0;
  std::size_t committee_size = 1;
  std::uint64_t single_failures = 0, committee_failures = 0;
  Interval single_ci, committee_ci;  ///< 95% Wilson
  McNemarResult mcnemar;             ///< alternative: single fails more often
  std::vector<bool> single_failed, committee_failed;
};

/// Single operator of dimension m₀(2k+1) against a committee of 2k+1
/// operators of dimension m₀, on the same points in each trial. With k = 0
/// the single arm reuses member 0's seed, so both arms coincide.
CompareReport run_committee_compare(const ExperimentConfig& c);

struct PairwiseReport {
  Matrix estimated;
  std::optional<Matrix> exact;
  std::optional<double> max_relative_error;  ///< over pairs with nonzero exact distance
};

PairwiseReport run_pairwise(const ExperimentConfig& c);
/// Header row "id,p0,p1,..." then one row per point.
std::string distance_csv(const Matrix& d);

nlohmann::json provenance(const ExperimentConfig& c);
nlohmann::json report_to_json(const ExperimentConfig& c, const DistortionReport& r);
nlohmann::json report_to_json(const ExperimentConfig& c, const CompareReport& r);
nlohmann::json report_to_json(const ExperimentConfig& c, const PairwiseReport& r);
std::string report_to_csv(const DistortionReport& r);
std::string report_to_csv(const CompareReport& r);

}  // namespace varsketch
