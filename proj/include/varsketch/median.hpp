#pragma once

// Committee-based median sketch. A committee holds 2k+1 independent
// operators; the sketch of x is the member output whose norm is the median
// of the member norms (ties resolved toward the smallest member index). The
// map is not linear but it is homogeneous: S̃(αx) = αS̃(x).

#include "varsketch/sketch.hpp"
#include "varsketch/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace varsketch {

/// A point to be sketched: dense or in CP form.
using Point = std::variant<DenseVector, CPTensor>;

/// Exact squared norm (Gram identity for CP points).
double norm_sq(const Point& x);
/// x − y in the representation of the operands (both dense or both CP).
Point difference(const Point& x, const Point& y);
/// Applies `op` through the factored path when available.
DenseVector apply(const SketchOperator& op, const Point& x);

/// Index of the median of an odd-length list; on ties, the smallest index
/// among entries equal to the median value.
std::size_t argmed(std::span<const double> values);

/// Seed of member i for a committee built from `master_seed`.
std::uint64_t member_seed(std::uint64_t master_seed, std::size_t i) noexcept;

class Committee {
 public:
  /// 2k+1 members with spec `base` reseeded from `master_seed`.
  Committee(const OperatorSpec& base, std::size_t k, std::uint64_t master_seed);
  /// Explicit members: odd count, identical kind/m/input shape, distinct seeds.
  explicit Committee(std::vector<SketchOperator> members);

  std::size_t k() const noexcept { return (members_.size() - 1) / 2; }
  std::size_t size() const noexcept { return members_.size(); }
  std::size_t output_dim() const noexcept { return members_.front().output_dim(); }
  const SketchOperator& member(std::size_t i) const { return members_.at(i); }
  const std::vector<SketchOperator>& members() const noexcept { return members_; }

 private:
  std::vector<SketchOperator> members_;
};

struct MedianSelection {
  std::size_t index;  ///< selected member
  DenseVector value;  ///< that member's output
};

MedianSelection median_sketch_select(const Committee& c, const Point& x);
DenseVector median_sketch(const Committee& c, const Point& x);

/// Sketch profiles y_{is} = S_s x_i, stored contiguously per point
/// ((2k+1)·m reals each).
class Profiles {
 public:
  Profiles(std::size_t points, std::size_t members, std::size_t m);

  std::size_t points() const noexcept { return points_; }
  std::size_t members() const noexcept { return members_; }
  std::size_t dim() const noexcept { return m_; }

  std::span<const double> point(std::size_t i) const;
  std::span<const double> member(std::size_t i, std::size_t s) const;
  std::span<double> member(std::size_t i, std::size_t s);

  /// One binary vector record per point.
  void save(const std::filesystem::path& path) const;
  static Profiles load(const std::filesystem::path& path, std::size_t members);

 private:
  std::size_t points_, members_, m_;
  std::vector<double> data_;
};

/// Sketch phase; parallel over points.
Profiles compute_profiles(const Committee& c, std::span<const Point> points);

/// Distance phase: d̂_ij = med_s ‖y_is − y_js‖, symmetric with zero diagonal.
/// O(k·m·P²), parallel over pairs.
Matrix pairwise_distances(const Profiles& profiles);

Matrix median_jlt_pairwise(const Committee& c, std::span<const Point> points);

/// |‖S̃(x)‖²/‖x‖² − 1| per point. Throws ValidationError on a zero point.
std::vector<double> distortion(const Committee& c, std::span<const Point> points);

}  // namespace varsketch
