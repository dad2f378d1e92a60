#pragma once

// CP-format and dense tensor representations.
//
// Flattening convention (shared by every operator in the library): the
// multi-index (i_1, ..., i_d) maps to the flat offset with the LAST mode
// varying fastest, i.e. row-major / lexicographic order.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace varsketch {

using Matrix = Eigen::MatrixXd;
using Shape = std::vector<std::size_t>;

inline constexpr std::uint64_t kDefaultMaterializationCap = std::uint64_t{1} << 24;

enum class Distribution { gaussian, rademacher };

/// Product of mode lengths, saturating at UINT64_MAX instead of wrapping.
std::uint64_t shape_size(const Shape& shape) noexcept;

/// Decodes a flat offset into per-mode indices (last mode fastest).
void unflatten(std::uint64_t flat, const Shape& shape, std::span<std::size_t> out);

/// A real vector of positive length.
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::vector<double> entries);
  static DenseVector zeros(std::size_t n);

  std::size_t size() const noexcept { return entries_.size(); }
  std::span<const double> values() const noexcept { return entries_; }
  std::span<double> values() noexcept { return entries_; }
  const std::vector<double>& entries() const noexcept { return entries_; }
  double operator[](std::size_t i) const { return entries_[i]; }
  double& operator[](std::size_t i) { return entries_[i]; }

  double norm_sq() const noexcept;
  double norm() const noexcept;

  friend bool operator==(const DenseVector&, const DenseVector&) = default;

 private:
  std::vector<double> entries_;
};

DenseVector operator-(const DenseVector& a, const DenseVector& b);
DenseVector operator*(double alpha, const DenseVector& v);

/// Rank-r canonical polyadic tensor: sum over i of a_1^(i) ⊗ ... ⊗ a_d^(i),
/// where a_j^(i) is column i of factor j (shape n_j × r). Rank 0 encodes the
/// zero tensor.
class CPTensor {
 public:
  explicit CPTensor(std::vector<Matrix> factors);
  /// Rank-0 tensor of the given shape.
  static CPTensor zero(const Shape& mode_lengths);

  std::size_t order() const noexcept { return factors_.size(); }
  std::size_t rank() const noexcept {
    return static_cast<std::size_t>(factors_.front().cols());
  }
  Shape mode_lengths() const;
  /// Ambient dimension N = ∏ n_j (saturating).
  std::uint64_t dimension() const noexcept;
  const Matrix& factor(std::size_t j) const { return factors_.at(j); }
  const std::vector<Matrix>& factors() const noexcept { return factors_; }

  friend bool operator==(const CPTensor& a, const CPTensor& b);

 private:
  std::vector<Matrix> factors_;
};

/// Dense expansion in the library-wide flattening order.
/// Throws CapExceededError when N exceeds `cap`.
DenseVector materialize(const CPTensor& t,
                        std::uint64_t cap = kDefaultMaterializationCap);

/// ⟨x, y⟩ through the Gram identity Σ_{i,i'} ∏_j (X_jᵀ Y_j)[i, i'];
/// O(d·n·r_x·r_y), never touches N-length data.
double cp_inner(const CPTensor& x, const CPTensor& y);

/// ‖t‖² via the Gram identity.
double cp_norm_sq(const CPTensor& t);

/// x − y as a CP tensor of rank r_x + r_y; y's columns are negated on the
/// first mode only.
CPTensor cp_difference(const CPTensor& x, const CPTensor& y);

/// Factor entries drawn i.i.d. from `dist`, one stream per factor matrix.
CPTensor random_cp(const Shape& mode_lengths, std::size_t rank,
                   Distribution dist, std::uint64_t seed);

/// v / ‖v‖. Throws ValidationError for the zero vector.
DenseVector normalize(const DenseVector& v);

/// Rescales the first factor so that cp_norm_sq equals 1.
CPTensor normalize_cp(const CPTensor& t);

}  // namespace varsketch
