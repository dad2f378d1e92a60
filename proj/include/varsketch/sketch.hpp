#pragma once

// Random sketch operators S: R^N -> R^m with a dense path (flat input in the
// library flattening order) and, for tensor-structured kinds, a factored
// path that consumes a CPTensor without forming an N-length vector.
//
// Every operator is a deterministic function of its OperatorSpec. Operators
// are immutable values (shared realized state) and safe to use from many
// threads at once.
//
// Scaling is fixed so that E‖Sx‖² = ‖x‖² for every kind.
//
// Cost of the factored path (d modes, lengths n_j, rank r, output m):
//   khatri_rao  O(m · r · Σ n_j)
//   kronecker   O(Σ_j cost(S_j) · r + r · ∏ m_j)
//   kfjlt       O(r · Σ n_j,pad log n_j,pad + m · r · d)
// Dense kinds (gaussian, rademacher, fjlt, identity) fall back to
// materialize-then-apply, subject to the materialization cap.

#include "varsketch/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace varsketch {

enum class SketchKind { gaussian, rademacher, fjlt, khatri_rao, kronecker, kfjlt, identity };

std::string_view to_string(SketchKind kind) noexcept;
SketchKind parse_kind(std::string_view name);
std::string_view to_string(Distribution dist) noexcept;
Distribution parse_distribution(std::string_view name);

/// Everything needed to rebuild an operator. Realized randomness is never
/// stored; it is regenerated from `seed`.
struct OperatorSpec {
  SketchKind kind = SketchKind::gaussian;
  std::size_t m = 1;
  /// Flat kinds use a single entry {N}; structured kinds list mode lengths.
  /// For kronecker this is derived from `modes`.
  Shape input_shape;
  std::uint64_t seed = 0;
  /// Row entry law for khatri_rao.
  Distribution row_distribution = Distribution::gaussian;
  /// Per-mode sub-operators for kronecker. Their seeds are part of the spec.
  std::vector<OperatorSpec> modes;

  friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;
};

/// Copy of `spec` with a new seed; kronecker mode seeds are re-derived from it.
OperatorSpec reseeded(OperatorSpec spec, std::uint64_t seed);

nlohmann::json spec_to_json(const OperatorSpec& spec);
/// Mode sub-specs without a "seed" field get seeds derived from the parent.
OperatorSpec spec_from_json(const nlohmann::json& j);

namespace detail {
class OperatorImpl;
}

class SketchOperator {
 public:
  SketchKind kind() const noexcept;
  std::size_t output_dim() const noexcept;
  const Shape& input_shape() const noexcept;
  /// N = ∏ input_shape.
  std::uint64_t input_size() const noexcept;
  std::uint64_t seed() const noexcept;
  const OperatorSpec& spec() const noexcept;
  /// True when apply(CPTensor) avoids materializing the input.
  bool has_factored_path() const noexcept;

  DenseVector apply(std::span<const double> x) const;
  DenseVector apply(const DenseVector& x) const { return apply(x.values()); }
  DenseVector apply(const CPTensor& t,
                    std::uint64_t cap = kDefaultMaterializationCap) const;

  /// Explicit m × N matrix obtained by applying the operator to basis
  /// vectors. Test-scale only.
  Matrix to_matrix() const;

 private:
  explicit SketchOperator(std::shared_ptr<const detail::OperatorImpl> impl);
  std::shared_ptr<const detail::OperatorImpl> impl_;

  friend SketchOperator make_operator(const OperatorSpec& spec);
  friend SketchOperator make_kronecker(std::vector<SketchOperator> mode_ops);
};

/// Dense i.i.d. N(0, 1/m) entries.
SketchOperator make_gaussian(std::size_t m, std::size_t n, std::uint64_t seed);
/// Dense i.i.d. ±m^{-1/2} entries.
SketchOperator make_rademacher(std::size_t m, std::size_t n, std::uint64_t seed);
/// √(N_pad/m)·P·H·D on the zero-padded input, H the orthonormal WHT.
SketchOperator make_fjlt(std::size_t m, std::size_t n, std::uint64_t seed);
/// Rows m^{-1/2}(a_1 ⊗ ... ⊗ a_d)ᵀ with i.i.d. mode vectors.
SketchOperator make_khatri_rao(std::size_t m, const Shape& mode_lengths,
                               Distribution row_distribution, std::uint64_t seed);
/// S_1 ⊗ ... ⊗ S_d; each mode operator must have a flat input.
SketchOperator make_kronecker(std::vector<SketchOperator> mode_ops);
/// √(N_pad/m)·P·(H_1D_1 ⊗ ... ⊗ H_dD_d) with per-mode zero padding.
SketchOperator make_kfjlt(std::size_t m, const Shape& mode_lengths, std::uint64_t seed);
/// y = x. Useful as a zero-distortion reference.
SketchOperator make_identity(std::size_t n, std::uint64_t seed = 0);

SketchOperator make_operator(const OperatorSpec& spec);

}  // namespace varsketch
