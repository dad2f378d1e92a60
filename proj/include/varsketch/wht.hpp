#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace varsketch {

std::uint64_t next_pow2(std::uint64_t n) noexcept;

/// In-place unnormalized Walsh-Hadamard transform (H·Hᵀ = len·I).
/// len must be a power of two.
void fwht(std::span<double> data);

/// Same transform applied to `stride` interleaved sequences: element t of
/// sequence q lives at data[t * stride + q]. Used for mode-wise mixing of a
/// row-major tensor without gathering fibers.
void fwht_strided(double* data, std::size_t len, std::size_t stride);

}  // namespace varsketch
