#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace varsketch {

/// Stream roles mixed into derived seeds so that independent pieces of
/// randomness drawn from one master seed never share a stream.
enum class Role : std::uint64_t {
  row = 1,
  signs = 2,
  sample = 3,
  member = 4,
  mode = 5,
  factor = 6,
  trial = 7,
  points = 8,
  op = 9,
  target = 10,
  single = 11,
  committee = 12,
  calibrate = 13,
  mom = 14,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Counter-style derivation: distinct (seed, role, index) triples map to
/// statistically independent 64-bit seeds.
std::uint64_t derive_seed(std::uint64_t seed, Role role,
                          std::uint64_t index = 0) noexcept;

/// xoshiro256++ seeded through splitmix64. Bit-reproducible on every
/// platform; the distribution helpers below do not depend on the standard
/// library's distribution implementations.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) noexcept;
  RandomStream(std::uint64_t seed, Role role, std::uint64_t index = 0) noexcept
      : RandomStream(derive_seed(seed, role, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal (polar Box-Muller, pairs cached).
  double gaussian() noexcept;
  /// +1 or -1 with equal probability.
  double rademacher() noexcept;
  /// Uniform integer in [0, bound), rejection-sampled (no modulo bias).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// m distinct indices from [0, n) in increasing order (Floyd's algorithm,
/// O(m log m) regardless of n). Requires m <= n.
std::vector<std::uint64_t> sample_without_replacement(RandomStream& rng,
                                                      std::uint64_t n,
                                                      std::uint64_t m);

}  // namespace varsketch
