#include "varsketch/wht.hpp"

#include <stdexcept>

namespace varsketch {

std::uint64_t next_pow2(std::uint64_t n) noexcept {
  std::uint64_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fwht(std::span<double> data) {
  const std::size_t len = data.size();
  if (len == 0 || (len & (len - 1)) != 0)
    throw std::invalid_argument("fwht length must be a power of two");
  for (std::size_t h = 1; h < len; h *= 2) {
    for (std::size_t i = 0; i < len; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double x = data[j];
        const double y = data[j + h];
        data[j] = x + y;
        data[j + h] = x - y;
      }
    }
  }
}

void fwht_strided(double* data, std::size_t len, std::size_t stride) {
  if (len == 0 || (len & (len - 1)) != 0)
    throw std::invalid_argument("fwht length must be a power of two");
  for (std::size_t h = 1; h < len; h *= 2) {
    for (std::size_t i = 0; i < len; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        double* a = data + j * stride;
        double* b = data + (j + h) * stride;
        for (std::size_t q = 0; q < stride; ++q) {
          const double x = a[q];
          const double y = b[q];
          a[q] = x + y;
          b[q] = x - y;
        }
      }
    }
  }
}

}  // namespace varsketch
