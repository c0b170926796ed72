#ifndef QVS_BITSTRING_HPP
#define QVS_BITSTRING_HPP

#include <bit>
#include <cstdint>

#include "qvs/error.hpp"

namespace qvs {

// Binary latent code of width <= 64, packed into one word. Bit i is the i-th
// latent dimension; unused high bits stay zero.
struct BitString {
  std::uint64_t bits = 0;
  std::uint32_t width = 0;

  BitString() = default;
  BitString(std::uint64_t b, std::uint32_t w) : bits(b), width(w) {
    QVS_REQUIRE(w <= 64, "BitString width exceeds 64");
    if (w < 64) QVS_REQUIRE((b >> w) == 0, "BitString has bits above its width");
  }

  bool get(std::uint32_t i) const { return (bits >> i) & 1ull; }

  void set(std::uint32_t i, bool v) {
    const std::uint64_t mask = 1ull << i;
    bits = v ? (bits | mask) : (bits & ~mask);
  }

  bool operator==(const BitString& o) const = default;
};

inline std::uint32_t hamming_distance(const BitString& a, const BitString& b) {
  QVS_REQUIRE(a.width == b.width, "hamming_distance: width mismatch");
  return static_cast<std::uint32_t>(std::popcount(a.bits ^ b.bits));
}

}  // namespace qvs

#endif
