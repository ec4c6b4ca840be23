#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "patsnd/errors.hpp"

namespace patsnd {

// Seeded random source with hand-rolled distributions. mt19937_64 output is
// fixed by the standard, and the conversions below avoid the
// implementation-defined std::*_distribution algorithms, so sequences are
// reproducible across compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform in {0, ..., n-1}, unbiased via rejection.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw InvalidInputError("uniform_index: n must be positive");
    const std::uint64_t un = n;
    const std::uint64_t bound = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x = next_u64();
    while (x >= bound) x = next_u64();
    return static_cast<std::size_t>(x % un);
  }

  bool coin() { return (next_u64() >> 63) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace patsnd
