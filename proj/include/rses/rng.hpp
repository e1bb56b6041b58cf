#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace rses {

// Seedable random stream with a documented splitting rule: stream (seed, index)
// feeds splitmix64(seed + GOLDEN * (index + 1)) into a mt19937_64. Streams with
// distinct indices are independent for simulation purposes, and a fixed
// (seed, index) pair reproduces the same variate sequence on every platform.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t index) : gen_(mix(seed + kGolden * (index + 1))) {}

  // Uniform draw strictly inside (0,1): 53-bit mantissa shifted off zero.
  double uniform01() {
    const std::uint64_t bits = gen_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  double exponential(double rate) { return -std::log(uniform01()) / rate; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::mt19937_64 gen_;
};

}  // namespace rses
