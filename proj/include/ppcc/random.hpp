#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ppcc {

// Counter-based generator: every draw is a pure function of (seed, stream, counter),
// so noise sequences do not depend on evaluation order or platform.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  static constexpr std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix(mix(mix(seed_) ^ stream_) ^ counter);
  }

  // Uniform on (0, 1): 53 random bits, offset by half an ulp so 0 is never returned.
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; draw k consumes counters 2k and 2k+1.
  double gaussian(std::uint64_t k) const {
    const double u1 = uniform(2 * k);
    const double u2 = uniform(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace ppcc
