#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace crashrepro {

// Seedable generator with platform-independent draws. The engine is
// std::mt19937_64, whose output sequence the standard fixes; the standard
// distributions are not portable, so the draws below are defined here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n); n must be positive. Rejection sampling, no modulo bias.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t x = engine_();
      if (x >= threshold) return static_cast<std::size_t>(x % bound);
    }
  }

  // Uniform in [lo, hi], inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(index(static_cast<std::size_t>(hi - lo) + 1));
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crashrepro
