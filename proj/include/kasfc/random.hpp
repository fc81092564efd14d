#pragma once

#include <cstdint>
#include <random>

namespace kasfc {

/// mt19937_64 with a hand-rolled unit-interval draw, so sampled values are
/// identical across standard libraries (std::uniform_real_distribution is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }

  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

  bool coin() { return (engine_() >> 63) != 0; }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace kasfc
