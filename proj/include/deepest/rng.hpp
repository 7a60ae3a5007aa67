#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace deepest {

/// Portable seeded generator. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the derived draws below avoid the
/// implementation-defined std distributions so that a seed reproduces the
/// same selections on every platform.
///
/// Every draw consumes exactly one engine output, except `index()` which may
/// reject and redraw (probability < n / 2^64 per draw).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes two outputs, discards the sine branch.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = engine_();
      if (x >= threshold) return x % n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Seed of repetition `rep` in an experiment started from `base`.
constexpr std::uint64_t repetition_seed(std::uint64_t base, std::uint64_t rep) {
  return base + rep;
}

}  // namespace deepest
