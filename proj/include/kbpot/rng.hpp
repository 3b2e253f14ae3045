#pragma once

// Deterministic random number generation. Everything randomized in the
// library draws from this splitmix64-based generator so results are
// byte-identical across platforms and runs; std:: distributions are avoided
// because their output is implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>

#include "kbpot/types.hpp"

namespace kbpot::rng {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a root seed and two counters
/// (e.g. protein index and decoy index). Pure function of its inputs.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = root;
  s ^= splitmix64_next(s) + 0x632BE59BD9B4E019ull * (a + 1);
  s ^= splitmix64_next(s) + 0xD1B54A32D192ED03ull * (b + 1);
  return splitmix64_next(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64_next(state_); }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi], both inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }

  /// Standard normal deviate (Box-Muller; two uniforms per call).
  double normal() {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform direction on the unit sphere.
  Vec3 unit_vector() {
    const double z = 1.0 - 2.0 * uniform01();
    const double phi = 2.0 * std::numbers::pi * uniform01();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

 private:
  std::uint64_t state_;
};

}  // namespace kbpot::rng
