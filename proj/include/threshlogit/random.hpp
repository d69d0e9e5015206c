#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace threshlogit {

/// SplitMix64 finalizer; a bijective 64-bit mix.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Child seed for stream `index` of a master seed. Independent of evaluation
/// order, so runs can be generated in parallel.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index ^ 0xD1B54A32D192ED03ULL));
}

/// Seeded generator with portable draw definitions. The standard library
/// distributions are implementation-defined, so uniforms, logistic and normal
/// variates are built here directly on the 64-bit engine output.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer on [lo, hi].
  long uniform_int(long lo, long hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long>(engine_() % span);
  }

  /// Standard logistic variate by inverse CDF.
  double logistic() {
    const double u = uniform_open();
    return std::log(u / (1.0 - u));
  }

  /// Standard normal pair by the Box-Muller transform.
  std::pair<double, double> normal_pair() {
    const double u1 = uniform_open();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace threshlogit
