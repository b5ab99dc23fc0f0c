#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "inac/constants.hpp"

namespace inac {

/// Seeded random stream. The engine is std::mt19937_64, whose output sequence
/// is fixed by the standard; the uniform and normal transforms are done here
/// rather than through <random> distributions, which differ between standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1].
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = constants::kTwoPi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  /// Circularly-symmetric complex normal with unit total power, CN(0, 1).
  std::complex<double> complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64 finalizer, used to decorrelate consecutive trial indices.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of trial `index` under base seed `base`. Trial i's stream does not depend
/// on the total trial count, so extending a campaign leaves earlier trials intact.
constexpr std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) {
  return base ^ mix64(index);
}

}  // namespace inac
