#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mmfit {

// Seeded random source with hand-rolled samplers. std::mt19937_64 itself is
// specified bit-for-bit by the standard, but the <random> distributions are
// not, so the few distributions we need are implemented here on top of raw
// draws. This keeps runs reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform index in [0, n). n must be > 0.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(gen_()) * static_cast<unsigned __int128>(n)) >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller; consumes exactly two draws per sample.
  double normal(double mean, double sd) {
    double u1 = 1.0 - uniform01();  // (0, 1], keeps log() finite
    double u2 = uniform01();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double cauchy(double location, double scale) {
    double u = uniform01();
    while (u == 0.0) u = uniform01();
    return location + scale * std::tan(kPi * (u - 0.5));
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 gen_;
};

}  // namespace mmfit
