#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace comono {

/// Deterministic random source. Variates are produced by explicit
/// inverse-transform / Box-Muller maps on top of std::mt19937_64 raw output,
/// so streams are bit-reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix(mix(seed) ^ 0x6a09e667f3bcc909ULL)) {}

  /// Independent stream derived from (seed, stream). Used to hand one
  /// substream to each bootstrap draw / replicate so scheduling order
  /// cannot change results.
  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    Rng r(0);
    r.eng_.seed(mix(mix(seed) ^ mix(stream * 0x9e3779b97f4a7c15ULL + 0xbf58476d1ce4e5b9ULL)));
    return r;
  }

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (two uniforms per variate).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Unit-mean exponential via inverse CDF.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 eng_;
};

}  // namespace comono
