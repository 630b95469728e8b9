// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace textgrpo {

// Deterministic RNG used everywhere randomness is needed. Wraps mt19937_64
// (whose output stream is fixed by the standard) and derives all variates
// from raw engine output, so identical seeds give identical draws on every
// platform and standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed), seed_token_(mix(seed)) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n) via rejection sampling, n >= 1.
  uint64_t below(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Deterministic substream, independent of how many draws the parent has
  // made. Used to give each example / epoch / worker its own stream.
  Rng child(uint64_t stream) const {
    return Rng(mix(seed_token_ ^ stream * 0x9e3779b97f4a7c15ull));
  }

  // Index drawn from unnormalized nonnegative weights (sum > 0).
  size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01() * total;
    double acc = 0.0;
    for (size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

 private:
  static uint64_t mix(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  uint64_t seed_token_ = 0;
};

}  // namespace textgrpo
