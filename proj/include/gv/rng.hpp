#pragma once

// Seeded RNG with hand-rolled distributions. std::mt19937_64 itself is
// bit-exact across platforms but the standard <random> distributions are
// not, and reproducible byte-identical artifacts depend on these draws.

#include <cmath>
#include <cstdint>
#include <random>

namespace gv {

// splitmix64 finalizer; derives decorrelated seeds for sub-streams.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t x = seed ^ (salt + 0x9e3779b97f4a7c15ull);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed), seed_(seed) {}

  uint64_t bits() { return gen_(); }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform01() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // Rejection sampling to avoid modulo bias; n is tiny in practice.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  double sign() { return (gen_() & 1) ? 1.0 : -1.0; }

  // Box-Muller; one value per call (the partner draw is discarded to keep
  // the stream position independent of call parity).
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * z;
  }

  // Derive an independent stream from the original seed; decouples
  // per-cell work from iteration order.
  Rng fork(uint64_t salt) const { return Rng(mix_seed(seed_, salt)); }

 private:
  std::mt19937_64 gen_;
  uint64_t seed_;
};

}  // namespace gv
