#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace floodseg {

// splitmix64 step; used for seeding and for deriving sub-streams.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic 64-bit generator (xoshiro256**).
//
// Every random draw in the project goes through this class with an explicit
// seed. Platform RNGs and <random> distributions are never used: generated
// scenes, augmentations and weight initialisations must be bit-identical
// across runs, platforms and thread counts.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  uint64_t next() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) without modulo bias.
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = ~uint64_t{0} - ~uint64_t{0} % n;
    uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

  // Derives an independent stream, e.g. one per scene or per augmentation.
  Rng fork(uint64_t stream) {
    uint64_t mix = next() ^ (stream * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
    return Rng(splitmix64(mix));
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Stateless mix of a base seed with a stream id; used to give each scene,
// epoch or sample its own reproducible generator regardless of the order in
// which workers reach it.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
  uint64_t s = base ^ (stream + 0x9e3779b97f4a7c15ull + (base << 6) + (base >> 2));
  return splitmix64(s);
}

}  // namespace floodseg
