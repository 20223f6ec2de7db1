#pragma once

// Seedable, portable RNG. SplitMix64 is bit-exact on every platform, so
// results do not depend on the standard library's distribution internals.
// Independent substreams are derived from (seed, tag) pairs; parallel and
// serial runs therefore draw identical values.

#include <cmath>
#include <cstdint>

namespace bdirs {

class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 53-bit resolution
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // standard normal via Box-Muller
  double gaussian() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

 private:
  uint64_t state_;
};

// Derives the seed of an independent substream from a base seed and a tag.
inline uint64_t substream(uint64_t seed, uint64_t tag) {
  SplitMix64 g(seed ^ (0xA0761D6478BD642FULL * (tag + 1)));
  g.next();
  return g.next();
}

}  // namespace bdirs
