#pragma once

#include <cstdint>

namespace qfb {

/// SplitMix64 (Steele/Lea/Flood splittable generator, Vigna's fixed-increment
/// variant). Trajectory i of a run with seed s draws from the substream whose
/// initial state is one finalizer round of s + (i+1)*GOLDEN, which decorrelates
/// neighbouring substreams and makes results independent of the execution
/// schedule. Fixed per release; changing it is a breaking change for
/// reproducibility.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t state) : state_(state) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  uint64_t state_;
};

inline uint64_t substream_state(uint64_t seed, uint64_t index) {
  uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline SplitMix64 substream(uint64_t seed, uint64_t index) {
  return SplitMix64(substream_state(seed, index));
}

}  // namespace qfb
