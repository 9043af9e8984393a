#pragma once

#include <cmath>
#include <cstdint>

namespace gmatch {

/// Counter-based pseudorandom generator. The value at counter k is the
/// SplitMix64 finalizer applied to key + k * golden-ratio increment, so the
/// stream is a pure function of (seed, stream, counter): a given seed always
/// reproduces the same draws, independent of call order elsewhere.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

  /// Uniform on (0, 1]: top 53 bits, shifted away from zero.
  double uniform() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal via the Box-Muller transform (two uniforms per draw).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /// Deterministic sub-seed derivation for parallel replications.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return mix(mix(seed) ^ (index + 0x9e3779b97f4a7c15ull));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace gmatch
