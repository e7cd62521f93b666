#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace noma {

// SplitMix64 finalizer. Used to derive independent, reproducible sub-seeds
// from (seed, stream, index) triples.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return mix64(mix64(mix64(seed) ^ stream) ^ index);
}

// Named streams so that different consumers of one master seed never share
// random numbers.
namespace streams {
inline constexpr std::uint64_t kEpisode = 0x45504953ULL;     // training instances
inline constexpr std::uint64_t kRollout = 0x524f4c4cULL;     // action sampling
inline constexpr std::uint64_t kReplay = 0x5245504cULL;      // replay batches
inline constexpr std::uint64_t kInit = 0x494e4954ULL;        // weight init
inline constexpr std::uint64_t kValidation = 0x56414c49ULL;  // validation set
inline constexpr std::uint64_t kHeldOut = 0x484f4c44ULL;     // evaluation set
inline constexpr std::uint64_t kRandomAssign = 0x52414e44ULL;
inline constexpr std::uint64_t kSweep = 0x53574550ULL;
}  // namespace streams

// Thin wrapper over mt19937_64 with distribution code written out so that
// draws are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection sampling removes modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~0ULL - (~0ULL % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Rayleigh amplitude with E[g^2] = 1, i.e. g^2 ~ Exp(1).
  double rayleigh_unit_power() { return std::sqrt(-std::log1p(-uniform())); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace noma
