#pragma once

#include <cstdint>
#include <random>

namespace divuda {

// splitmix64 finalizer; decorrelates (seed, stream) pairs before seeding.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(mix_seed(seed, stream)); }

// Uniform double in [0, 1) from 53 random bits; identical across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Named sub-streams so that adding a consumer never shifts another's draws.
namespace streams {
inline constexpr std::uint64_t kSourceBlobs = 1;
inline constexpr std::uint64_t kTargetBlobs = 2;
inline constexpr std::uint64_t kLabelNoise = 3;
inline constexpr std::uint64_t kGenerator = 10;
inline constexpr std::uint64_t kHead1 = 11;
inline constexpr std::uint64_t kHead2 = 12;
inline constexpr std::uint64_t kSourceBatches = 20;
inline constexpr std::uint64_t kTargetBatches = 21;
inline constexpr std::uint64_t kDropout = 30;
inline constexpr std::uint64_t kEvalDropout = 31;
inline constexpr std::uint64_t kSourceSplit = 40;
}  // namespace streams

}  // namespace divuda
