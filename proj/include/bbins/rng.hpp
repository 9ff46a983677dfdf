#pragma once

#include <cstdint>
#include <random>

namespace bbins {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// Derives one independent stream per run from a master seed.
struct RngSeedPlan {
  std::uint64_t master_seed = 0;
  std::uint64_t run_index = 0;

  constexpr std::uint64_t child_seed() const {
    return mix64(master_seed ^ (kGoldenGamma * (run_index + 1)));
  }
  Rng engine() const { return Rng(child_seed()); }
  constexpr RngSeedPlan with_run(std::uint64_t run) const { return {master_seed, run}; }

  bool operator==(const RngSeedPlan&) const = default;
};

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Unbiased uniform integer in [0, range) (Lemire's multiply-and-reject).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t range) {
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * range;
  auto low = static_cast<std::uint64_t>(m);
  if (low < range) {
    const std::uint64_t threshold = (0 - range) % range;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * range;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace bbins
