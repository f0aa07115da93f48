// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace cfmimo {

using Rng = std::mt19937_64;

/// One step of the SplitMix64 output function applied to `x`.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a stream index.
/// Campaign seeds are mix_seed(mix_seed(base_seed, drop_id), realization_id).
constexpr std::uint64_t mix_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(parent ^ splitmix64(index + 0xD1B54A32D192ED03ULL));
}

}  // namespace cfmimo
