#pragma once

#include <cstdint>
#include <random>

namespace motionaug {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent 64-bit seed from a base seed and two stream keys:
///   mix(b, i, k) = splitmix64(splitmix64(splitmix64(b) ^ i) ^ k)
/// Used everywhere a per-sample or per-user random stream is needed so that
/// results never depend on iteration order.
constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index,
                                 std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(splitmix64(base) ^ index) ^ stream);
}

inline Rng make_rng(std::uint64_t base, std::uint64_t index, std::uint64_t stream) {
  return Rng{mix_seed(base, index, stream)};
}

}  // namespace motionaug
