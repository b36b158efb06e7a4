#pragma once

#include <cstdint>
#include <random>

namespace pwerpi {

// Every sampling routine takes one of these explicitly; nothing draws from
// shared state.
using RngStream = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of the index-th child stream of `seed`. Children of distinct indices
// are decorrelated; the mapping never depends on scheduling.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline RngStream derive_stream(std::uint64_t seed, std::uint64_t index) {
  return RngStream(derive_seed(seed, index));
}

}  // namespace pwerpi
