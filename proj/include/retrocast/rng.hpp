#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace retrocast {

// Stage tags keep the substream families of the two bootstrap layers disjoint
// even when they share a user seed.
inline constexpr std::uint64_t kStreamIdent = 0x49444e54ULL;    // "IDNT"
inline constexpr std::uint64_t kStreamDeconv = 0x4443564eULL;   // "DCVN"

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Engine for replicate `index` of stage `stage` under a user seed. Each
/// (seed, stage, index) triple gives an independent, scheduling-invariant
/// stream, which is what makes bootstrap output deterministic.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stage, std::uint64_t index) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= stage * 0x9e3779b97f4a7c15ULL;
  std::uint64_t b = splitmix64(s);
  s ^= index * 0xd1342543de82ef95ULL;
  std::uint64_t c = splitmix64(s);
  return std::mt19937_64(a ^ (b * 0x2545f4914f6cdd1dULL) ^ c);
}

/// FNV-1a, used to give every cohort its own substream family under one seed.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace retrocast
