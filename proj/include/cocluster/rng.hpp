#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cocluster {

/// Mixes a run seed with a stream label so components draw from stable,
/// independent streams. Adding a new consumer never shifts existing ones.
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the label
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

inline std::mt19937_64 substream(std::uint64_t seed, std::string_view label) {
  return std::mt19937_64{substream_seed(seed, label)};
}

}  // namespace cocluster
