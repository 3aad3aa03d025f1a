#pragma once

#include <cstdint>
#include <vector>

#include "refiner/types.hpp"

namespace refiner::bench {

/// xorshift64* values in [0, 1).
inline std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::vector<double> out(n);
  std::uint64_t s = seed | 1;
  for (auto& v : out) {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    v = static_cast<double>((s * 0x2545F4914F6CDD1DULL) >> 11) * 0x1.0p-53;
  }
  return out;
}

inline SaliencyMap noise_map(int side, std::uint64_t seed) {
  return SaliencyMap(side, side, noise(static_cast<std::size_t>(side) * side, seed));
}

}  // namespace refiner::bench
