#pragma once

#include <cstdint>
#include <vector>

#include "harbor/flagspace.hpp"

namespace harbor {

struct SobolDesign {
  std::vector<Configuration> configs;
  /// True when `count` reached the number of distinct configurations and the
  /// full enumeration was returned instead of a sampled design.
  bool exhaustive = false;
};

/// Digitally shifted Sobol points over the free flags, each coordinate
/// rounded to a legal level. Duplicates after rounding are replaced by the
/// nearest unused Hamming neighbour. Pure in (space, count, seed).
SobolDesign sobol_init(const FlagSpace& space, std::size_t count, std::uint64_t seed);

/// Nearest configuration (by Hamming distance, then neighbour order) that is
/// not in `used`; nullopt when the whole free space is used.
template <class UsedSet>
std::optional<Configuration> nearest_unused(const Configuration& c, const FlagSpace& space, const UsedSet& used) {
  if (!used.count(c)) return c;
  const auto free = space.free_flags().size();
  for (std::size_t r = 1; r <= free; ++r) {
    for (auto& n : hamming_neighbors(c, space, r)) {
      if (hamming_distance(n, c) == r && !used.count(n)) return n;
    }
  }
  return std::nullopt;
}

}  // namespace harbor
