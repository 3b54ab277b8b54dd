#include "harbor/sobol.hpp"

#include <set>
#include <stdexcept>

#include <boost/random/sobol.hpp>

#include "harbor/rng.hpp"

namespace harbor {

SobolDesign sobol_init(const FlagSpace& space, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("sobol_init: count must be at least 1");

  SobolDesign design;
  const auto total = space.cardinality();
  if (count >= total) {
    design.configs = enumerate_configurations(space);
    design.exhaustive = true;
    return design;
  }

  const auto free = space.free_flags();
  const Configuration base = space.default_config();
  if (free.empty()) {
    design.configs.push_back(base);
    design.exhaustive = true;
    return design;
  }

  boost::random::sobol engine(free.size());
  Rng shift_rng(derive_seed(seed, {0x50b01ULL}));
  std::vector<std::uint64_t> shift(free.size());
  for (auto& s : shift) s = shift_rng();

  std::set<Configuration> used;
  design.configs.reserve(count);
  for (std::size_t p = 0; p < count; ++p) {
    Configuration c = base;
    for (std::size_t d = 0; d < free.size(); ++d) {
      const std::uint64_t bits = static_cast<std::uint64_t>(engine()) ^ shift[d];
      const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
      const auto fi = free[d];
      const auto k = space.flag(fi).level_count();
      // Level cells of equal width; for booleans this is the 0.5 threshold.
      auto level = static_cast<std::size_t>(u * static_cast<double>(k));
      c.levels[fi] = static_cast<Level>(std::min(level, k - 1));
    }
    auto repaired = nearest_unused(c, space, used);
    if (!repaired) break;
    used.insert(*repaired);
    design.configs.push_back(std::move(*repaired));
  }
  return design;
}

}  // namespace harbor
