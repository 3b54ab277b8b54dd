#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "harbor/flagspace.hpp"
#include "harbor/record.hpp"
#include "harbor/surrogate.hpp"

namespace harbor {

struct TrustRegionParams {
  std::size_t r0 = 2;
  std::size_t r_max = 0;  // 0 means the number of flags
  int tau_succ = 3;
  int tau_fail = 3;
};

struct TrustRegion {
  std::size_t id = 0;
  Configuration center;
  std::size_t radius = 0;
  int success_streak = 0;
  int failure_streak = 0;
  bool alive = true;
  double best_target = 0.0;  // best corrected target seen by the region
};

/// Distinct evaluated configurations ranked by posterior mean (ties keep
/// configuration order). Ignores preflight, imported and uninformative
/// records.
std::vector<Configuration> rank_incumbents(const std::vector<EvaluationRecord>& history, const Surrogate& s);

/// Regions at the top-M incumbents with radius r0. `first_id` numbers them.
std::vector<TrustRegion> init_regions(const std::vector<EvaluationRecord>& history, const Surrogate& s,
                                      std::size_t m, const TrustRegionParams& params, std::size_t first_id = 0);

/// Best corrected target recorded for `config` (-inf when none).
double best_target_of(const std::vector<EvaluationRecord>& history, const Configuration& config);

/// TuRBO streak rule on integer radii. On improvement the centre moves to
/// `new_center` and best_target to `new_best`.
TrustRegion update_region(TrustRegion r, bool improved, const TrustRegionParams& params, std::size_t flag_count,
                          const Configuration* new_center = nullptr, double new_best = 0.0);

struct FrozenBlock {
  std::size_t block = 0;
  std::map<std::size_t, Level> pins;  // flag -> level
};

/// Number of distinct block-l projections among informative records.
std::vector<std::size_t> block_projection_counts(const std::vector<EvaluationRecord>& history, const FlagSpace& space);

/// Blocks whose scale fell below collapse_ratio times the largest and that
/// have at least n_min distinct projections, pinned to `incumbent`'s values.
/// Blocks already fully excluded are skipped.
std::vector<FrozenBlock> freeze_blocks(const Surrogate& s, const std::vector<EvaluationRecord>& history,
                                       const FlagSpace& space, std::size_t n_min, double collapse_ratio,
                                       const Configuration& incumbent);

}  // namespace harbor
