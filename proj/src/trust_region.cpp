#include "harbor/trust_region.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace harbor {

namespace {
bool usable(const EvaluationRecord& r) {
  return !r.uninformative && r.phase != Phase::preflight && r.phase != Phase::meta;
}
}  // namespace

std::vector<Configuration> rank_incumbents(const std::vector<EvaluationRecord>& history, const Surrogate& s) {
  std::set<Configuration> distinct;
  for (const auto& r : history) {
    if (usable(r)) distinct.insert(r.config);
  }
  std::vector<Configuration> configs(distinct.begin(), distinct.end());
  const auto pred = s.predict_many(configs);
  std::vector<std::size_t> order(configs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pred[a].mean > pred[b].mean; });
  std::vector<Configuration> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(configs[i]);
  return out;
}

double best_target_of(const std::vector<EvaluationRecord>& history, const Configuration& config) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : history) {
    if (usable(r) && r.config == config) best = std::max(best, r.corrected_target);
  }
  return best;
}

std::vector<TrustRegion> init_regions(const std::vector<EvaluationRecord>& history, const Surrogate& s,
                                      std::size_t m, const TrustRegionParams& params, std::size_t first_id) {
  std::vector<TrustRegion> out;
  if (m == 0) return out;
  const auto ranked = rank_incumbents(history, s);
  for (std::size_t i = 0; i < ranked.size() && out.size() < m; ++i) {
    TrustRegion r;
    r.id = first_id + out.size();
    r.center = ranked[i];
    r.radius = std::max<std::size_t>(params.r0, 1);
    r.best_target = best_target_of(history, ranked[i]);
    out.push_back(std::move(r));
  }
  return out;
}

TrustRegion update_region(TrustRegion r, bool improved, const TrustRegionParams& params, std::size_t flag_count,
                          const Configuration* new_center, double new_best) {
  if (!r.alive) return r;
  const std::size_t r_max = params.r_max > 0 ? params.r_max : std::max<std::size_t>(flag_count, 1);
  if (improved) {
    ++r.success_streak;
    r.failure_streak = 0;
    if (new_center) r.center = *new_center;
    r.best_target = new_best;
  } else {
    ++r.failure_streak;
    r.success_streak = 0;
  }
  if (r.success_streak >= params.tau_succ) {
    r.radius = std::min(r.radius * 2, r_max);
    r.success_streak = 0;
  } else if (r.failure_streak >= params.tau_fail) {
    r.radius /= 2;
    r.failure_streak = 0;
  }
  if (r.radius < 1) r.alive = false;
  return r;
}

std::vector<std::size_t> block_projection_counts(const std::vector<EvaluationRecord>& history, const FlagSpace& space) {
  std::vector<std::set<std::vector<Level>>> seen(space.block_count());
  for (const auto& r : history) {
    if (!usable(r)) continue;
    for (std::size_t l = 0; l < space.block_count(); ++l) {
      std::vector<Level> proj;
      for (auto f : space.blocks()[l].flags) proj.push_back(r.config.levels[f]);
      seen[l].insert(std::move(proj));
    }
  }
  std::vector<std::size_t> out;
  for (const auto& s : seen) out.push_back(s.size());
  return out;
}

std::vector<FrozenBlock> freeze_blocks(const Surrogate& s, const std::vector<EvaluationRecord>& history,
                                       const FlagSpace& space, std::size_t n_min, double collapse_ratio,
                                       const Configuration& incumbent) {
  std::vector<FrozenBlock> out;
  const auto& main = s.scales().main;
  if (main.empty()) return out;
  const double top = *std::max_element(main.begin(), main.end());
  const auto counts = block_projection_counts(history, space);
  for (std::size_t l = 0; l < space.block_count(); ++l) {
    const auto& flags = space.blocks()[l].flags;
    const bool all_excluded =
        std::all_of(flags.begin(), flags.end(), [&](auto f) { return space.is_excluded(f); });
    if (all_excluded) continue;
    if (!(main[l] < collapse_ratio * top) || counts[l] < n_min) continue;
    FrozenBlock fb;
    fb.block = l;
    for (auto f : flags) {
      if (!space.is_excluded(f)) fb.pins[f] = incumbent.levels[f];
    }
    out.push_back(std::move(fb));
  }
  return out;
}

}  // namespace harbor
