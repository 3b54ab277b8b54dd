#include <doctest.h>

#include "fixtures.hpp"
#include "harbor/trust_region.hpp"

using namespace harbor;

namespace {

EvaluationRecord rec(const Configuration& c, double target, Phase phase = Phase::search) {
  EvaluationRecord r;
  r.config = c;
  r.phase = phase;
  r.fidelity = 8;
  r.corrected_target = target;
  r.corrected_variance = 1e-4;
  return r;
}

}  // namespace

TEST_SUITE("trust_region") {

TEST_CASE("streaks double, halve and kill") {
  const TrustRegionParams p{2, 0, 3, 3};
  TrustRegion r;
  r.radius = 2;
  Configuration moved{{1, 1}};
  for (int i = 0; i < 2; ++i) r = update_region(r, true, p, 8, &moved, 0.5 + i);
  CHECK(r.radius == 2);
  r = update_region(r, true, p, 8, &moved, 0.7);
  CHECK(r.radius == 4);
  CHECK(r.success_streak == 0);
  CHECK(r.center == moved);
  CHECK(r.best_target == 0.7);
  // A failure resets the success streak.
  r = update_region(r, true, p, 8, &moved, 0.8);
  r = update_region(r, false, p, 8);
  CHECK(r.success_streak == 0);
  CHECK(r.failure_streak == 1);
  r = update_region(r, false, p, 8);
  r = update_region(r, false, p, 8);
  CHECK(r.radius == 2);
  for (int i = 0; i < 3; ++i) r = update_region(r, false, p, 8);
  CHECK(r.radius == 1);
  CHECK(r.alive);
  for (int i = 0; i < 3; ++i) r = update_region(r, false, p, 8);
  CHECK(r.radius == 0);
  CHECK_FALSE(r.alive);
  // Dead regions stay dead.
  CHECK_FALSE(update_region(r, true, p, 8).alive);
}

TEST_CASE("radius is capped at the flag count") {
  const TrustRegionParams p{2, 0, 1, 3};
  TrustRegion r;
  r.radius = 4;
  r = update_region(r, true, p, 5);
  CHECK(r.radius == 5);
  r = update_region(r, true, p, 5);
  CHECK(r.radius == 5);
  const TrustRegionParams capped{2, 3, 1, 3};
  CHECK(update_region(r, true, capped, 5).radius == 3);
}

TEST_CASE("regions start at the best-predicted incumbents") {
  const auto space = fixture::boolean_space(4, 2);
  const auto all = enumerate_configurations(space);
  std::vector<EvaluationRecord> h;
  for (std::size_t i = 0; i < 6; ++i) h.push_back(rec(all[i], 0.1 * static_cast<double>(i)));
  h.push_back(rec(all[9], 0.99, Phase::preflight));
  const auto s = Surrogate::with_scales(space, {{0.05, 0.05}, 0.01}, 0.01, {all.begin(), all.begin() + 6},
                                        {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}, std::vector<double>(6, 1e-4), 0.25);
  const auto ranked = rank_incumbents(h, s);
  REQUIRE(ranked.size() == 6);
  CHECK(ranked[0] == all[5]);
  const auto regions = init_regions(h, s, 3, {2, 0, 3, 3}, 7);
  REQUIRE(regions.size() == 3);
  CHECK(regions[0].id == 7);
  CHECK(regions[2].id == 9);
  CHECK(regions[0].radius == 2);
  CHECK(regions[0].best_target == doctest::Approx(0.5));
  CHECK(best_target_of(h, all[9]) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("collapsed blocks freeze at the incumbent once well sampled") {
  const auto space = fixture::boolean_space(6, 3);
  const auto all = enumerate_configurations(space);
  std::vector<EvaluationRecord> h;
  for (const auto& c : all) h.push_back(rec(c, 0.5));
  const auto counts = block_projection_counts(h, space);
  CHECK(counts == std::vector<std::size_t>{8, 8});
  const auto s = Surrogate::with_scales(space, {{1e-6, 0.05}, 1e-6}, 0.01, {all[0]}, {0.5}, {1e-3}, 0.5);
  const auto frozen = freeze_blocks(s, h, space, 8, 1e-3, all[5]);
  REQUIRE(frozen.size() == 1);
  CHECK(frozen[0].block == 0);
  CHECK(frozen[0].pins.size() == 3);
  for (const auto& [f, level] : frozen[0].pins) CHECK(level == all[5].levels[f]);
  // Too few distinct projections: nothing freezes.
  CHECK(freeze_blocks(s, h, space, 9, 1e-3, all[5]).empty());
}

}
