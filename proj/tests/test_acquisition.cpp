#include <doctest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "harbor/acquisition.hpp"
#include "oracles.hpp"

using namespace harbor;

namespace {

std::vector<FrontPoint> random_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FrontPoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({std::round(u(rng) * 20) / 20, std::round(u(rng) * 20) / 20, {}});
  return pts;
}

std::vector<oracle::Pt> plain(const std::vector<FrontPoint>& p) {
  std::vector<oracle::Pt> out;
  for (const auto& q : p) out.push_back({q.mu, q.cost});
  return out;
}

}  // namespace

TEST_SUITE("acquisition") {

TEST_CASE("non-dominated set matches the quadratic oracle") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto pts = random_points(rng, 1 + t % 25);
    const auto front = non_dominated(pts);
    // The oracle keeps exact duplicates; the library keeps one copy.
    std::set<std::pair<double, double>> expected;
    for (auto i : oracle::nondominated_indices(plain(pts))) expected.insert({pts[i].mu, pts[i].cost});
    std::set<std::pair<double, double>> got;
    for (const auto& p : front) got.insert({p.mu, p.cost});
    CHECK(got == expected);
    CHECK(got.size() == front.size());
    for (std::size_t i = 1; i < front.size(); ++i) {
      CHECK(front[i - 1].cost < front[i].cost);
      CHECK(front[i - 1].mu < front[i].mu);
    }
  }
}

TEST_CASE("hypervolume and its improvement match the grid oracle") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto pts = random_points(rng, 1 + t % 12);
    const double mu_ref = 0.1, cost_ref = 0.9;
    CHECK(hypervolume(pts, mu_ref, cost_ref) ==
          doctest::Approx(oracle::hypervolume_grid(plain(pts), mu_ref, cost_ref)).epsilon(1e-12));
    const auto front = make_front(8, pts, mu_ref, cost_ref);
    const auto extra = random_points(rng, 1)[0];
    auto with = pts;
    with.push_back(extra);
    const double expected = oracle::hypervolume_grid(plain(with), mu_ref, cost_ref) -
                            oracle::hypervolume_grid(plain(pts), mu_ref, cost_ref);
    CHECK(hypervolume_improvement(front, extra.mu, extra.cost) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("monte-carlo EHVI converges to the closed form on one-point fronts") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const double mu1 = 0.3 + 0.4 * u(rng), c1 = 0.5 + 0.5 * u(rng);
    const auto front = make_front(8, {{mu1, c1, {}}}, 0.0, 2.0);
    // Candidates straddle the front point; far-dominated ones make the
    // improvement a rare event that no 10k-sample estimate resolves.
    const double mm = mu1 - 0.1 + 0.25 * u(rng), ms = 0.02 + 0.15 * u(rng);
    const double cm = c1 - 0.3 + 0.5 * u(rng), cs = 0.01 + 0.08 * u(rng);
    const double exact = oracle::ehvi_one_point(mm, ms, cm, cs, mu1, c1, 0.0, 2.0);
    const double mc = ehvi(mm, ms, cm, cs, front, {10000, static_cast<std::uint64_t>(t)});
    CHECK(std::abs(mc - exact) <= 0.02 * exact);
    // Deterministic in the seed.
    CHECK(ehvi(mm, ms, cm, cs, front, {500, 9}) == ehvi(mm, ms, cm, cs, front, {500, 9}));
  }
  CHECK_THROWS_AS(ehvi(0.5, 0.1, 1.0, 0.1, make_front(8, {}, 0, 2), {0, 0}), std::invalid_argument);
}

TEST_CASE("EHVI of a dominated certain point is zero") {
  const auto front = make_front(8, {{0.8, 0.2, {}}}, 0.0, 1.0);
  CHECK(ehvi(0.5, 0.0, 0.5, 0.0, front, {64, 1}) == 0.0);
  CHECK(ehvi(0.9, 0.0, 0.1, 0.0, front, {64, 1}) > 0.0);
}

TEST_CASE("safety is the lower credible bound against R0 - delta") {
  const SafetyParams sp{0.5, 0.05, 0.1};
  const double z = normal_quantile(0.9);
  CHECK(is_safe({0.45 + z * 0.1 + 1e-9, 0.1}, sp));
  CHECK_FALSE(is_safe({0.45 + z * 0.1 - 1e-6, 0.1}, sp));
  const auto space = fixture::boolean_space(3, 3);
  const auto s = Surrogate::with_scales(space, {{0.01}, 0.0}, 0.0, {}, {}, {}, 0.4);
  CHECK_THROWS_AS(safety_filter({}, s, {0.5, -0.1, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(safety_filter({}, s, {0.5, 0.05, 0.0}), std::invalid_argument);
}

TEST_CASE("greedy batch halves a neighbour and keeps a distant candidate") {
  const auto space = fixture::boolean_space(4, 4);
  const Configuration a{{0, 0, 0, 0}}, near{{1, 0, 0, 0}}, far{{1, 1, 0, 0}};
  const std::vector<Configuration> cs{a, near, far};
  // near has more raw EHVI than far; after a is taken, near is one flip away
  // (multiplier 1/2) and far two (multiplier 1).
  const std::vector<ScoredCandidate> sc{{1.0, 1.0, 0.0}, {0.9, 1.0, 0.0}, {0.6, 1.0, 0.0}};
  const auto b = greedy_batch(cs, sc, 8, 2, 2.0);
  REQUIRE(b.picks.size() == 2);
  CHECK(b.picks[0] == 0);
  CHECK(b.picks[1] == 2);
  CHECK(b.multipliers[1] == 1.0);
  CHECK(b.score == doctest::Approx((1.0 + 0.6) / 16.0));
  // With a cheaper neighbour the halved ratio still wins.
  const std::vector<ScoredCandidate> cheap{{1.0, 1.0, 0.0}, {0.9, 0.2, 0.0}, {0.6, 1.0, 0.0}};
  const auto b2 = greedy_batch(cs, cheap, 8, 2, 2.0);
  CHECK(b2.picks[0] == 1);
  // Exact ties fall to the tiebreak.
  const std::vector<ScoredCandidate> tied{{0.5, 1.0, 0.1}, {0.5, 1.0, 0.7}, {0.5, 1.0, 0.3}};
  CHECK(greedy_batch(cs, tied, 8, 1, 2.0).picks[0] == 1);
}

TEST_CASE("region pool stays inside the ball and respects pins") {
  const auto space = fixture::boolean_space(14, 7).with_exclusion(3, {ExclusionKind::silent, 0});
  const Configuration center = space.default_config();
  const auto small = region_pool(center, 2, space, 1024, 1);
  CHECK(small.size() == hamming_ball_size(center, space, 2));
  const auto big = region_pool(center, 5, space, 300, 1);
  CHECK(big.size() == 300);
  CHECK(big == region_pool(center, 5, space, 300, 1));
  std::set<Configuration> distinct(big.begin(), big.end());
  CHECK(distinct.size() == big.size());
  std::vector<int> per_shell(6, 0);
  for (const auto& c : big) {
    const auto d = hamming_distance(c, center);
    CHECK(d >= 1);
    CHECK(d <= 5);
    CHECK(c.levels[3] == 0);
    ++per_shell[d];
  }
  // Shells are drawn by size, so the outer shell dominates.
  CHECK(per_shell[5] > per_shell[1]);
  CHECK(region_pool(center, 0, space, 10, 1).empty());
}

TEST_CASE("select_batch honours the remaining budget") {
  const auto space = fixture::boolean_space(6, 3);
  std::vector<Configuration> xs;
  std::vector<double> ys, noise;
  for (const auto& c : enumerate_configurations(space)) {
    if (xs.size() == 6) break;
    xs.push_back(c);
    ys.push_back(0.5);
    noise.push_back(1e-4);
  }
  const auto s = Surrogate::with_scales(space, {{5e-4, 5e-4}, 1e-4}, 5e-4, xs, ys, noise, 0.5);
  const CostModel cost(1.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.encoded_dim())), 0.0);
  std::map<int, ParetoFront> fronts;
  for (int m : {4, 16}) fronts[m] = make_front(m, {{0.5, 1.0, xs[0]}}, 0.0, 2.0);
  TrustRegion region;
  region.center = xs[0];
  region.radius = 2;
  const SafetyParams safety{0.45, 0.05, 0.1};
  BatchOptions opts;
  opts.q = 3;
  opts.ehvi_samples = 64;

  const auto free = select_batch(region, space, s, cost, fronts, {4, 16}, safety, opts, 5);
  REQUIRE(free.status == BatchStatus::ok);
  CHECK(free.configs.size() == 3);
  // Same EHVI per config at either fidelity: the cheaper one wins the ratio.
  CHECK(free.fidelity == 4);
  for (const auto& c : free.configs) CHECK(hamming_distance(c, xs[0]) <= 2);

  opts.remaining_budget = 9.0;
  const auto tight = select_batch(region, space, s, cost, fronts, {4, 16}, safety, opts, 5);
  REQUIRE(tight.status == BatchStatus::ok);
  CHECK(tight.configs.size() == 2);
  CHECK(tight.predicted_cost <= 9.0);

  opts.remaining_budget = 3.0;
  CHECK(select_batch(region, space, s, cost, fronts, {4, 16}, safety, opts, 5).status == BatchStatus::infeasible);

  const auto strict = SafetyParams{0.9, 0.0, 0.1};
  opts.remaining_budget = 1e300;
  CHECK(select_batch(region, space, s, cost, fronts, {4, 16}, strict, opts, 5).status == BatchStatus::empty_pool);
}

}
