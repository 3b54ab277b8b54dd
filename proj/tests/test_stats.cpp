#include <doctest.h>

#include <stdexcept>

#include "harbor/stats.hpp"
#include "oracles.hpp"

using namespace harbor;

TEST_SUITE("stats") {

TEST_CASE("normal quantile agrees with the bisection oracle") {
  for (double level : {0.5, 0.8, 0.9, 0.95, 0.99})
    CHECK(normal_quantile(0.5 + level / 2) == doctest::Approx(oracle::z_two_sided(level)).epsilon(1e-12));
}

TEST_CASE("wilson matches score-test inversion") {
  for (double level : {0.8, 0.9, 0.95}) {
    for (long n : {1L, 2L, 7L, 30L, 89L}) {
      for (long k = 0; k <= n; ++k) {
        const auto w = wilson_interval(k, n, level);
        const auto o = oracle::wilson_score_inversion(k, n, level);
        CHECK(w.low == doctest::Approx(o.first).epsilon(1e-9));
        CHECK(w.high == doctest::Approx(o.second).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("wilson boundaries and invariants") {
  CHECK(wilson_interval(0, 10).low == 0.0);
  CHECK(wilson_interval(10, 10).high == 1.0);
  for (long n = 1; n <= 60; ++n) {
    for (long k = 0; k <= n; ++k) {
      const auto w = wilson_interval(k, n);
      const double p = static_cast<double>(k) / n;
      CHECK(w.low <= p);
      CHECK(w.high >= p);
      CHECK(w.low >= 0.0);
      CHECK(w.high <= 1.0);
      // Mirror symmetry in k <-> n - k.
      const auto m = wilson_interval(n - k, n);
      CHECK(w.low == doctest::Approx(1.0 - m.high).epsilon(1e-12));
    }
  }
  // Wider at a higher level.
  CHECK(wilson_interval(16, 89, 0.95).low < wilson_interval(16, 89, 0.90).low);
}

TEST_CASE("standard half-width at p near 0.18 on 89 tasks is about six passes") {
  const auto w = wilson_interval(16, 89, 0.90);
  const double half_passes = 0.5 * (w.high - w.low) * 89;
  CHECK(half_passes > 5.5);
  CHECK(half_passes < 6.5);
}

TEST_CASE("wilson rejects bad arguments") {
  CHECK_THROWS_AS(wilson_interval(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(wilson_interval(5, 4), std::invalid_argument);
  CHECK_THROWS_AS(wilson_interval(-1, 4), std::invalid_argument);
  CHECK_THROWS_AS(wilson_interval(1, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(wilson_interval(1, 4, 0.0), std::invalid_argument);
}

}
