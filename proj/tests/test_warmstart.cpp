#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "harbor/warmstart.hpp"

using namespace harbor;

TEST_SUITE("warmstart") {

TEST_CASE("inversion recovers the fully-warm rate from the mixture") {
  for (double w : {0.2, 0.5, 0.9, 1.0}) {
    for (double p_inf : {0.1, 0.45, 0.8}) {
      const double p_base = 0.3;
      const double p_obs = w * p_inf + (1 - w) * p_base;
      const auto inv = invert_warm(p_obs, p_base, w);
      CHECK(inv.p_inf == doctest::Approx(p_inf));
      CHECK_FALSE(inv.clipped);
    }
  }
  CHECK(invert_warm(0.05, 0.5, 0.5).p_inf == 0.0);
  CHECK(invert_warm(0.05, 0.5, 0.5).clipped);
  CHECK(invert_warm(0.95, 0.3, 0.5).p_inf == 1.0);
  // Cold records pass through untouched.
  CHECK(invert_warm(0.4, 0.3, 0.0).p_inf == 0.4);
  CHECK_FALSE(invert_warm(0.4, 0.3, 1e-7).clipped);
}

TEST_CASE("corrected variance matches a finite-difference delta method") {
  const double p_obs = 0.42, p_base = 0.35, w = 0.55;
  const double s_obs = 0.003, s_base = 0.002, s_w = 0.004;
  auto f = [](double po, double pb, double ww) { return (po - (1 - ww) * pb) / ww; };
  const double h = 1e-6;
  const double d_obs = (f(p_obs + h, p_base, w) - f(p_obs - h, p_base, w)) / (2 * h);
  const double d_base = (f(p_obs, p_base + h, w) - f(p_obs, p_base - h, w)) / (2 * h);
  const double d_w = (f(p_obs, p_base, w + h) - f(p_obs, p_base, w - h)) / (2 * h);
  const double expected = d_obs * d_obs * s_obs + d_base * d_base * s_base + d_w * d_w * s_w;
  const auto cv = corrected_variance(p_obs, p_base, w, s_obs, s_base, s_w, false);
  CHECK(cv.variance == doctest::Approx(expected).epsilon(1e-6));
  CHECK_FALSE(cv.uninformative);
}

TEST_CASE("clipped and cold corrections are conservative") {
  const double w = 0.4;
  const auto clipped = corrected_variance(0.05, 0.5, w, 0.001, 0.001, 0.0, true);
  CHECK(clipped.variance >= 0.25 / (w * w));
  const auto cold = corrected_variance(0.3, 0.3, 0.0, 0.001, 0.001, 0.0, false, 0.25);
  CHECK(cold.uninformative);
  CHECK(cold.variance == 0.25);
  // Variance grows as w shrinks.
  double prev = 0.0;
  for (double ww : {1.0, 0.8, 0.6, 0.4, 0.2}) {
    const double v = corrected_variance(0.4, 0.3, ww, 0.002, 0.001, 0.01, false).variance;
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("observation variance stays positive at the boundaries") {
  CHECK(observation_variance(5, 10) == doctest::Approx(0.025));
  CHECK(observation_variance(0, 10) == doctest::Approx(0.05 * 0.95 / 10));
  CHECK(observation_variance(10, 10) == doctest::Approx(0.05 * 0.95 / 10));
  CHECK_THROWS_AS(observation_variance(0, 0), std::invalid_argument);
}

TEST_CASE("warm fraction is the minimum over enabled warm flags") {
  const auto space = fixture::load_space("bool8_space.json");
  std::vector<WarmCurve> curves(space.size());
  const auto cache = space.require_index("prompt_cache");
  const auto memory = space.require_index("memory_store");
  curves[cache].kappa = 1.0;
  curves[memory].kappa = 5.0;
  std::vector<bool> warm(space.size());
  warm[cache] = warm[memory] = true;
  const WarmupModel model(warm, curves);
  Configuration c = space.default_config();
  CHECK(warm_fraction(c, space, 3, model).w == 1.0);
  CHECK_FALSE(warm_fraction(c, space, 3, model).argmin);
  c.levels[cache] = 1;
  CHECK(warm_fraction(c, space, 3, model).w == doctest::Approx(1 - std::exp(-3.0)));
  c.levels[memory] = 1;
  const auto wf = warm_fraction(c, space, 3, model);
  CHECK(wf.w == doctest::Approx(1 - std::exp(-0.6)));
  CHECK(*wf.argmin == memory);
  CHECK(warm_fraction(c, space, 0, model).w == 0.0);
}

TEST_CASE("curve fit recovers kappa from a noiseless trajectory") {
  const auto space = fixture::load_space("bool8_space.json");
  const auto cache = space.require_index("prompt_cache");
  for (double kappa : {0.7, 2.0, 6.5}) {
    CounterLog log;
    for (int n = 0; n <= 40; ++n) log.emplace_back(n, 3.0 * (1 - std::exp(-n / kappa)));
    const auto model = fit_warm_curves(space, {{cache, log}});
    // The plateau is the observed max, slightly below 3 for slow curves.
    CHECK(model.curve(cache).kappa == doctest::Approx(kappa).epsilon(0.08));
    CHECK(model.curve(cache).fitted);
    CHECK(model.sigma2(cache) < 1e-3);
  }
  CounterLog zero{{1, 0.0}, {2, 0.0}, {3, 0.0}};
  const auto dead = fit_warm_curves(space, {{cache, zero}});
  CHECK(dead.curve(cache).never_warms);
  CHECK(dead.w(cache, 100) == 0.0);
  CHECK(dead.sigma2(cache) == kPriorVarianceFloor);
  // Unfitted flags keep the default.
  CHECK(dead.curve(space.require_index("memory_store")).kappa == kDefaultWarmKappa);
}

TEST_CASE("apply_correction fills every corrected field") {
  const auto space = fixture::load_space("bool8_space.json");
  const auto model = WarmupModel::defaults(space);
  EvaluationRecord r;
  r.config = space.default_config();
  r.config.levels[space.require_index("prompt_cache")] = 1;
  r.fidelity = 40;
  r.passes = 20;
  r.raw_pass_rate = 0.5;
  r.session_index = 2;
  apply_correction(r, space, model, 0.4, 0.002);
  const double w = 1 - std::exp(-1.0);
  CHECK(r.warm_fraction == doctest::Approx(w));
  CHECK(r.corrected_target == doctest::Approx((0.5 - (1 - w) * 0.4) / w));
  CHECK(r.observation_variance == doctest::Approx(0.25 / 40));
  CHECK(r.corrected_variance > r.observation_variance);
  CHECK_FALSE(r.uninformative);
  r.session_index = 0;
  apply_correction(r, space, model, 0.4, 0.002);
  CHECK(r.uninformative);
  CHECK(r.corrected_target == 0.5);
}

TEST_CASE("counter logs are per turn and sorted by session") {
  const auto space = fixture::load_space("bool8_space.json");
  const auto cache = space.require_index("prompt_cache");
  std::vector<EvaluationRecord> h(3);
  for (int i = 0; i < 3; ++i) {
    h[i].config = space.default_config();
    h[i].config.levels[cache] = 1;
    h[i].session_index = 3 - i;
    h[i].counters.turn_count = 10;
    h[i].counters.counters["cache.hit"] = 10.0 * i;
  }
  h[1].config.levels[cache] = 0;
  const auto logs = counter_logs(h, space);
  REQUIRE(logs.count(cache));
  const auto& log = logs.at(cache);
  REQUIRE(log.size() == 2);
  CHECK(log[0] == std::make_pair<std::int64_t, double>(1, 2.0));
  CHECK(log[1] == std::make_pair<std::int64_t, double>(3, 0.0));
}

}
