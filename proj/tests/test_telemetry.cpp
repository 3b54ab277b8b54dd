#include <doctest.h>

#include "fixtures.hpp"
#include "harbor/telemetry.hpp"

using namespace harbor;

namespace {

EvaluationRecord with_counters(const Configuration& c, std::map<std::string, double> counters, long turns,
                               Phase phase = Phase::search) {
  EvaluationRecord r;
  r.config = c;
  r.phase = phase;
  r.fidelity = 4;
  r.counters.counters = std::move(counters);
  r.counters.turn_count = turns;
  return r;
}

}  // namespace

TEST_SUITE("telemetry") {

TEST_CASE("a flag is silent after n_silent on-records with no consumption") {
  const auto space = fixture::mixed_space();
  const auto compact = space.require_index("compact");
  Configuration on = space.default_config();
  on.levels[compact] = 1;
  std::vector<EvaluationRecord> h;
  h.push_back(with_counters(space.default_config(), {}, 40));
  h.push_back(with_counters(on, {}, 40));
  h.push_back(with_counters(on, {}, 40, Phase::meta));
  h.push_back(with_counters(on, {}, 40));
  CHECK(detect_silent(h, space).empty());
  h.push_back(with_counters(on, {{"compact.ran", 0.3}}, 40));
  const auto silent = detect_silent(h, space);
  REQUIRE(silent.size() == 1);
  CHECK(silent[0].flag == compact);
  CHECK(silent[0].on_records == 3);
  CHECK(silent[0].mean_consumer == doctest::Approx(0.1));
  // Enough consumption clears it.
  h.push_back(with_counters(on, {{"compact.ran", 5}}, 40));
  CHECK(detect_silent(h, space).empty());
}

TEST_CASE("flags without consumer bindings are never silent") {
  const auto space = fixture::mixed_space();
  Configuration on = space.default_config();
  on.levels[space.require_index("retry")] = 1;
  std::vector<EvaluationRecord> h(5, with_counters(on, {}, 10));
  for (const auto& s : detect_silent(h, space)) CHECK(s.flag != space.require_index("retry"));
}

TEST_CASE("smoke classification by counters and trace length") {
  const auto space = fixture::mixed_space();
  Configuration c = space.default_config();
  c.levels[space.require_index("cache")] = 1;
  c.levels[space.require_index("compact")] = 1;
  c.levels[space.require_index("retry")] = 1;
  TelemetrySnapshot trace;
  trace.turn_count = 3;
  trace.counters["cache.hit"] = 2;
  auto v = classify_smoke(c, space, trace);
  std::map<std::string, Verdict> by_name;
  for (const auto& x : v) by_name[space.flag(x.flag).name] = x.status;
  CHECK(by_name.at("cache") == Verdict::green);
  CHECK(by_name.at("compact") == Verdict::yellow);  // 3 turns < fire_turns 5
  CHECK(by_name.at("retry") == Verdict::green);
  CHECK(by_name.count("router") == 0);
  trace.turn_count = 9;
  v = classify_smoke(c, space, trace);
  for (const auto& x : v)
    if (space.flag(x.flag).name == "compact") CHECK(x.status == Verdict::red);
  // Thresholds override the binding.
  v = classify_smoke(c, space, trace, {{space.require_index("compact"), 20}});
  for (const auto& x : v)
    if (space.flag(x.flag).name == "compact") CHECK(x.status == Verdict::yellow);
  CHECK(to_string(Verdict::red) == "RED");
}

TEST_CASE("preflight vetoes a silent gate and passes a healthy config") {
  const auto space = fixture::load_space("bool8_space.json");
  auto spec = fixture::load_sim("bool8_sim.json", space);
  Configuration c = space.default_config();
  const auto compact = space.require_index("compact_context");
  c.levels[compact] = 1;
  const auto smoke = *suite_of(spec).smoke_task;
  {
    SimAdapter adapter(spec, space);
    const auto ok = preflight_smoke(c, adapter, space, smoke, 5, 1);
    CHECK(ok.passed);
    REQUIRE(ok.record);
    CHECK(ok.record->phase == Phase::preflight);
    CHECK(ok.record->fidelity == 1);
  }
  spec.silent_gates.insert(compact);
  SimAdapter broken(spec, space);
  const auto veto = preflight_smoke(c, broken, space, smoke, 5, 1);
  // Generated tasks run at least 4 turns, the flag's firing threshold.
  REQUIRE(spec.tasks[task_index(spec, smoke)].turns >= 4);
  CHECK_FALSE(veto.passed);
  CHECK(veto.veto_reason.find("compact_context RED") != std::string::npos);
}

TEST_CASE("preflight reports a dead adapter as a veto") {
  const auto space = fixture::boolean_space(2, 2);
  ProcessAdapter dying(R"(printf '{"type":"hello","parallel":false}\n'; read x; exit 1)", space);
  const auto r = preflight_smoke(space.default_config(), dying, space, "a", 0, 0);
  CHECK_FALSE(r.passed);
  CHECK(r.veto_reason.find("smoke evaluation failed") == 0);
}

TEST_CASE("asymmetric counters are anomalies except for cold warm flags") {
  const auto space = fixture::mixed_space();
  Configuration c = space.default_config();
  c.levels[space.require_index("cache")] = 1;
  auto r = with_counters(c, {{"cache.put", 4}}, 10);
  r.session_index = 0;
  CHECK(detect_asymmetry(r, space).empty());
  r.session_index = 3;
  r.index = 12;
  const auto a = detect_asymmetry(r, space);
  REQUIRE(a.size() == 1);
  CHECK(a[0].record == 12);
  CHECK(a[0].flag == space.require_index("cache"));
  r.counters.counters["cache.hit"] = 1;
  CHECK(detect_asymmetry(r, space).empty());
}

}
