#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "harbor/history.hpp"

using namespace harbor;

namespace {

struct Bench {
  FlagSpace space = fixture::load_space("bool8_space.json");
  SimSpec spec = fixture::load_sim("bool8_sim.json", space);
  TaskSuite suite = suite_of(spec);
};

RunConfig small_config(std::uint64_t seed) {
  RunConfig rc;
  rc.budget_search = 12;
  rc.sobol = 16;
  rc.seed = seed;
  rc.ehvi_samples = 64;
  return rc;
}

}  // namespace

TEST_SUITE("driver") {

TEST_CASE("default fidelities") {
  CHECK(default_fidelities(89) == std::vector<int>{8, 22, 44, 89});
  CHECK(default_fidelities(30) == std::vector<int>{8, 22, 30});
  CHECK(default_fidelities(8) == std::vector<int>{8});
  CHECK(default_fidelities(5) == std::vector<int>{5});
}

TEST_CASE("run config validation names the field") {
  RunConfig rc;
  rc.fidelities = {8, 22};
  CHECK_THROWS_WITH_AS(rc.validate(60), doctest::Contains("largest fidelity"), std::invalid_argument);
  rc.fidelities = {22, 8, 60};
  CHECK_THROWS_WITH_AS(rc.validate(60), doctest::Contains("ascending"), std::invalid_argument);
  rc.fidelities = {};
  rc.eta = 0.7;
  CHECK_THROWS_WITH_AS(rc.validate(60), doctest::Contains("eta"), std::invalid_argument);
  rc.eta = 0.1;
  rc.budget_search = 0;
  CHECK_THROWS_AS(rc.validate(60), std::invalid_argument);
}

TEST_CASE("a budget below the baseline plus design is refused up front") {
  Bench b;
  SimAdapter adapter(b.spec, b.space);
  RunConfig rc = small_config(1);
  rc.budget_search = 1.5;
  try {
    run(rc, b.space, b.suite, adapter);
    FAIL("expected BudgetError");
  } catch (const BudgetError& e) {
    CHECK(e.estimate_units() == doctest::Approx(1.0 + 16.0 * 8 / 60));
  }
}

TEST_CASE("a run stays within budget and its ledger sums to the history") {
  Bench b;
  SimAdapter adapter(b.spec, b.space);
  fixture::TempFile file("harbor-run");
  RunConfig rc = small_config(3);
  rc.history_path = file.str();
  const auto rr = run(rc, b.space, b.suite, adapter);

  double total = 0.0;
  for (const auto& r : rr.history) total += r.total_cost;
  CHECK(total <= rc.budget_search * rr.ledger.unit_cost + 1e-9);
  double phases = 0.0;
  std::size_t evals = 0;
  for (const auto& p : rr.ledger.phases) {
    phases += p.cost;
    evals += p.evaluations;
  }
  CHECK(phases == doctest::Approx(total).epsilon(1e-12));
  CHECK(evals == rr.history.size());
  CHECK(rr.history.front().phase == Phase::baseline);
  CHECK(rr.history.front().fidelity == 60);
  CHECK(rr.ledger.phases[0].units == doctest::Approx(1.0));

  // Every search-phase record used a configured fidelity and passed the safety filter when chosen.
  for (const auto& r : rr.history) {
    if (r.phase == Phase::init) CHECK(r.fidelity == 8);
    if (r.phase == Phase::preflight) CHECK(r.fidelity == 1);
  }
  REQUIRE_FALSE(rr.front.empty());
  for (std::size_t i = 1; i < rr.front.size(); ++i) CHECK(rr.front[i - 1].mu >= rr.front[i].mu);
  for (const auto& p : rr.front) {
    CHECK(p.wilson.low <= p.wilson.high);
    if (p.trials > 0) CHECK(p.wilson.low <= static_cast<double>(p.passes) / p.trials);
  }

  // The file carries the header, every record, and the result line.
  const auto h = read_history(file.str());
  REQUIRE(h.header);
  REQUIRE(h.result);
  CHECK(h.evals.size() == rr.history.size());
  for (std::size_t i = 0; i < h.evals.size(); ++i) {
    const auto back = record_from_json(h.evals[i], b.space);
    CHECK(back.config == rr.history[i].config);
    CHECK(back.total_cost == rr.history[i].total_cost);
    CHECK(back.corrected_target == rr.history[i].corrected_target);
    CHECK(back.phase == rr.history[i].phase);
  }
  const auto again = result_from_json(*h.result, b.space);
  CHECK(again.front.size() == rr.front.size());
  CHECK(again.committed == rr.committed);
  CHECK(again.ledger.total_cost == doctest::Approx(rr.ledger.total_cost));

  const auto text = report_history(file.str(), ReportFormat::text);
  CHECK(text.find("Search-cost accounting") != std::string::npos);
  CHECK(text.find("Block-ANOVA") != std::string::npos);
  const auto machine = Json::parse(report_history(file.str(), ReportFormat::machine));
  CHECK(machine.contains("front"));
}

TEST_CASE("an interrupted history still reports its ledger") {
  Bench b;
  SimAdapter adapter(b.spec, b.space);
  fixture::TempFile full("harbor-full"), cut("harbor-cut");
  RunConfig rc = small_config(4);
  rc.history_path = full.str();
  run(rc, b.space, b.suite, adapter);
  std::ifstream in(full.path);
  std::ofstream out(cut.path);
  std::string line;
  for (int i = 0; i < 10 && std::getline(in, line); ++i) out << line << "\n";
  out.close();
  const auto text = report_history(cut.str(), ReportFormat::text);
  CHECK(text.find("incomplete") != std::string::npos);
  CHECK(text.find("init") != std::string::npos);
}

TEST_CASE("identical settings give identical histories") {
  Bench b;
  fixture::TempFile a("harbor-a"), c("harbor-c");
  for (auto* f : {&a, &c}) {
    SimAdapter adapter(b.spec, b.space);
    RunConfig rc = small_config(9);
    rc.history_path = f->str();
    run(rc, b.space, b.suite, adapter);
  }
  CHECK(fixture::slurp(a.str()) == fixture::slurp(c.str()));
  fixture::TempFile d("harbor-d");
  SimAdapter adapter(b.spec, b.space);
  RunConfig rc = small_config(10);
  rc.history_path = d.str();
  run(rc, b.space, b.suite, adapter);
  CHECK(fixture::slurp(a.str()) != fixture::slurp(d.str()));
}

TEST_CASE("prior histories are imported with inflated variance") {
  Bench b;
  fixture::TempFile prior("harbor-prior");
  {
    SimAdapter adapter(b.spec, b.space);
    RunConfig rc = small_config(5);
    rc.history_path = prior.str();
    run(rc, b.space, b.suite, adapter);
  }
  const auto h = read_history(prior.str());
  const auto meta = load_meta_history({prior.str()}, b.space, 4.0);
  std::size_t expected = 0;
  for (const auto& e : h.evals) expected += e.at("phase") != "preflight";
  REQUIRE(meta.size() == expected);
  const auto first = record_from_json(h.evals[0], b.space);
  CHECK(meta[0].phase == Phase::meta);
  CHECK(meta[0].corrected_variance == doctest::Approx(4.0 * first.corrected_variance));

  SimAdapter adapter(b.spec, b.space);
  RunConfig rc = small_config(6);
  rc.meta_paths = {prior.str()};
  const auto rr = run(rc, b.space, b.suite, adapter);
  std::size_t imported = 0;
  for (const auto& r : rr.history) imported += r.phase == Phase::meta;
  CHECK(imported == expected);
  // Imported cost never counts against this run.
  double own = 0.0;
  for (const auto& r : rr.history)
    if (r.phase != Phase::meta) own += r.total_cost;
  CHECK(rr.ledger.total_cost == doctest::Approx(own));

  const auto other = fixture::boolean_space(3, 3);
  CHECK_THROWS_AS(load_meta_history({prior.str()}, other), MetaHistoryError);
}

TEST_CASE("a silent gate is excluded and pinned off") {
  Bench b;
  const auto compact = b.space.require_index("compact_context");
  b.spec.silent_gates.insert(compact);
  SimAdapter adapter(b.spec, b.space);
  fixture::TempFile file("harbor-silent");
  RunConfig rc = small_config(2);
  rc.history_path = file.str();
  const auto rr = run(rc, b.space, b.suite, adapter);
  REQUIRE(rr.silent.size() == 1);
  CHECK(rr.silent[0].flag == "compact_context");
  CHECK(rr.space->is_excluded(compact));
  for (std::size_t i = rr.silent[0].after_record + 1; i < rr.history.size(); ++i)
    CHECK(rr.history[i].config.levels[compact] == 0);
  bool logged = false;
  for (const auto& e : read_history(file.str()).events) logged = logged || e.value("type", "") == "exclude";
  CHECK(logged);
}

TEST_CASE("the process adapter drives a full run") {
  Bench b;
  ProcessAdapter adapter(std::string(HARBOR_CLI) + " adapter --space " + fixture::data("bool8_space.json") +
                             " --sim " + fixture::data("bool8_sim.json"),
                         b.space);
  SimAdapter local(b.spec, b.space);
  RunConfig rc = small_config(7);
  rc.budget_search = 6;
  const auto remote = run(rc, b.space, b.suite, adapter);
  const auto inproc = run(rc, b.space, b.suite, local);
  REQUIRE(remote.history.size() == inproc.history.size());
  for (std::size_t i = 0; i < remote.history.size(); ++i) {
    CHECK(remote.history[i].config == inproc.history[i].config);
    CHECK(remote.history[i].outcomes == inproc.history[i].outcomes);
  }
}

}
