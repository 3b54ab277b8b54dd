#include <cstdio>
#include <sstream>

#include "harbor/driver.hpp"
#include "harbor/history.hpp"

namespace harbor {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void text_report(std::ostream& o, const RunResult& rr, const FlagSpace& space) {
  o << "Baseline R0 " << fmt("%.4f", rr.r0) << " (variance " << fmt("%.6f", rr.r0_variance) << "), "
    << fmt("%.4f", rr.baseline_task_cost) << " cost per task\n";
  o << "Stopped: " << rr.stop_reason << " after " << rr.iterations << " iterations\n\n";

  o << "Pareto front (posterior mean, per-task cost, pooled Wilson interval)\n";
  for (std::size_t i = 0; i < rr.front.size(); ++i) {
    const auto& p = rr.front[i];
    o << "  " << i << (rr.committed && *rr.committed == i ? " *" : "  ") << "  mu " << fmt("%.3f", p.mu) << " +- "
      << fmt("%.3f", p.sigma) << "  cost " << fmt("%.4f", p.cost) << "  " << p.passes << "/" << p.trials;
    if (p.trials > 0) o << " [" << fmt("%.3f", p.wilson.low) << ", " << fmt("%.3f", p.wilson.high) << "]";
    o << "  " << p.label << "\n";
  }
  o << "\n";
  if (rr.committed) {
    o << "Committed: " << rr.front[*rr.committed].label << "\n";
  } else {
    o << "Committed: none\n";
  }
  for (const auto& po : rr.preflight) {
    o << "  preflight #" << po.front_index << ": " << (po.passed ? "pass" : "veto");
    if (!po.veto_reason.empty()) o << " (" << po.veto_reason << ")";
    o << "\n";
    for (const auto& v : po.verdicts) o << "    " << to_string(v.status) << "  " << space.flag(v.flag).name << ": " << v.reason << "\n";
  }
  o << "\n";

  o << "Search-cost accounting (units of one full-suite baseline evaluation)\n";
  o << "  phase       evals  fidelity      units\n";
  for (const auto& p : rr.ledger.phases) {
    std::string f;
    for (int m : p.fidelities) f += (f.empty() ? "" : ",") + std::to_string(m);
    char line[160];
    std::snprintf(line, sizeof line, "  %-10s %6zu  %-10s %9.3f\n", std::string(to_string(p.phase)).c_str(),
                  p.evaluations, f.empty() ? "-" : f.c_str(), p.units);
    o << line;
  }
  o << "  total " << fmt("%.3f", rr.ledger.total_units) << " of a nominal " << fmt("%g", rr.ledger.budget_units)
    << "\n\n";

  o << "Block-ANOVA\n";
  for (const auto& a : rr.anova) o << "  " << a.name << " " << fmt("%.3f", a.normalized) << "\n";
  o << "\n";

  if (!rr.silent.empty()) {
    o << "Silent flags\n";
    for (const auto& s : rr.silent)
      o << "  " << s.flag << ": on in " << s.on_records << " records, mean consumer " << fmt("%.3f", s.mean_consumer)
        << ", excluded after record " << s.after_record << "\n";
    o << "\n";
  }
  if (!rr.anomalies.empty()) {
    o << "Counter anomalies\n";
    for (const auto& a : rr.anomalies) o << "  record " << a.record << " " << a.flag << ": " << a.description << "\n";
    o << "\n";
  }
  if (!rr.frozen.empty()) {
    o << "Frozen blocks\n";
    for (const auto& f : rr.frozen) o << "  " << f.block << " at iteration " << f.iteration << " " << f.pins.dump() << "\n";
    o << "\n";
  }
  std::size_t shrinks = 0, kills = 0, grows = 0;
  for (const auto& e : rr.region_events) {
    shrinks += e.kind == "shrink";
    kills += e.kind == "kill";
    grows += e.kind == "grow";
  }
  o << "Trust regions: " << grows << " grown, " << shrinks << " shrunk, " << kills << " killed\n\n";
  o << "Settings " << rr.settings.dump() << "\n";
}

}  // namespace

std::string report(const RunResult& rr, const FlagSpace& space, ReportFormat format) {
  if (format == ReportFormat::machine) return result_to_json(rr, space).dump(2) + "\n";
  std::ostringstream o;
  text_report(o, rr, space);
  return o.str();
}

std::string report_history(const std::string& path, ReportFormat format) {
  const auto h = read_history(path);
  if (!h.header) throw std::runtime_error("'" + path + "' has no run header");
  const auto space = parse_space(h.header->at("space"));
  if (h.result) return report(result_from_json(*h.result, space), space, format);

  // Unfinished run: ledger only.
  RunResult rr;
  rr.stop_reason = "incomplete";
  rr.settings = h.header->value("settings", Json::object());
  std::vector<EvaluationRecord> records;
  double unit = 0.0;
  for (const auto& e : h.evals) {
    records.push_back(record_from_json(e, space));
    if (records.back().phase == Phase::baseline) {
      unit = records.back().total_cost;
      rr.r0 = records.back().raw_pass_rate;
      rr.baseline_task_cost = records.back().mean_task_cost();
    }
  }
  rr.ledger = build_ledger(records, unit, rr.settings.value("budget_search", 0.0));
  return report(rr, space, format);
}

}  // namespace harbor
