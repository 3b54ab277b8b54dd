#include "harbor/telemetry.hpp"

#include <sstream>

#include "harbor/evaluator.hpp"

namespace harbor {

namespace {
double summed(const TelemetrySnapshot& s, const std::vector<std::string>& names) {
  double v = 0.0;
  for (const auto& n : names) v += s.value(n);
  return v;
}
}  // namespace

std::vector<SilentEvidence> detect_silent(const std::vector<EvaluationRecord>& history, const FlagSpace& space,
                                          double epsilon, std::size_t n_silent) {
  std::vector<SilentEvidence> out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& f = space.flag(i);
    if (f.counters.consume.empty()) continue;
    SilentEvidence ev;
    ev.flag = i;
    double total = 0.0;
    for (const auto& r : history) {
      if (r.phase == Phase::meta || !f.enabled(r.config.levels[i])) continue;
      ++ev.on_records;
      total += summed(r.counters, f.counters.consume);
    }
    if (ev.on_records < n_silent) continue;
    ev.mean_consumer = total / static_cast<double>(ev.on_records);
    if (ev.mean_consumer < epsilon) out.push_back(ev);
  }
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::green:
      return "GREEN";
    case Verdict::yellow:
      return "YELLOW";
    case Verdict::red:
      return "RED";
  }
  return "?";
}

std::vector<FlagVerdict> classify_smoke(const Configuration& config, const FlagSpace& space,
                                        const TelemetrySnapshot& trace, const std::map<std::size_t, int>& thresholds) {
  std::vector<FlagVerdict> out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& f = space.flag(i);
    if (!f.enabled(config.levels[i])) continue;
    FlagVerdict v;
    v.flag = i;
    if (f.counters.consume.empty()) {
      v.status = Verdict::green;
      v.reason = "unbound";
      out.push_back(std::move(v));
      continue;
    }
    auto it = thresholds.find(i);
    const int threshold = it != thresholds.end() ? it->second : f.counters.fire_turns;
    const double fired = summed(trace, f.counters.consume);
    std::ostringstream why;
    if (fired > 0.0) {
      v.status = Verdict::green;
      why << "consumer counters " << fired;
    } else if (trace.turn_count < threshold) {
      v.status = Verdict::yellow;
      why << "no consumer activity in " << trace.turn_count << " turns, needs " << threshold;
    } else {
      v.status = Verdict::red;
      why << "no consumer activity in " << trace.turn_count << " turns (threshold " << threshold << ")";
    }
    v.reason = why.str();
    out.push_back(std::move(v));
  }
  return out;
}

PreflightResult preflight_smoke(const Configuration& config, Adapter& adapter, const FlagSpace& space,
                                const std::string& smoke_task, std::int64_t session_index, std::uint64_t seed,
                                const std::map<std::size_t, int>& thresholds) {
  PreflightResult res;
  try {
    EvaluateOptions opt;
    opt.parallelism = 1;
    auto rec = evaluate(adapter, space, config, {smoke_task}, session_index, seed, opt);
    rec.phase = Phase::preflight;
    res.verdicts = classify_smoke(config, space, rec.counters, thresholds);
    res.record = std::move(rec);
  } catch (const AdapterTransportError& e) {
    res.veto_reason = std::string("smoke evaluation failed: ") + e.what();
    return res;
  }
  res.passed = true;
  for (const auto& v : res.verdicts) {
    if (v.status == Verdict::red) {
      res.passed = false;
      if (!res.veto_reason.empty()) res.veto_reason += "; ";
      res.veto_reason += space.flag(v.flag).name + " RED: " + v.reason;
    }
  }
  return res;
}

std::vector<Anomaly> detect_asymmetry(const EvaluationRecord& record, const FlagSpace& space) {
  std::vector<Anomaly> out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& f = space.flag(i);
    if (!f.enabled(record.config.levels[i]) || f.counters.write.empty() || f.counters.consume.empty()) continue;
    // A cold warm-dependent flag is expected to write without reading.
    if (f.warm_dependent && record.session_index <= 0) continue;
    const double writes = summed(record.counters, f.counters.write);
    const double reads = summed(record.counters, f.counters.consume);
    if (writes > 0.0 && reads == 0.0) {
      std::ostringstream d;
      d << "write-side counters " << writes << " with zero consumer counters";
      out.push_back({record.index, i, d.str()});
    }
  }
  return out;
}

}  // namespace harbor
