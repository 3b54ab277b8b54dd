#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harbor/adapter.hpp"
#include "harbor/record.hpp"

namespace harbor {

struct SilentEvidence {
  std::size_t flag = 0;
  std::size_t on_records = 0;
  double mean_consumer = 0.0;
};

/// Flags on in at least n_silent records whose mean summed consumer counter
/// over those records is below epsilon. Flags without consumer bindings and
/// imported records are ignored.
std::vector<SilentEvidence> detect_silent(const std::vector<EvaluationRecord>& history, const FlagSpace& space,
                                          double epsilon = 0.5, std::size_t n_silent = 3);

enum class Verdict { green, yellow, red };

std::string_view to_string(Verdict v);

struct FlagVerdict {
  std::size_t flag = 0;
  Verdict status = Verdict::green;
  std::string reason;
};

struct PreflightResult {
  std::vector<FlagVerdict> verdicts;
  bool passed = false;
  std::string veto_reason;  // empty when passed
  std::optional<EvaluationRecord> record;
};

/// Classifies each enabled flag from one smoke trace: GREEN when a consumer
/// counter fired, YELLOW when silent on a trace shorter than its firing
/// threshold, RED otherwise. `thresholds` overrides the bound fire_turns.
std::vector<FlagVerdict> classify_smoke(const Configuration& config, const FlagSpace& space,
                                        const TelemetrySnapshot& trace,
                                        const std::map<std::size_t, int>& thresholds = {});

/// Runs the smoke task once and classifies it; any RED vetoes. Adapter
/// failures veto with the transport reason.
PreflightResult preflight_smoke(const Configuration& config, Adapter& adapter, const FlagSpace& space,
                                const std::string& smoke_task, std::int64_t session_index, std::uint64_t seed,
                                const std::map<std::size_t, int>& thresholds = {});

struct Anomaly {
  std::size_t record = 0;
  std::size_t flag = 0;
  std::string description;
};

/// Enabled flags that wrote but never consumed in this record. Warm-dependent
/// flags at session 0 are skipped.
std::vector<Anomaly> detect_asymmetry(const EvaluationRecord& record, const FlagSpace& space);

}  // namespace harbor
