#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harbor/flagspace.hpp"

namespace harbor {

/// Counter totals for one evaluation (summed over its tasks).
struct TelemetrySnapshot {
  std::map<std::string, double> counters;
  long turn_count = 0;

  double value(const std::string& name) const {
    auto it = counters.find(name);
    return it == counters.end() ? 0.0 : it->second;
  }
  void add(const std::map<std::string, double>& more) {
    for (const auto& [k, v] : more) counters[k] += v;
  }
};

struct TaskSuite {
  std::vector<std::string> tasks;
  std::map<std::string, std::string> categories;  // optional
  std::optional<std::string> smoke_task;

  std::size_t full_size() const { return tasks.size(); }
  /// Throws when identifiers repeat.
  void validate() const;
};

enum class Phase { baseline, init, search, preflight, meta };

std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view s);

/// One (configuration, fidelity) measurement with its warm-start correction.
struct EvaluationRecord {
  std::size_t index = 0;
  Phase phase = Phase::search;
  Configuration config;
  int fidelity = 0;
  std::vector<std::string> tasks;
  std::vector<std::uint8_t> outcomes;
  std::vector<double> task_costs;
  std::vector<std::uint8_t> timed_out;
  int passes = 0;
  double raw_pass_rate = 0.0;
  double total_cost = 0.0;
  std::int64_t session_index = 0;
  std::uint64_t seed = 0;
  TelemetrySnapshot counters;

  double warm_fraction = 1.0;
  double observation_variance = 0.0;
  double corrected_target = 0.0;
  double corrected_variance = 0.0;
  bool clipped = false;
  bool uninformative = false;
  std::string provenance = "run";

  double mean_task_cost() const { return fidelity > 0 ? total_cost / fidelity : 0.0; }
};

}  // namespace harbor
