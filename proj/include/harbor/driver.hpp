#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "harbor/acquisition.hpp"
#include "harbor/adapter.hpp"
#include "harbor/evaluator.hpp"
#include "harbor/stats.hpp"
#include "harbor/surrogate.hpp"
#include "harbor/telemetry.hpp"
#include "harbor/trust_region.hpp"

namespace harbor {

struct RunConfig {
  /// Search budget in full-suite baseline evaluations.
  double budget_search = 10.0;
  /// Deployment ceiling on expected per-task cost.
  double budget_deploy = std::numeric_limits<double>::infinity();
  double delta = 0.05;
  double eta = 0.1;
  /// Ascending; the largest must be the suite size. Empty picks defaults.
  std::vector<int> fidelities;
  std::size_t batch = 1;
  std::size_t regions = 3;
  std::size_t sobol = 32;
  std::uint64_t seed = 0;
  std::size_t parallelism = 4;
  std::string history_path;
  std::vector<std::string> meta_paths;
  double lambda_meta = 4.0;

  RidgePenalties penalties;
  TrustRegionParams trust;
  std::size_t n_min = 8;
  double collapse_ratio = 1e-3;
  double silent_epsilon = 0.5;
  std::size_t n_silent = 3;
  std::size_t ehvi_samples = 128;
  std::size_t pool_cap = 1024;
  double d_div = 2.0;
  std::size_t preflight_candidates = 3;
  std::size_t max_iterations = 1000;
  SubsetMode subset_mode = SubsetMode::prefix_shuffle;
  double wilson_level = 0.90;
  double default_kappa = 2.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate(std::size_t suite_size) const;
};

Json run_config_to_json(const RunConfig& rc);

/// {8, 22, 44, N} restricted to values below N, plus N.
std::vector<int> default_fidelities(std::size_t suite_size);

class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, double estimate_units)
      : std::runtime_error(what), estimate_(estimate_units) {}
  double estimate_units() const { return estimate_; }

 private:
  double estimate_;
};

class MetaHistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhaseLedger {
  Phase phase = Phase::search;
  std::size_t evaluations = 0;
  std::vector<int> fidelities;  // distinct, ascending
  double cost = 0.0;
  double units = 0.0;
};

struct BudgetLedger {
  double unit_cost = 0.0;  // cost of one full-suite baseline evaluation
  double budget_units = 0.0;
  std::vector<PhaseLedger> phases;
  double total_cost = 0.0;
  double total_units = 0.0;
};

/// Ledger of the run's own evaluations (imported records excluded).
BudgetLedger build_ledger(const std::vector<EvaluationRecord>& history, double unit_cost, double budget_units);

struct ResultPoint {
  Configuration config;
  Json assignment;
  std::string label;
  double mu = 0.0;     // posterior mean, clamped to [0, 1]
  double sigma = 0.0;
  double cost = 0.0;   // predicted per-task cost
  long passes = 0;
  long trials = 0;
  Interval wilson;
};

struct PreflightOutcome {
  std::size_t front_index = 0;
  bool passed = false;
  std::string veto_reason;
  std::vector<FlagVerdict> verdicts;
};

struct SilentEntry {
  std::string flag;
  std::size_t on_records = 0;
  double mean_consumer = 0.0;
  std::size_t after_record = 0;
};

struct AnomalyEntry {
  std::size_t record = 0;
  std::string flag;
  std::string description;
};

struct FrozenEntry {
  std::size_t iteration = 0;
  std::string block;
  Json pins;
};

struct RegionEvent {
  std::size_t iteration = 0;
  std::size_t region = 0;
  std::string kind;  // spawn, grow, shrink, kill, move
  std::size_t radius = 0;
};

struct RunResult {
  std::vector<ResultPoint> front;  // descending posterior mean
  std::optional<std::size_t> committed;
  std::vector<PreflightOutcome> preflight;
  BudgetLedger ledger;
  std::vector<AnovaEntry> anova;
  std::vector<SilentEntry> silent;
  std::vector<AnomalyEntry> anomalies;
  std::vector<FrozenEntry> frozen;
  std::vector<RegionEvent> region_events;
  double r0 = 0.0;
  double r0_variance = 0.0;
  double baseline_task_cost = 0.0;
  double mu_ref = 0.0;
  double cost_ref = 0.0;
  std::size_t iterations = 0;
  std::string stop_reason;
  Json settings;

  std::vector<EvaluationRecord> history;
  std::optional<FlagSpace> space;  // with the run's final exclusions
};

/// Full search loop: baseline, Sobol init, trust-region batches until the
/// search budget is spent, then the safe affordable front and a preflight
/// commit. Deterministic in the RunConfig and adapter.
RunResult run(const RunConfig& rc, const FlagSpace& space, const TaskSuite& suite, Adapter& adapter);

/// Safe, affordable, non-dominated evaluated configurations under the
/// posterior, sorted by descending mean. Falls back to `baseline` alone.
std::vector<ResultPoint> pareto_front(const std::vector<EvaluationRecord>& history, const Surrogate& s,
                                      const CostModel& cost, double budget_deploy, const SafetyParams& safety,
                                      const FlagSpace& space, const Configuration& baseline,
                                      double wilson_level = 0.90);

/// Imports prior runs' records projected onto `space`; variances are scaled
/// by lambda_meta and records are marked as imported.
std::vector<EvaluationRecord> load_meta_history(const std::vector<std::string>& paths, const FlagSpace& space,
                                                double lambda_meta = 4.0);

Json result_to_json(const RunResult& rr, const FlagSpace& space);
RunResult result_from_json(const Json& j, const FlagSpace& space);

enum class ReportFormat { text, machine };

std::string report(const RunResult& rr, const FlagSpace& space, ReportFormat format);

/// Report for a history file: uses its result line, or rebuilds the ledger
/// from the evaluation lines of an unfinished run.
std::string report_history(const std::string& path, ReportFormat format);

}  // namespace harbor
