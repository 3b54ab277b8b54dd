#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "harbor/adapter.hpp"
#include "harbor/record.hpp"

namespace harbor {

enum class SubsetMode { prefix_shuffle, stratified };

std::string_view to_string(SubsetMode mode);
SubsetMode subset_mode_from_string(std::string_view s);

/// Task subset of size m in canonical suite order. Prefix-shuffle subsets are
/// nested across m for a fixed seed; stratified subsets allocate each
/// category its largest-remainder share of m.
std::vector<std::string> fidelity_subset(const TaskSuite& suite, std::size_t m, std::uint64_t seed,
                                         SubsetMode mode = SubsetMode::prefix_shuffle);

/// Draws each (m, seed, mode) subset once and hands back the same list
/// afterwards. Safe to share between threads.
class SubsetCache {
 public:
  explicit SubsetCache(TaskSuite suite) : suite_(std::move(suite)) {}

  const std::vector<std::string>& get(std::size_t m, std::uint64_t seed, SubsetMode mode);
  const TaskSuite& suite() const { return suite_; }

 private:
  TaskSuite suite_;
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::uint64_t, int>, std::vector<std::string>> memo_;
};

struct EvaluateOptions {
  std::size_t parallelism = 4;
  /// Adapter restarts attempted after a transport failure before giving up.
  int transport_retries = 2;
};

/// Runs `tasks` for `config` and assembles the record (corrections left at
/// their defaults). Timed-out tasks count as failures with their cost.
EvaluationRecord evaluate(Adapter& adapter, const FlagSpace& space, const Configuration& config,
                          const std::vector<std::string>& tasks, std::int64_t session_index, std::uint64_t seed,
                          const EvaluateOptions& options = {});

struct Baseline {
  double r0 = 0.0;
  double variance = 0.0;
  EvaluationRecord record;
};

/// Evaluates baseline_config on the full suite; R0 is its pass rate and the
/// variance the binomial p(1-p)/N.
Baseline measure_baseline(Adapter& adapter, const FlagSpace& space, const TaskSuite& suite, std::uint64_t seed,
                          const EvaluateOptions& options = {});

/// Estimated offset of each subset's pass rate from the full suite's,
/// b_m = E[rate on T_m] - E[rate on the suite], keyed by m (the full suite
/// maps to 0). Each record whose tasks cover T_m gives a paired difference;
/// these are pooled against a N(0, tau^2 (1/m - 1/N)) prior, with tau^2 the
/// between-task variance of pass frequencies in `history`. Subsets no record
/// covers get 0. Preflight and imported records are ignored.
std::map<int, double> subset_shifts(const std::vector<EvaluationRecord>& history,
                                    const std::map<int, std::vector<std::string>>& subsets, std::size_t full_size);

/// Whether any warm-dependent flag is enabled; such records advance the
/// session index.
bool primes_session(const Configuration& config, const FlagSpace& space);

}  // namespace harbor
