#include "harbor/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "harbor/rng.hpp"
#include "harbor/simulator.hpp"

namespace harbor {

void TaskSuite::validate() const {
  std::set<std::string> seen;
  for (const auto& t : tasks) {
    if (!seen.insert(t).second) throw std::invalid_argument("task suite repeats identifier '" + t + "'");
  }
  if (smoke_task && !seen.count(*smoke_task))
    throw std::invalid_argument("smoke task '" + *smoke_task + "' is not in the suite");
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::baseline:
      return "baseline";
    case Phase::init:
      return "init";
    case Phase::search:
      return "search";
    case Phase::preflight:
      return "preflight";
    case Phase::meta:
      return "meta";
  }
  return "unknown";
}

Phase phase_from_string(std::string_view s) {
  for (auto p : {Phase::baseline, Phase::init, Phase::search, Phase::preflight, Phase::meta}) {
    if (to_string(p) == s) return p;
  }
  throw std::invalid_argument("unknown phase '" + std::string(s) + "'");
}

std::string_view to_string(SubsetMode mode) {
  return mode == SubsetMode::stratified ? "stratified" : "prefix-shuffle";
}

SubsetMode subset_mode_from_string(std::string_view s) {
  if (s == "stratified") return SubsetMode::stratified;
  if (s == "prefix-shuffle" || s == "prefix") return SubsetMode::prefix_shuffle;
  throw std::invalid_argument("unknown subset mode '" + std::string(s) + "'");
}

namespace {

// Fisher-Yates with our own uniform draw so the permutation does not depend
// on the standard library's distribution implementation.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(p[i - 1], p[std::min(j, i - 1)]);
  }
  return p;
}

}  // namespace

std::vector<std::string> fidelity_subset(const TaskSuite& suite, std::size_t m, std::uint64_t seed,
                                         SubsetMode mode) {
  const auto n = suite.full_size();
  if (m < 1 || m > n) throw std::invalid_argument("fidelity must lie in [1, suite size]");
  if (m == n) return suite.tasks;

  std::vector<std::size_t> chosen;
  if (mode == SubsetMode::prefix_shuffle) {
    auto perm = seeded_permutation(n, derive_seed(seed, {0x5b5e7ULL}));
    chosen.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
  } else {
    if (suite.categories.empty()) throw std::invalid_argument("stratified subsets need task categories");
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
      auto it = suite.categories.find(suite.tasks[i]);
      if (it == suite.categories.end())
        throw std::invalid_argument("task '" + suite.tasks[i] + "' has no category");
      members[it->second].push_back(i);
    }
    // Largest-remainder apportionment; ties go to the earlier category name.
    std::vector<std::pair<std::string, std::size_t>> quota;
    std::vector<std::tuple<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (const auto& [cat, idx] : members) {
      const double exact = static_cast<double>(m) * static_cast<double>(idx.size()) / static_cast<double>(n);
      const auto base = static_cast<std::size_t>(exact);
      remainders.emplace_back(exact - static_cast<double>(base), quota.size());
      quota.emplace_back(cat, base);
      assigned += base;
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    for (std::size_t r = 0; assigned < m; ++r, ++assigned) ++quota[std::get<1>(remainders[r])].second;

    for (const auto& [cat, k] : quota) {
      const auto& idx = members[cat];
      auto perm = seeded_permutation(idx.size(), derive_seed(seed, {0x57a7ULL, hash_string(cat)}));
      for (std::size_t j = 0; j < k; ++j) chosen.push_back(idx[perm[j]]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::string> out;
  out.reserve(m);
  for (auto i : chosen) out.push_back(suite.tasks[i]);
  return out;
}

const std::vector<std::string>& SubsetCache::get(std::size_t m, std::uint64_t seed, SubsetMode mode) {
  std::lock_guard lock(mutex_);
  auto key = std::make_tuple(m, seed, static_cast<int>(mode));
  auto it = memo_.find(key);
  if (it == memo_.end()) it = memo_.emplace(key, fidelity_subset(suite_, m, seed, mode)).first;
  return it->second;
}

EvaluationRecord evaluate(Adapter& adapter, const FlagSpace& space, const Configuration& config,
                          const std::vector<std::string>& tasks, std::int64_t session_index, std::uint64_t seed,
                          const EvaluateOptions& options) {
  if (tasks.empty()) throw std::invalid_argument("evaluate: empty task list");
  space.validate(config);

  std::vector<TaskResult> results;
  for (int attempt = 0;; ++attempt) {
    try {
      results = adapter.run_tasks(config, tasks, session_index, seed, options.parallelism);
      break;
    } catch (const AdapterTransportError&) {
      if (attempt >= options.transport_retries) throw;
      adapter.restart();
    }
  }
  if (results.size() != tasks.size())
    throw AdapterProtocolError("adapter returned the wrong number of results", std::to_string(results.size()));

  EvaluationRecord r;
  r.config = config;
  r.fidelity = static_cast<int>(tasks.size());
  r.tasks = tasks;
  r.session_index = session_index;
  r.seed = seed;
  r.outcomes.reserve(tasks.size());
  r.task_costs.reserve(tasks.size());
  r.timed_out.reserve(tasks.size());
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const auto& t = results[k];
    if (t.task_id != tasks[k]) throw AdapterProtocolError("result order does not match request order", t.task_id);
    r.outcomes.push_back(t.passed ? 1 : 0);
    r.task_costs.push_back(t.cost);
    r.timed_out.push_back(t.timed_out ? 1 : 0);
    r.passes += t.passed ? 1 : 0;
    r.total_cost += t.cost;
    r.counters.add(t.counters);
    r.counters.turn_count += t.turns;
  }
  r.raw_pass_rate = static_cast<double>(r.passes) / static_cast<double>(r.fidelity);
  return r;
}

namespace {

bool paired_usable(const EvaluationRecord& r) {
  return r.phase != Phase::preflight && r.phase != Phase::meta && !r.outcomes.empty();
}

// Method-of-moments spread of per-task pass probabilities: variance of the
// observed frequencies minus their mean binomial sampling variance.
double between_task_variance(const std::vector<EvaluationRecord>& history) {
  std::map<std::string, std::pair<double, double>> freq;  // passes, runs
  for (const auto& r : history) {
    if (!paired_usable(r)) continue;
    for (std::size_t k = 0; k < r.tasks.size() && k < r.outcomes.size(); ++k) {
      auto& f = freq[r.tasks[k]];
      f.first += r.outcomes[k];
      f.second += 1.0;
    }
  }
  double sum = 0.0, sumsq = 0.0, noise = 0.0, count = 0.0;
  for (const auto& [task, f] : freq) {
    if (f.second < 2.0) continue;
    const double p = f.first / f.second;
    sum += p;
    sumsq += p * p;
    noise += p * (1.0 - p) / (f.second - 1.0);
    count += 1.0;
  }
  if (count < 2.0) return 0.0;
  const double mean = sum / count;
  const double var = (sumsq - count * mean * mean) / (count - 1.0);
  return std::max(var - noise / count, 0.0);
}

}  // namespace

std::map<int, double> subset_shifts(const std::vector<EvaluationRecord>& history,
                                    const std::map<int, std::vector<std::string>>& subsets, std::size_t full_size) {
  std::map<int, double> shift;
  const double tau2 = between_task_variance(history);
  const double n_full = static_cast<double>(full_size);
  // Largest subsets first so a covering record's own offset is known.
  for (auto it = subsets.rbegin(); it != subsets.rend(); ++it) {
    const auto& [m, tasks] = *it;
    if (static_cast<std::size_t>(m) >= full_size || tasks.empty()) {
      shift[m] = 0.0;
      continue;
    }
    const std::set<std::string> members(tasks.begin(), tasks.end());
    const double inv_m = 1.0 / static_cast<double>(tasks.size());
    double num = 0.0, prec = 0.0;
    for (const auto& r : history) {
      if (!paired_usable(r) || r.tasks.size() <= tasks.size()) continue;
      double in = 0.0, all = 0.0, hits = 0.0;
      for (std::size_t k = 0; k < r.tasks.size() && k < r.outcomes.size(); ++k) {
        all += r.outcomes[k];
        if (members.count(r.tasks[k])) {
          in += r.outcomes[k];
          hits += 1.0;
        }
      }
      if (hits < static_cast<double>(tasks.size())) continue;  // does not cover T_m
      const double size = static_cast<double>(r.tasks.size());
      const double p = std::clamp(all / size, 0.05, 0.95);
      const double v = p * (1.0 - p) * (inv_m - 1.0 / size);
      auto own = shift.find(r.fidelity);
      const double base = own == shift.end() ? 0.0 : own->second;
      num += (base + in * inv_m - all / size) / v;
      prec += 1.0 / v;
    }
    const double prior = tau2 * (inv_m - 1.0 / n_full);
    shift[m] = prior > 0.0 && prec > 0.0 ? num / (prec + 1.0 / prior) : 0.0;
  }
  return shift;
}

Baseline measure_baseline(Adapter& adapter, const FlagSpace& space, const TaskSuite& suite, std::uint64_t seed,
                          const EvaluateOptions& options) {
  Baseline b;
  b.record = evaluate(adapter, space, space.pin(baseline_config(space)), suite.tasks, 0, seed, options);
  b.record.phase = Phase::baseline;
  b.r0 = b.record.raw_pass_rate;
  b.variance = b.r0 * (1.0 - b.r0) / static_cast<double>(suite.full_size());
  return b;
}

bool primes_session(const Configuration& config, const FlagSpace& space) {
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.flag(i).warm_dependent && space.flag(i).enabled(config.levels[i])) return true;
  }
  return false;
}

}  // namespace harbor
