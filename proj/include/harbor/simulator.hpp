#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "harbor/flagspace.hpp"
#include "harbor/record.hpp"

namespace harbor {

/// Session index that makes every warm-dependent flag fully primed.
inline constexpr std::int64_t kFullyWarm = std::numeric_limits<std::int64_t>::max();

struct SimTask {
  std::string id;
  double base_logit = 0.0;
  std::string category;
  double base_cost = 1.0;
  int turns = 10;
  bool smoke = false;
};

/// Interaction between one latent coordinate of each of two flags.
struct SimCoupling {
  std::size_t flag_a = 0;
  std::size_t coord_a = 0;
  std::size_t flag_b = 0;
  std::size_t coord_b = 0;
  double weight = 0.0;
};

/// Synthetic ground truth. Effects act on activations u = (x + 1) / 2 of the
/// encoded latents, so a disabled boolean contributes nothing.
struct SimSpec {
  std::vector<SimTask> tasks;
  std::vector<std::vector<double>> linear;  // [flag][coordinate]
  std::vector<SimCoupling> couplings;
  std::vector<double> warm_kappa;           // [flag]; only read for warm flags
  std::vector<double> cost_overhead;        // [flag] per-task cost at full activation
  double cost_noise = 0.0;                  // log-normal sigma, mean preserving
  std::set<std::size_t> silent_gates;
  std::uint64_t seed = 0;
};

struct SimTruth {
  double mean = 0.0;       // expected pass rate over the task list
  double task_cost = 0.0;  // expected per-task cost
};

struct SimTaskResult {
  bool passed = false;
  double cost = 0.0;
  int turns = 0;
  std::map<std::string, double> counters;
};

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

SimSpec parse_sim(const Json& document, const FlagSpace& space);
Json sim_to_json(const SimSpec& spec, const FlagSpace& space);

/// 1 - exp(-n / kappa); kFullyWarm gives exactly 1.
double warm_curve(double kappa, std::int64_t session_index);

/// Exact expected pass rate and per-task cost, averaged over `tasks` (all
/// tasks when empty). No sampling.
SimTruth sim_truth(const SimSpec& spec, const FlagSpace& space, const Configuration& config,
                   std::int64_t session_index, const std::vector<std::size_t>& tasks = {});

SimTaskResult simulate_task(const SimSpec& spec, const FlagSpace& space, const Configuration& config,
                            std::size_t task, std::int64_t session_index, std::uint64_t seed);

TaskSuite suite_of(const SimSpec& spec);
std::size_t task_index(const SimSpec& spec, const std::string& id);

/// The configuration measured as the baseline: warm-dependent flags disabled,
/// everything else at its default.
Configuration baseline_config(const FlagSpace& space);

/// Shifts every base logit by one constant so the baseline's true pass rate
/// equals `target`.
void calibrate_baseline(SimSpec& spec, const FlagSpace& space, double target);

}  // namespace harbor
