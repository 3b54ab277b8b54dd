#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "harbor/flagspace.hpp"
#include "harbor/surrogate.hpp"
#include "harbor/trust_region.hpp"

namespace harbor {

struct FrontPoint {
  double mu = 0.0;
  double cost = 0.0;  // per task
  Configuration config;
};

/// Non-dominated (maximise mu, minimise cost) points at one fidelity, with
/// the hypervolume reference point.
struct ParetoFront {
  int fidelity = 0;
  std::vector<FrontPoint> points;  // sorted by ascending cost
  double mu_ref = 0.0;
  double cost_ref = 1.0;
};

/// Non-dominated subset sorted by ascending cost; exact duplicates in both
/// objectives keep the first occurrence.
std::vector<FrontPoint> non_dominated(std::vector<FrontPoint> points);

ParetoFront make_front(int fidelity, std::vector<FrontPoint> points, double mu_ref, double cost_ref);

/// Area dominated by the points and bounded by the reference point.
double hypervolume(const std::vector<FrontPoint>& points, double mu_ref, double cost_ref);

/// Hypervolume gained by adding (mu, cost) to the front.
double hypervolume_improvement(const ParetoFront& front, double mu, double cost);

struct EhviOptions {
  std::size_t samples = 256;
  std::uint64_t seed = 0;
};

/// Monte-Carlo EHVI with independent Gaussian mu and cost draws, stratified
/// Latin-hypercube style over the sample count. Deterministic in the seed.
double ehvi(double mu_mean, double mu_sd, double cost_mean, double cost_sd, const ParetoFront& front,
            const EhviOptions& options);

double ehvi(const Configuration& candidate, const Surrogate& s, const CostModel& cost, const ParetoFront& front,
            const EhviOptions& options);

struct SafetyParams {
  double r0 = 0.0;
  double delta = 0.05;
  double eta = 0.1;
};

/// mu - z_{1-eta} sigma >= r0 - delta.
bool is_safe(const Prediction& p, const SafetyParams& safety);

std::vector<Configuration> safety_filter(const std::vector<Configuration>& candidates, const Surrogate& s,
                                         const SafetyParams& safety);

struct BatchOptions {
  std::size_t q = 1;
  std::size_t pool_cap = 1024;
  double d_div = 2.0;
  std::size_t ehvi_samples = 256;
  /// Remaining search budget in cost units; infinity disables the check.
  double remaining_budget = 1e300;
  /// Predicted per-task cost carries this many residual sds of margin.
  double cost_margin_sd = 3.0;
  /// Optional (configuration, fidelity) pairs never proposed again.
  const std::set<std::pair<Configuration, int>>* skip = nullptr;
};

enum class BatchStatus { ok, empty_pool, infeasible };

struct BatchSelection {
  BatchStatus status = BatchStatus::ok;
  std::vector<Configuration> configs;
  std::vector<double> ehvi;
  int fidelity = 0;
  double score = 0.0;
  double predicted_cost = 0.0;  // with margin
  std::size_t pool_size = 0;
};

struct ScoredCandidate {
  double ehvi = 0.0;
  double cost = 0.0;      // predicted per-task cost
  double tiebreak = 0.0;  // breaks exact score ties (larger wins)
};

struct GreedyBatch {
  std::vector<std::size_t> picks;
  std::vector<double> multipliers;
  double score = 0.0;  // sum(ehvi * multiplier) / sum(m * cost)
};

/// Greedy diverse batch over pre-scored candidates at fidelity m.
GreedyBatch greedy_batch(const std::vector<Configuration>& configs, const std::vector<ScoredCandidate>& scored, int m,
                         std::size_t q, double d_div);

/// Candidates inside the punctured Hamming ball around the centre, sampled
/// when the ball exceeds the cap. Deterministic in the seed.
std::vector<Configuration> region_pool(const Configuration& center, std::size_t radius, const FlagSpace& space,
                                       std::size_t cap, std::uint64_t seed);

/// Per fidelity, greedily picks q candidates by EHVI per unit cost damped by
/// min(1, hamming-to-selected / d_div); returns the fidelity with the best
/// batch ratio that fits the remaining budget.
BatchSelection select_batch(const TrustRegion& region, const FlagSpace& space, const Surrogate& s,
                            const CostModel& cost, const std::map<int, ParetoFront>& fronts,
                            const std::vector<int>& fidelities, const SafetyParams& safety,
                            const BatchOptions& options, std::uint64_t seed);

}  // namespace harbor
