#include "harbor/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "harbor/rng.hpp"
#include "harbor/stats.hpp"

namespace harbor {

namespace {

struct NormalDraws {
  std::vector<double> mu;
  std::vector<double> cost;
};

// Stratified standard-normal pairs: each margin hits every 1/S quantile cell
// once, cells paired by independent permutations.
NormalDraws stratified_normals(std::size_t samples, std::uint64_t seed) {
  NormalDraws d;
  d.mu.resize(samples);
  d.cost.resize(samples);
  Rng rng(derive_seed(seed, {0xe4b1ULL}));
  auto fill = [&](std::vector<double>& out) {
    std::vector<std::size_t> perm(samples);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = samples; i > 1; --i) {
      const auto j = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)), i - 1);
      std::swap(perm[i - 1], perm[j]);
    }
    for (std::size_t i = 0; i < samples; ++i) {
      double u = (static_cast<double>(perm[i]) + uniform01(rng)) / static_cast<double>(samples);
      u = std::clamp(u, 1e-12, 1.0 - 1e-12);
      out[i] = normal_quantile(u);
    }
  };
  fill(d.mu);
  fill(d.cost);
  return d;
}

double ehvi_with(const NormalDraws& d, double mu_mean, double mu_sd, double cost_mean, double cost_sd,
                 const ParetoFront& front) {
  if (d.mu.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < d.mu.size(); ++i) {
    const double mu = mu_mean + mu_sd * d.mu[i];
    const double cost = std::max(cost_mean + cost_sd * d.cost[i], 0.0);
    sum += hypervolume_improvement(front, mu, cost);
  }
  return sum / static_cast<double>(d.mu.size());
}

}  // namespace

std::vector<FrontPoint> non_dominated(std::vector<FrontPoint> points) {
  std::stable_sort(points.begin(), points.end(), [](const FrontPoint& a, const FrontPoint& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.mu > b.mu;
  });
  std::vector<FrontPoint> out;
  double best_mu = -std::numeric_limits<double>::infinity();
  for (auto& p : points) {
    // Sorted by cost then mu descending: a point survives only by beating
    // every cheaper (or equally cheap) point's mu.
    if (p.mu > best_mu) {
      best_mu = p.mu;
      out.push_back(std::move(p));
    }
  }
  return out;
}

ParetoFront make_front(int fidelity, std::vector<FrontPoint> points, double mu_ref, double cost_ref) {
  ParetoFront f;
  f.fidelity = fidelity;
  f.points = non_dominated(std::move(points));
  f.mu_ref = mu_ref;
  f.cost_ref = cost_ref;
  return f;
}

double hypervolume(const std::vector<FrontPoint>& points, double mu_ref, double cost_ref) {
  auto front = non_dominated(points);
  double area = 0.0;
  double h = mu_ref;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const double x = front[i].cost;
    if (x >= cost_ref) break;
    h = std::max(h, front[i].mu);
    const double next = i + 1 < front.size() ? std::min(front[i + 1].cost, cost_ref) : cost_ref;
    area += (h - mu_ref) * (next - x);
  }
  return area;
}

double hypervolume_improvement(const ParetoFront& front, double mu, double cost) {
  if (mu <= front.mu_ref || cost >= front.cost_ref) return 0.0;
  const auto& pts = front.points;
  double h = front.mu_ref;
  std::size_t i = 0;
  while (i < pts.size() && pts[i].cost <= cost) h = std::max(h, pts[i++].mu);
  double gain = 0.0;
  double x = cost;
  while (x < front.cost_ref && mu > h) {
    const double next = i < pts.size() ? std::min(pts[i].cost, front.cost_ref) : front.cost_ref;
    gain += (mu - h) * (next - x);
    x = next;
    if (i < pts.size()) h = std::max(h, pts[i++].mu);
  }
  return gain;
}

double ehvi(double mu_mean, double mu_sd, double cost_mean, double cost_sd, const ParetoFront& front,
            const EhviOptions& options) {
  if (options.samples == 0) throw std::invalid_argument("ehvi: samples must be at least 1");
  return ehvi_with(stratified_normals(options.samples, options.seed), mu_mean, std::max(mu_sd, 0.0), cost_mean,
                   std::max(cost_sd, 0.0), front);
}

double ehvi(const Configuration& candidate, const Surrogate& s, const CostModel& cost, const ParetoFront& front,
            const EhviOptions& options) {
  const auto p = s.predict(candidate);
  return ehvi(p.mean, p.stddev, cost.predict(candidate, s.space()), cost.residual_sd(), front, options);
}

bool is_safe(const Prediction& p, const SafetyParams& safety) {
  const double z = normal_quantile(1.0 - safety.eta);
  return p.mean - z * p.stddev >= safety.r0 - safety.delta;
}

std::vector<Configuration> safety_filter(const std::vector<Configuration>& candidates, const Surrogate& s,
                                         const SafetyParams& safety) {
  if (safety.delta < 0.0 || !(safety.eta > 0.0 && safety.eta <= 0.5))
    throw std::invalid_argument("safety_filter: need delta >= 0 and eta in (0, 0.5]");
  const auto pred = s.predict_many(candidates);
  std::vector<Configuration> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (is_safe(pred[i], safety)) out.push_back(candidates[i]);
  }
  return out;
}

GreedyBatch greedy_batch(const std::vector<Configuration>& configs, const std::vector<ScoredCandidate>& scored, int m,
                         std::size_t q, double d_div) {
  GreedyBatch out;
  const auto n = configs.size();
  std::vector<bool> taken(n, false);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  double gain = 0.0, spend = 0.0;
  const double mm = static_cast<double>(m);
  for (std::size_t round = 0; round < std::min(q, n); ++round) {
    std::size_t best = n;
    double best_score = -1.0, best_tie = 0.0, best_mult = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double mult = d_div > 0.0 ? std::min(1.0, min_dist[i] / d_div) : 1.0;
      const double score = scored[i].ehvi / (mm * std::max(scored[i].cost, 1e-12)) * mult;
      const double tie = scored[i].tiebreak * mult;
      if (best == n || score > best_score || (score == best_score && tie > best_tie)) {
        best = i;
        best_score = score;
        best_tie = tie;
        best_mult = mult;
      }
    }
    taken[best] = true;
    out.picks.push_back(best);
    out.multipliers.push_back(best_mult);
    gain += scored[best].ehvi * best_mult;
    spend += mm * std::max(scored[best].cost, 1e-12);
    for (std::size_t i = 0; i < n; ++i)
      min_dist[i] = std::min(min_dist[i], static_cast<double>(hamming_distance(configs[i], configs[best])));
  }
  out.score = spend > 0.0 ? gain / spend : 0.0;
  return out;
}

std::vector<Configuration> region_pool(const Configuration& center, std::size_t radius, const FlagSpace& space,
                                       std::size_t cap, std::uint64_t seed) {
  const auto free = space.free_flags();
  radius = std::min(radius, free.size());
  if (radius == 0) return {};
  if (hamming_ball_size(center, space, radius) <= cap) return hamming_neighbors(center, space, radius);

  // Shell k drawn with probability proportional to its size, then a uniform
  // k-subset of free flags each moved to a uniformly chosen other level.
  std::vector<double> shell(radius + 1, 0.0);
  for (std::size_t k = 1; k <= radius; ++k)
    shell[k] = static_cast<double>(hamming_ball_size(center, space, k)) -
               static_cast<double>(hamming_ball_size(center, space, k - 1));
  const double total = std::accumulate(shell.begin(), shell.end(), 0.0);

  Rng rng(derive_seed(seed, {0x9001ULL}));
  std::set<Configuration> seen;
  std::vector<Configuration> out;
  for (std::size_t attempt = 0; out.size() < cap && attempt < 20 * cap; ++attempt) {
    double u = uniform01(rng) * total;
    std::size_t k = 1;
    while (k < radius && u >= shell[k]) u -= shell[k++];
    auto flags = free;
    for (std::size_t j = 0; j < k; ++j) {
      const auto pick = j + std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(flags.size() - j)),
                                     flags.size() - j - 1);
      std::swap(flags[j], flags[pick]);
    }
    Configuration c = center;
    for (std::size_t j = 0; j < k; ++j) {
      const auto f = flags[j];
      const auto levels = space.flag(f).level_count();
      auto step = 1 + std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(levels - 1)), levels - 2);
      c.levels[f] = static_cast<Level>((c.levels[f] + step) % levels);
    }
    if (seen.insert(c).second) out.push_back(std::move(c));
  }
  return out;
}

BatchSelection select_batch(const TrustRegion& region, const FlagSpace& space, const Surrogate& s,
                            const CostModel& cost, const std::map<int, ParetoFront>& fronts,
                            const std::vector<int>& fidelities, const SafetyParams& safety,
                            const BatchOptions& options, std::uint64_t seed) {
  if (options.q < 1) throw std::invalid_argument("select_batch: q must be at least 1");
  if (fidelities.empty()) throw std::invalid_argument("select_batch: no fidelities");
  if (!region.alive) throw std::invalid_argument("select_batch: region is dead");

  BatchSelection sel;
  const auto center = space.pin(region.center);
  auto pool = region_pool(center, region.radius, space, options.pool_cap, derive_seed(seed, {0x9001ULL}));
  pool = safety_filter(pool, s, safety);
  sel.pool_size = pool.size();
  if (pool.empty()) {
    sel.status = BatchStatus::empty_pool;
    return sel;
  }

  const auto pred = s.predict_many(pool);
  std::vector<double> unit_cost(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) unit_cost[i] = cost.predict(pool[i], space);
  const auto draws = stratified_normals(std::max<std::size_t>(options.ehvi_samples, 1), derive_seed(seed, {0xe4b1ULL}));
  const double margin = options.cost_margin_sd * cost.residual_sd();

  struct Option {
    int m;
    std::vector<Configuration> configs;
    std::vector<ScoredCandidate> scored;
    GreedyBatch batch;
  };
  std::vector<Option> opts;
  for (int m : fidelities) {
    auto it = fronts.find(m);
    if (it == fronts.end()) throw std::invalid_argument("select_batch: no front for fidelity " + std::to_string(m));
    Option o;
    o.m = m;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (options.skip && options.skip->count({pool[i], m})) continue;
      o.configs.push_back(pool[i]);
      ScoredCandidate sc;
      sc.ehvi = ehvi_with(draws, pred[i].mean, pred[i].stddev, unit_cost[i], cost.residual_sd(), it->second);
      sc.cost = unit_cost[i];
      sc.tiebreak = pred[i].mean + pred[i].stddev;
      o.scored.push_back(sc);
    }
    if (o.configs.empty()) continue;
    o.batch = greedy_batch(o.configs, o.scored, m, options.q, options.d_div);
    opts.push_back(std::move(o));
  }
  if (opts.empty()) {
    sel.status = BatchStatus::empty_pool;
    return sel;
  }
  // Best ratio first; equal ratios prefer the cheaper fidelity.
  std::stable_sort(opts.begin(), opts.end(), [](const Option& a, const Option& b) {
    if (a.batch.score != b.batch.score) return a.batch.score > b.batch.score;
    return a.m < b.m;
  });

  for (const auto& o : opts) {
    double predicted = 0.0;
    std::size_t fit = 0;
    for (std::size_t j = 0; j < o.batch.picks.size(); ++j) {
      const double c = static_cast<double>(o.m) * (o.scored[o.batch.picks[j]].cost + margin);
      if (predicted + c > options.remaining_budget) break;
      predicted += c;
      fit = j + 1;
    }
    if (fit == 0) continue;
    sel.fidelity = o.m;
    double gain = 0.0, spend = 0.0;
    for (std::size_t j = 0; j < fit; ++j) {
      const auto idx = o.batch.picks[j];
      sel.configs.push_back(o.configs[idx]);
      sel.ehvi.push_back(o.scored[idx].ehvi);
      gain += o.scored[idx].ehvi * o.batch.multipliers[j];
      spend += static_cast<double>(o.m) * std::max(o.scored[idx].cost, 1e-12);
    }
    sel.score = gain / spend;
    sel.predicted_cost = predicted;
    return sel;
  }
  sel.status = BatchStatus::infeasible;
  return sel;
}

}  // namespace harbor
