#include "harbor/warmstart.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

namespace harbor {

WarmupModel::WarmupModel(std::vector<bool> warm_dependent, std::vector<WarmCurve> curves, double prior_floor)
    : warm_(std::move(warm_dependent)), curves_(std::move(curves)), prior_floor_(prior_floor) {
  if (warm_.size() != curves_.size()) throw std::invalid_argument("warm model size mismatch");
  for (const auto& c : curves_) {
    if (!(c.kappa > 0.0)) throw std::invalid_argument("warm curve kappa must be positive");
  }
}

WarmupModel WarmupModel::defaults(const FlagSpace& space, double kappa, double prior_floor) {
  std::vector<bool> warm(space.size());
  std::vector<WarmCurve> curves(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    warm[i] = space.flag(i).warm_dependent;
    curves[i].kappa = kappa;
  }
  return WarmupModel(std::move(warm), std::move(curves), prior_floor);
}

double WarmupModel::w(std::size_t flag, std::int64_t n) const {
  if (!warm_.at(flag)) return 1.0;
  const auto& c = curves_[flag];
  if (c.never_warms || n <= 0) return 0.0;
  return 1.0 - std::exp(-static_cast<double>(n) / c.kappa);
}

double WarmupModel::sigma2(std::size_t flag) const { return warm_.at(flag) ? curves_[flag].sigma2 : 0.0; }

WarmupModel fit_warm_curves(const FlagSpace& space, const std::map<std::size_t, CounterLog>& logs,
                            double default_kappa, double prior_floor) {
  std::vector<bool> warm(space.size());
  std::vector<WarmCurve> curves(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    warm[i] = space.flag(i).warm_dependent;
    curves[i].kappa = default_kappa;
  }
  for (const auto& [flag, log] : logs) {
    if (flag >= space.size() || !warm[flag] || log.empty()) continue;
    for (std::size_t k = 1; k < log.size(); ++k) {
      if (log[k].first < log[k - 1].first) throw std::invalid_argument("counter log not sorted by session");
    }
    double plateau = 0.0;
    for (const auto& [n, v] : log) plateau = std::max(plateau, v);
    auto& c = curves[flag];
    c.fitted = true;
    if (plateau <= 0.0) {
      c.never_warms = true;
      c.sigma2 = prior_floor;
      continue;
    }
    auto sse = [&](double log_kappa) {
      const double kappa = std::exp(log_kappa);
      double s = 0.0;
      for (const auto& [n, v] : log) {
        const double pred = n <= 0 ? 0.0 : 1.0 - std::exp(-static_cast<double>(n) / kappa);
        const double e = v / plateau - pred;
        s += e * e;
      }
      return s;
    };
    auto best = boost::math::tools::brent_find_minima(sse, std::log(1e-3), std::log(1e3), 40);
    c.kappa = std::exp(best.first);
    const double dof = static_cast<double>(std::max<std::size_t>(log.size(), 2) - 1);
    c.sigma2 = best.second / dof;
  }
  return WarmupModel(std::move(warm), std::move(curves), prior_floor);
}

std::map<std::size_t, CounterLog> counter_logs(const std::vector<EvaluationRecord>& history, const FlagSpace& space) {
  std::map<std::size_t, CounterLog> logs;
  for (const auto& r : history) {
    if (r.phase == Phase::meta || r.counters.turn_count <= 0) continue;
    for (std::size_t i = 0; i < space.size(); ++i) {
      const auto& f = space.flag(i);
      if (!f.warm_dependent || !f.enabled(r.config.levels[i]) || f.counters.consume.empty()) continue;
      double consumed = 0.0;
      for (const auto& name : f.counters.consume) consumed += r.counters.value(name);
      logs[i].emplace_back(r.session_index, consumed / static_cast<double>(r.counters.turn_count));
    }
  }
  for (auto& [flag, log] : logs) {
    std::stable_sort(log.begin(), log.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return logs;
}

WarmFraction warm_fraction(const Configuration& config, const FlagSpace& space, std::int64_t n,
                           const WarmupModel& model) {
  WarmFraction out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& f = space.flag(i);
    if (!f.warm_dependent || !f.enabled(config.levels[i])) continue;
    const double w = model.w(i, std::max<std::int64_t>(n, 0));
    if (!out.argmin || w < out.w) {
      out.w = w;
      out.argmin = i;
    }
  }
  return out;
}

Inversion invert_warm(double p_obs, double p_base, double w) {
  if (w <= kWarmMin) return {p_obs, false};
  const double raw = (p_obs - (1.0 - w) * p_base) / w;
  if (raw < 0.0) return {0.0, true};
  if (raw > 1.0) return {1.0, true};
  return {raw, false};
}

CorrectedVariance corrected_variance(double p_obs, double p_base, double w, double s2_obs, double s2_base,
                                     double s2_w, bool clipped, double prior_floor) {
  if (w <= kWarmMin) return {prior_floor, true};
  const double w2 = w * w;
  const double obs = clipped ? 0.25 / w2 : s2_obs / w2;
  const double base = (1.0 - w) * (1.0 - w) * s2_base / w2;
  const double d = p_obs - p_base;
  const double warm = d * d * s2_w / (w2 * w2);
  return {obs + base + warm, false};
}

double observation_variance(int passes, int m) {
  if (m <= 0) throw std::invalid_argument("observation_variance: m must be positive");
  const double mm = static_cast<double>(m);
  double p = static_cast<double>(passes) / mm;
  if (passes <= 0) p = 0.5 / mm;
  if (passes >= m) p = 1.0 - 0.5 / mm;
  return p * (1.0 - p) / mm;
}

void apply_correction(EvaluationRecord& r, const FlagSpace& space, const WarmupModel& model, double r0,
                      double r0_variance) {
  const auto wf = warm_fraction(r.config, space, r.session_index, model);
  r.warm_fraction = wf.w;
  r.observation_variance = observation_variance(r.passes, r.fidelity);
  const auto inv = invert_warm(r.raw_pass_rate, r0, wf.w);
  const double s2_w = wf.argmin ? model.sigma2(*wf.argmin) : 0.0;
  const auto cv = corrected_variance(r.raw_pass_rate, r0, wf.w, r.observation_variance, r0_variance, s2_w,
                                     inv.clipped, model.prior_floor());
  r.corrected_target = inv.p_inf;
  r.clipped = inv.clipped;
  r.corrected_variance = cv.variance;
  r.uninformative = cv.uninformative;
}

}  // namespace harbor
