#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "harbor/flagspace.hpp"
#include "harbor/record.hpp"

namespace harbor {

/// Warm fractions at or below this are treated as zero.
inline constexpr double kWarmMin = 1e-6;
inline constexpr double kPriorVarianceFloor = 0.25;
inline constexpr double kDefaultWarmKappa = 2.0;

struct WarmCurve {
  double kappa = kDefaultWarmKappa;
  double sigma2 = 0.0;  // curve-fit residual variance
  bool never_warms = false;
  bool fitted = false;
};

/// Per-flag saturation curves w_f(n) = 1 - exp(-n / kappa_f).
class WarmupModel {
 public:
  WarmupModel() = default;
  WarmupModel(std::vector<bool> warm_dependent, std::vector<WarmCurve> curves,
              double prior_floor = kPriorVarianceFloor);

  /// Every warm flag at the default kappa.
  static WarmupModel defaults(const FlagSpace& space, double kappa = kDefaultWarmKappa,
                              double prior_floor = kPriorVarianceFloor);

  double w(std::size_t flag, std::int64_t n) const;
  double sigma2(std::size_t flag) const;
  const WarmCurve& curve(std::size_t flag) const { return curves_.at(flag); }
  double prior_floor() const { return prior_floor_; }
  std::size_t size() const { return curves_.size(); }

 private:
  std::vector<bool> warm_;
  std::vector<WarmCurve> curves_;
  double prior_floor_ = kPriorVarianceFloor;
};

/// (session index, consumer-counter value) pairs, sorted by session index.
using CounterLog = std::vector<std::pair<std::int64_t, double>>;

/// Fits kappa per warm flag by least squares on the plateau-normalised
/// trajectory. Flags without a log keep `default_kappa`; an all-zero log
/// yields a curve that never warms, with maximal residual variance.
WarmupModel fit_warm_curves(const FlagSpace& space, const std::map<std::size_t, CounterLog>& logs,
                            double default_kappa = kDefaultWarmKappa, double prior_floor = kPriorVarianceFloor);

/// Consumer-counter trajectories per warm flag, per turn, from records with
/// the flag enabled.
std::map<std::size_t, CounterLog> counter_logs(const std::vector<EvaluationRecord>& history, const FlagSpace& space);

struct WarmFraction {
  double w = 1.0;
  std::optional<std::size_t> argmin;  // the least-primed enabled warm flag
};

/// Min-rule over enabled warm-dependent flags; 1 when none is enabled.
WarmFraction warm_fraction(const Configuration& config, const FlagSpace& space, std::int64_t n,
                           const WarmupModel& model);

struct Inversion {
  double p_inf = 0.0;
  bool clipped = false;
};

/// p_inf = (p_obs - (1 - w) p_base) / w, clipped to [0, 1]. Returns p_obs
/// unchanged when w <= kWarmMin; the caller marks the record uninformative.
Inversion invert_warm(double p_obs, double p_base, double w);

struct CorrectedVariance {
  double variance = 0.0;
  bool uninformative = false;
};

/// Delta-method variance of invert_warm. A clipped inversion replaces the
/// observation term by its worst case 1/(4 w^2).
CorrectedVariance corrected_variance(double p_obs, double p_base, double w, double s2_obs, double s2_base,
                                     double s2_w, bool clipped, double prior_floor = kPriorVarianceFloor);

/// Binomial p(1-p)/m, with p moved to 1/(2m) from either boundary.
double observation_variance(int passes, int m);

/// Fills warm_fraction, observation/corrected variance, corrected target,
/// clipped and uninformative.
void apply_correction(EvaluationRecord& record, const FlagSpace& space, const WarmupModel& model, double r0,
                      double r0_variance);

}  // namespace harbor
