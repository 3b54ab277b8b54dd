#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "harbor/flagspace.hpp"
#include "harbor/record.hpp"

namespace harbor {

struct KernelScales {
  std::vector<double> main;  // alpha_l^2 per block
  double cross = 0.0;        // alpha_x^2
};

/// Per-block similarity K_l in [-1, 1]: the cosine between the block's
/// encoded coordinates, each augmented with a unit constant. On +-1 encodings
/// this is 1 - hamming / d_l, and K_l(c, c) = 1.
std::vector<double> block_similarities(const Configuration& a, const Configuration& b, const FlagSpace& space);

/// sum_l alpha_l^2 K_l + alpha_x^2 sum_{l < l'} K_l K_l'.
double kernel(const Configuration& a, const Configuration& b, const FlagSpace& space, const KernelScales& scales);

struct RidgePenalties {
  double main = 1.0;
  double cross = 1000.0;
};

struct Prediction {
  double mean = 0.0;   // unclamped
  double stddev = 0.0;

  double reported_mean() const;  // clamped to [0, 1]
};

/// Gaussian-process surrogate over corrected pass rates with the
/// block-additive kernel. Scales come from a weighted ridge fit on the
/// explicit feature map: alpha_l^2 sums the squared block-l weights, alpha_x^2
/// is the per-pair mean of the squared cross weights. Prediction is the
/// heteroscedastic GP posterior.
class Surrogate {
 public:
  /// Fits on informative, non-preflight records. Records sharing a
  /// configuration are merged by precision weighting.
  static Surrogate fit(const std::vector<EvaluationRecord>& history, const FlagSpace& space, double prior_mean,
                       const RidgePenalties& penalties = {});

  /// Posterior with given scales (no ridge step); `noise` are variances.
  static Surrogate with_scales(const FlagSpace& space, KernelScales scales, double offset,
                               std::vector<Configuration> configs, std::vector<double> targets,
                               std::vector<double> noise, double prior_mean);

  Prediction predict(const Configuration& c) const;
  std::vector<Prediction> predict_many(const std::vector<Configuration>& configs) const;

  /// Kernel at (c, c): the posterior variance far from all data.
  double prior_variance() const;

  const KernelScales& scales() const { return scales_; }
  /// Constant-kernel scale fitted from the intercept features.
  double offset() const { return offset_; }
  double prior_mean() const { return prior_mean_; }
  const std::vector<Configuration>& training_configs() const { return configs_; }
  const std::vector<double>& training_targets() const { return targets_; }
  const std::vector<double>& training_noise() const { return noise_; }
  const FlagSpace& space() const { return space_; }

 private:
  Surrogate(FlagSpace space) : space_(std::move(space)) {}
  void factorize();
  Eigen::MatrixXd cross_kernel(const std::vector<Configuration>& a, const std::vector<Configuration>& b) const;

  FlagSpace space_;
  KernelScales scales_;
  double offset_ = 0.0;
  double prior_mean_ = 0.0;
  std::vector<Configuration> configs_;
  std::vector<double> targets_;
  std::vector<double> noise_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;
};

struct AnovaEntry {
  std::string name;  // block name, or "cross"
  double raw = 0.0;
  double normalized = 0.0;
};

/// Main-effect scales sorted descending, followed by the cross scale when
/// the space has more than one block. Normalised values sum to 1.
std::vector<AnovaEntry> block_anova(const Surrogate& s);

/// Linear model of mean per-task cost on the encoded latent.
class CostModel {
 public:
  CostModel() = default;
  CostModel(double intercept, Eigen::VectorXd coefficients, double residual_sd);

  double predict(const Configuration& c, const FlagSpace& space) const;
  double intercept() const { return intercept_; }
  const Eigen::VectorXd& coefficients() const { return coef_; }
  double residual_sd() const { return residual_sd_; }
  bool intercept_only() const { return coef_.size() == 0; }

 private:
  double intercept_ = 0.0;
  Eigen::VectorXd coef_;
  double residual_sd_ = 0.0;
};

/// Ridge fit weighted by fidelity; intercept-only when the history has one
/// distinct configuration or one distinct cost. Preflight and imported
/// records are ignored.
CostModel fit_cost_model(const std::vector<EvaluationRecord>& history, const FlagSpace& space, double ridge = 1e-3);

}  // namespace harbor
