#include "harbor/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace harbor {

namespace {

constexpr double kScaleFloor = 1e-12;
constexpr double kNoiseFloor = 1e-12;

// Unit-norm augmented block vector (1, x / sqrt(d)) / sqrt(1 + |x|^2 / d).
Eigen::VectorXd block_feature(const Eigen::VectorXd& x, const FlagSpace::Block& block) {
  const double d = static_cast<double>(block.coordinates.size());
  Eigen::VectorXd z(block.coordinates.size() + 1);
  z[0] = 1.0;
  double sq = 0.0;
  for (std::size_t k = 0; k < block.coordinates.size(); ++k) {
    const double v = x[static_cast<Eigen::Index>(block.coordinates[k])];
    z[static_cast<Eigen::Index>(k + 1)] = v / std::sqrt(d);
    sq += v * v;
  }
  return z / std::sqrt(1.0 + sq / d);
}

std::vector<Eigen::VectorXd> block_features(const Configuration& c, const FlagSpace& space) {
  const auto x = encode(c, space);
  std::vector<Eigen::VectorXd> out;
  out.reserve(space.block_count());
  for (const auto& b : space.blocks()) out.push_back(block_feature(x, b));
  return out;
}

// Block feature matrices, one row per configuration.
std::vector<Eigen::MatrixXd> feature_rows(const std::vector<Configuration>& configs, const FlagSpace& space) {
  std::vector<Eigen::MatrixXd> z(space.block_count());
  for (std::size_t l = 0; l < space.block_count(); ++l)
    z[l].resize(static_cast<Eigen::Index>(configs.size()),
                static_cast<Eigen::Index>(space.blocks()[l].coordinates.size() + 1));
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto f = block_features(configs[i], space);
    for (std::size_t l = 0; l < f.size(); ++l) z[l].row(static_cast<Eigen::Index>(i)) = f[l].transpose();
  }
  return z;
}

}  // namespace

double Prediction::reported_mean() const { return std::clamp(mean, 0.0, 1.0); }

std::vector<double> block_similarities(const Configuration& a, const Configuration& b, const FlagSpace& space) {
  auto fa = block_features(a, space);
  auto fb = block_features(b, space);
  std::vector<double> k(fa.size());
  for (std::size_t l = 0; l < fa.size(); ++l) k[l] = fa[l].dot(fb[l]);
  return k;
}

double kernel(const Configuration& a, const Configuration& b, const FlagSpace& space, const KernelScales& scales) {
  const auto k = block_similarities(a, b, space);
  if (scales.main.size() != k.size()) throw std::invalid_argument("kernel: one main scale per block required");
  double main = 0.0, sum = 0.0, sumsq = 0.0;
  for (std::size_t l = 0; l < k.size(); ++l) {
    main += scales.main[l] * k[l];
    sum += k[l];
    sumsq += k[l] * k[l];
  }
  return main + scales.cross * 0.5 * (sum * sum - sumsq);
}

Eigen::MatrixXd Surrogate::cross_kernel(const std::vector<Configuration>& a,
                                        const std::vector<Configuration>& b) const {
  const auto za = feature_rows(a, space_);
  const auto zb = feature_rows(b, space_);
  const auto na = static_cast<Eigen::Index>(a.size());
  const auto nb = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd k = Eigen::MatrixXd::Constant(na, nb, offset_);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(na, nb);
  Eigen::MatrixXd sumsq = Eigen::MatrixXd::Zero(na, nb);
  for (std::size_t l = 0; l < za.size(); ++l) {
    Eigen::MatrixXd g = za[l] * zb[l].transpose();
    k += scales_.main[l] * g;
    sum += g;
    sumsq += g.cwiseProduct(g);
  }
  k += scales_.cross * 0.5 * (sum.cwiseProduct(sum) - sumsq);
  return k;
}

Surrogate Surrogate::fit(const std::vector<EvaluationRecord>& history, const FlagSpace& space, double prior_mean,
                         const RidgePenalties& penalties) {
  if (!(penalties.main > 0.0 && penalties.cross > 0.0)) throw std::invalid_argument("ridge penalties must be positive");

  // Merge repeats of one configuration: precision-weighted target, combined
  // variance 1 / sum(1 / s2).
  std::map<Configuration, std::pair<double, double>> merged;  // sum(y / s2), sum(1 / s2)
  for (const auto& r : history) {
    if (r.uninformative || r.phase == Phase::preflight) continue;
    const double prec = 1.0 / std::max(r.corrected_variance, kNoiseFloor);
    auto& m = merged[r.config];
    m.first += r.corrected_target * prec;
    m.second += prec;
  }
  if (merged.empty()) throw std::invalid_argument("surrogate fit needs at least one informative record");

  std::vector<Configuration> configs;
  std::vector<double> targets, noise;
  for (const auto& [c, m] : merged) {
    configs.push_back(c);
    targets.push_back(m.first / m.second);
    noise.push_back(1.0 / m.second);
  }
  const auto n = static_cast<Eigen::Index>(configs.size());
  const std::size_t L = space.block_count();

  // Explicit feature map: block vectors, then pairwise Kronecker products.
  const auto z = feature_rows(configs, space);
  enum Group { main_bias, main_x, cross_xx, cross_other };
  std::vector<Group> group;
  std::vector<std::size_t> owner;  // block of main columns
  std::vector<double> lambda;
  for (std::size_t l = 0; l < L; ++l) {
    for (Eigen::Index k = 0; k < z[l].cols(); ++k) {
      group.push_back(k == 0 ? main_bias : main_x);
      owner.push_back(l);
      lambda.push_back(penalties.main);
    }
  }
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t m = l + 1; m < L; ++m) {
      for (Eigen::Index i = 0; i < z[l].cols(); ++i) {
        for (Eigen::Index j = 0; j < z[m].cols(); ++j) {
          group.push_back(i > 0 && j > 0 ? cross_xx : cross_other);
          owner.push_back(L);
          lambda.push_back(penalties.cross);
        }
      }
    }
  }
  const auto P = static_cast<Eigen::Index>(group.size());
  Eigen::MatrixXd phi(n, P);
  Eigen::Index col = 0;
  for (std::size_t l = 0; l < L; ++l) {
    phi.middleCols(col, z[l].cols()) = z[l];
    col += z[l].cols();
  }
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t m = l + 1; m < L; ++m) {
      for (Eigen::Index i = 0; i < z[l].cols(); ++i) {
        for (Eigen::Index j = 0; j < z[m].cols(); ++j) phi.col(col++) = z[l].col(i).cwiseProduct(z[m].col(j));
      }
    }
  }

  // Weighted ridge in dual form: beta = Lambda^-1 Phi^T (Phi Lambda^-1 Phi^T + Sigma)^-1 y.
  Eigen::VectorXd inv_lambda(P);
  for (Eigen::Index p = 0; p < P; ++p) inv_lambda[p] = 1.0 / lambda[static_cast<std::size_t>(p)];
  Eigen::MatrixXd scaled = phi * inv_lambda.asDiagonal();
  Eigen::MatrixXd gram = scaled * phi.transpose();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    gram(i, i) += std::max(noise[static_cast<std::size_t>(i)], kNoiseFloor);
    y[i] = targets[static_cast<std::size_t>(i)] - prior_mean;
  }
  Eigen::VectorXd dual = gram.ldlt().solve(y);
  Eigen::VectorXd beta = scaled.transpose() * dual;

  KernelScales scales;
  scales.main.assign(L, 0.0);
  double offset = 0.0;
  for (Eigen::Index p = 0; p < P; ++p) {
    const double b2 = beta[p] * beta[p];
    switch (group[static_cast<std::size_t>(p)]) {
      case main_x:
        scales.main[owner[static_cast<std::size_t>(p)]] += b2;
        break;
      case cross_xx:
        scales.cross += b2;
        break;
      case main_bias:
        offset += b2;
        break;
      case cross_other:
        break;
    }
  }
  // One alpha_x multiplies every block pair in the kernel: per-pair share.
  if (L > 1) scales.cross /= static_cast<double>(L * (L - 1) / 2);
  for (auto& s : scales.main) s = std::max(s, kScaleFloor);
  scales.cross = std::max(scales.cross, kScaleFloor);
  offset = std::max(offset, kScaleFloor);
  return with_scales(space, std::move(scales), offset, std::move(configs), std::move(targets), std::move(noise),
                     prior_mean);
}

Surrogate Surrogate::with_scales(const FlagSpace& space, KernelScales scales, double offset,
                                 std::vector<Configuration> configs, std::vector<double> targets,
                                 std::vector<double> noise, double prior_mean) {
  if (scales.main.size() != space.block_count()) throw std::invalid_argument("one main scale per block required");
  if (configs.size() != targets.size() || configs.size() != noise.size())
    throw std::invalid_argument("training vectors differ in length");
  for (double s : scales.main) {
    if (s < 0.0) throw std::invalid_argument("kernel scales must be nonnegative");
  }
  if (scales.cross < 0.0 || offset < 0.0) throw std::invalid_argument("kernel scales must be nonnegative");
  Surrogate s(space);
  s.scales_ = std::move(scales);
  s.offset_ = offset;
  s.prior_mean_ = prior_mean;
  s.configs_ = std::move(configs);
  s.targets_ = std::move(targets);
  s.noise_ = std::move(noise);
  for (auto& v : s.noise_) v = std::max(v, kNoiseFloor);
  s.factorize();
  return s;
}

void Surrogate::factorize() {
  const auto n = static_cast<Eigen::Index>(configs_.size());
  if (n == 0) return;
  Eigen::MatrixXd k = cross_kernel(configs_, configs_);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) += noise_[static_cast<std::size_t>(i)];
    y[i] = targets_[static_cast<std::size_t>(i)] - prior_mean_;
  }
  chol_.compute(k);
  if (chol_.info() != Eigen::Success) {
    // Rounding can leave a tiny negative pivot when the noise is minute.
    const double jitter = 1e-10 * std::max(1.0, k.diagonal().maxCoeff());
    k.diagonal().array() += jitter;
    chol_.compute(k);
    if (chol_.info() != Eigen::Success) throw std::runtime_error("surrogate covariance is not positive definite");
  }
  weights_ = chol_.solve(y);
}

double Surrogate::prior_variance() const {
  const double L = static_cast<double>(scales_.main.size());
  double v = offset_ + scales_.cross * L * (L - 1.0) / 2.0;
  for (double s : scales_.main) v += s;
  return v;
}

std::vector<Prediction> Surrogate::predict_many(const std::vector<Configuration>& configs) const {
  std::vector<Prediction> out(configs.size());
  if (configs.empty()) return out;
  const double prior = prior_variance();
  if (configs_.empty()) {
    for (auto& p : out) p = {prior_mean_, std::sqrt(prior)};
    return out;
  }
  Eigen::MatrixXd ks = cross_kernel(configs_, configs);  // n x q
  Eigen::VectorXd mean = ks.transpose() * weights_;
  Eigen::MatrixXd v = chol_.matrixL().solve(ks);
  for (std::size_t j = 0; j < configs.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double var = prior - v.col(jj).squaredNorm();
    out[j].mean = prior_mean_ + mean[jj];
    out[j].stddev = std::sqrt(std::max(var, 0.0));
  }
  return out;
}

Prediction Surrogate::predict(const Configuration& c) const { return predict_many({c}).front(); }

std::vector<AnovaEntry> block_anova(const Surrogate& s) {
  const auto& space = s.space();
  std::vector<AnovaEntry> out;
  double total = 0.0;
  for (std::size_t l = 0; l < space.block_count(); ++l) {
    out.push_back({space.blocks()[l].name, s.scales().main[l], 0.0});
    total += s.scales().main[l];
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.raw > b.raw; });
  if (space.block_count() > 1) {
    out.push_back({"cross", s.scales().cross, 0.0});
    total += s.scales().cross;
  }
  for (auto& e : out) e.normalized = total > 0.0 ? e.raw / total : 0.0;
  return out;
}

CostModel::CostModel(double intercept, Eigen::VectorXd coefficients, double residual_sd)
    : intercept_(intercept), coef_(std::move(coefficients)), residual_sd_(residual_sd) {}

double CostModel::predict(const Configuration& c, const FlagSpace& space) const {
  double v = intercept_;
  if (coef_.size() > 0) v += coef_.dot(encode(c, space));
  return std::max(v, 0.0);
}

CostModel fit_cost_model(const std::vector<EvaluationRecord>& history, const FlagSpace& space, double ridge) {
  std::vector<const EvaluationRecord*> rows;
  for (const auto& r : history) {
    if (r.phase == Phase::preflight || r.phase == Phase::meta || r.fidelity <= 0) continue;
    rows.push_back(&r);
  }
  if (rows.empty()) throw std::invalid_argument("cost model needs at least one record");

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(n), w(n);
  double lo = rows.front()->mean_task_cost(), hi = lo;
  bool one_config = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto* r = rows[static_cast<std::size_t>(i)];
    y[i] = r->mean_task_cost();
    w[i] = static_cast<double>(r->fidelity);
    lo = std::min(lo, y[i]);
    hi = std::max(hi, y[i]);
    one_config = one_config && r->config == rows.front()->config;
  }
  const double wsum = w.sum();
  const double ybar = w.dot(y) / wsum;
  auto residual_sd = [&](const Eigen::VectorXd& pred) {
    return std::sqrt(w.dot((y - pred).array().square().matrix()) / wsum);
  };
  if (one_config || hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
    return CostModel(ybar, Eigen::VectorXd(), residual_sd(Eigen::VectorXd::Constant(n, ybar)));
  }

  // Weighted ridge with an unpenalised intercept: centre, solve, recover.
  const auto dim = static_cast<Eigen::Index>(space.encoded_dim());
  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = encode(rows[static_cast<std::size_t>(i)]->config, space).transpose();
  Eigen::RowVectorXd xbar = (w.asDiagonal() * x).colwise().sum() / wsum;
  Eigen::MatrixXd xc = x.rowwise() - xbar;
  Eigen::VectorXd yc = y.array() - ybar;
  Eigen::MatrixXd a = xc.transpose() * w.asDiagonal() * xc;
  a.diagonal().array() += ridge * wsum;
  Eigen::VectorXd coef = a.ldlt().solve(xc.transpose() * w.asDiagonal() * yc);
  const double intercept = ybar - xbar.dot(coef);
  Eigen::VectorXd pred = (x * coef).array() + intercept;
  return CostModel(intercept, std::move(coef), residual_sd(pred));
}

}  // namespace harbor
