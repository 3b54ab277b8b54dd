#include "harbor/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace harbor {

namespace {
const boost::math::normal_distribution<double> kStd(0.0, 1.0);
}

double normal_quantile(double p) { return boost::math::quantile(kStd, p); }
double normal_cdf(double x) { return boost::math::cdf(kStd, x); }
double normal_pdf(double x) { return boost::math::pdf(kStd, x); }

Interval wilson_interval(long k, long n, double level) {
  if (n <= 0) throw std::invalid_argument("wilson_interval: n must be positive");
  if (k < 0 || k > n) throw std::invalid_argument("wilson_interval: k must lie in [0, n]");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("wilson_interval: level must lie in (0, 1)");

  const double z = normal_quantile(0.5 + 0.5 * level);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));

  Interval iv{std::clamp(centre - half, 0.0, 1.0), std::clamp(centre + half, 0.0, 1.0)};
  if (k == 0) iv.low = 0.0;
  if (k == n) iv.high = 1.0;
  return iv;
}

}  // namespace harbor
