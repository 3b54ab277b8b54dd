#pragma once

#include <utility>

namespace harbor {

/// Standard normal quantile and distribution helpers.
double normal_quantile(double p);
double normal_cdf(double x);
double normal_pdf(double x);

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Two-sided Wilson score interval for k successes in n trials.
/// Throws std::invalid_argument for n == 0, k > n, or level outside (0, 1).
Interval wilson_interval(long k, long n, double level = 0.90);

}  // namespace harbor
