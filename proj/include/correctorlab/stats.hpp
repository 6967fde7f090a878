#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace correctorlab::stats {

/// Ordinary least squares y = intercept + slope x with a 95% t-interval on the slope.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  double r_squared = 0.0;
  std::vector<double> residuals;
  std::size_t count = 0;
};

/// Needs at least two distinct x. With exactly two points the interval is degenerate.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     double confidence = 0.95);

/// Least squares through the origin, y = slope x.
LinearFit linear_fit_origin(std::span<const double> x, std::span<const double> y,
                            double confidence = 0.95);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for k successes in n trials. For k = 0 the upper end is
/// the rule-of-three bound 3/n (at 95%), for k = n the lower end is 1 - 3/n.
Interval wilson_interval(std::size_t k, std::size_t n, double confidence = 0.95);

/// Two-sided normal quantile z with P(|Z| <= z) = confidence.
double normal_quantile(double confidence);

/// Pool-adjacent-violators fit of a nonincreasing sequence (weighted least squares).
std::vector<double> isotonic_nonincreasing(std::span<const double> values,
                                           std::span<const double> weights = {});

double sample_mean(std::span<const double> x);
/// Unbiased sample variance; 0 for fewer than two values.
double sample_variance(std::span<const double> x);

/// Mean with a two-sided t-interval.
struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  Interval ci;
};
MeanEstimate mean_interval(std::span<const double> x, double confidence = 0.95);

}  // namespace correctorlab::stats
