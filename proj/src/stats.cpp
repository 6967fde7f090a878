#include "correctorlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace correctorlab::stats {

namespace {

double t_quantile(double confidence, std::size_t dof) {
  if (dof == 0) return 0.0;
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.5 + confidence / 2);
}

void check_sizes(std::span<const double> x, std::span<const double> y, std::size_t min) {
  if (x.size() != y.size()) throw std::invalid_argument("fit needs equally many x and y");
  if (x.size() < min) throw std::invalid_argument("too few points to fit");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw std::invalid_argument("non-finite value in fit data");
}

}  // namespace

double normal_quantile(double confidence) {
  if (!(confidence > 0 && confidence < 1)) throw std::invalid_argument("confidence must be in (0,1)");
  return boost::math::quantile(boost::math::normal(), 0.5 + confidence / 2);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y, double confidence) {
  check_sizes(x, y, 2);
  const std::size_t n = x.size();
  const double mx = sample_mean(x), my = sample_mean(y);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit needs at least two distinct x");
  LinearFit f;
  f.count = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.residuals.push_back(r);
    sse += r * r;
  }
  f.r_squared = syy > 0 ? 1 - sse / syy : 1.0;
  if (n > 2) f.slope_stderr = std::sqrt(sse / (n - 2) / sxx);
  const double t = t_quantile(confidence, n - 2);
  f.slope_ci_low = f.slope - t * f.slope_stderr;
  f.slope_ci_high = f.slope + t * f.slope_stderr;
  return f;
}

LinearFit linear_fit_origin(std::span<const double> x, std::span<const double> y,
                            double confidence) {
  check_sizes(x, y, 1);
  const std::size_t n = x.size();
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) sxx += x[i] * x[i], sxy += x[i] * y[i], syy += y[i] * y[i];
  if (sxx == 0) throw std::invalid_argument("fit needs a nonzero x");
  LinearFit f;
  f.count = n;
  f.slope = sxy / sxx;
  double sse = 0;
  const double my = sample_mean(y);
  double sst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.slope * x[i];
    f.residuals.push_back(r);
    sse += r * r;
    sst += (y[i] - my) * (y[i] - my);
  }
  f.r_squared = sst > 0 ? 1 - sse / sst : 1.0;
  if (n > 1) f.slope_stderr = std::sqrt(sse / (n - 1) / sxx);
  const double t = t_quantile(confidence, n - 1);
  f.slope_ci_low = f.slope - t * f.slope_stderr;
  f.slope_ci_high = f.slope + t * f.slope_stderr;
  return f;
}

Interval wilson_interval(std::size_t k, std::size_t n, double confidence) {
  if (n == 0) throw std::invalid_argument("no trials");
  if (k > n) throw std::invalid_argument("more successes than trials");
  const double z = normal_quantile(confidence);
  const double p = static_cast<double>(k) / n;
  const double z2n = z * z / n;
  const double centre = (p + z2n / 2) / (1 + z2n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2n / (4 * n)) / (1 + z2n);
  Interval iv{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  if (k == 0) iv = {0.0, std::min(1.0, 3.0 / n)};
  if (k == n) iv = {std::max(0.0, 1.0 - 3.0 / n), 1.0};
  return iv;
}

std::vector<double> isotonic_nonincreasing(std::span<const double> values,
                                           std::span<const double> weights) {
  if (!weights.empty() && weights.size() != values.size())
    throw std::invalid_argument("weights and values differ in length");
  struct Block {
    double value, weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i], weights.empty() ? 1.0 : weights[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value < blocks.back().value) {
      const Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double w = a.weight + b.weight;
      a.value = w > 0 ? (a.value * a.weight + b.value * b.weight) / w : (a.value + b.value) / 2;
      a.weight = w;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.value);
  return out;
}

double sample_mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0;
  for (double v : x) s += v;
  return s / x.size();
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = sample_mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

MeanEstimate mean_interval(std::span<const double> x, double confidence) {
  MeanEstimate e;
  e.mean = sample_mean(x);
  e.stderr_ = x.size() > 1 ? std::sqrt(sample_variance(x) / x.size()) : 0.0;
  const double t = x.size() > 1 ? t_quantile(confidence, x.size() - 1) : 0.0;
  e.ci = {e.mean - t * e.stderr_, e.mean + t * e.stderr_};
  return e;
}

}  // namespace correctorlab::stats
