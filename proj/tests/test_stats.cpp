#include <cmath>
#include <random>

#include "correctorlab/stats.hpp"
#include "doctest.h"

using namespace correctorlab::stats;

TEST_CASE("linear fit recovers an exact power law") {
  std::vector<double> x, y;
  for (double r : {4.0, 8.0, 16.0, 32.0}) x.push_back(std::log(r)), y.push_back(-0.5 * std::log(r) + 0.3);
  const auto f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(std::abs(f.slope_ci_high - f.slope_ci_low) < 1e-10);
  CHECK_THROWS(linear_fit(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 1.0}));
  CHECK_THROWS(linear_fit(std::vector<double>{1.0}, std::vector<double>{0.0}));
}

TEST_CASE("slope interval covers the truth at roughly the nominal rate") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.3);
  int covered = 0;
  const int reps = 400;
  for (int t = 0; t < reps; ++t) {
    std::vector<double> x, y;
    for (int i = 0; i < 10; ++i) x.push_back(i), y.push_back(2.0 - 0.7 * i + noise(rng));
    const auto f = linear_fit(x, y);
    covered += f.slope_ci_low <= -0.7 && -0.7 <= f.slope_ci_high;
  }
  CHECK(covered / double(reps) == doctest::Approx(0.95).epsilon(0.04));
}

TEST_CASE("fit through the origin") {
  const std::vector<double> x{1, 2, 3}, y{2, 4, 6};
  const auto f = linear_fit_origin(x, y);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.intercept == 0.0);
}

TEST_CASE("Wilson score interval") {
  CHECK(normal_quantile(0.95) == doctest::Approx(1.959963985).epsilon(1e-9));
  const auto iv = wilson_interval(5, 10);
  CHECK(iv.low == doctest::Approx(0.2365931).epsilon(1e-6));
  CHECK(iv.high == doctest::Approx(0.7634069).epsilon(1e-6));
  const auto zero = wilson_interval(0, 200);
  CHECK(zero.low == 0.0);
  CHECK(zero.high == doctest::Approx(3.0 / 200));
  const auto all = wilson_interval(50, 50);
  CHECK(all.high == 1.0);
  for (std::size_t k = 0; k <= 40; ++k) {
    const auto w = wilson_interval(k, 40);
    const double p = k / 40.0;
    CHECK(w.low <= p);
    CHECK(p <= w.high);
  }
  CHECK_THROWS(wilson_interval(3, 2));
}

TEST_CASE("isotonic regression") {
  const std::vector<double> a{1, 3, 2};
  const auto fa = isotonic_nonincreasing(a);
  for (double v : fa) CHECK(v == doctest::Approx(2.0));
  const std::vector<double> b{3, 1, 2};
  const auto fb = isotonic_nonincreasing(b);
  CHECK(fb[0] == 3.0);
  CHECK(fb[1] == doctest::Approx(1.5));
  CHECK(fb[2] == doctest::Approx(1.5));
  const std::vector<double> c{0.9, 0.5, 0.5, 0.1};
  CHECK(isotonic_nonincreasing(c) == c);
  const std::vector<double> w{1, 3};
  const std::vector<double> d{0.0, 1.0};
  CHECK(isotonic_nonincreasing(d, w)[0] == doctest::Approx(0.75));
}

TEST_CASE("mean interval") {
  const std::vector<double> x{1, 2, 3, 4};
  const auto m = mean_interval(x);
  CHECK(m.mean == 2.5);
  CHECK(sample_variance(x) == doctest::Approx(5.0 / 3));
  CHECK(m.ci.low < 2.5);
  CHECK(m.ci.high > 2.5);
}
