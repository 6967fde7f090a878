#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "correctorlab/gaussfield.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace correctorlab;

namespace {

double frob(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= x.size(), my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST_CASE("covariance parameter validation") {
  const Lattice lat(2, 16);
  CHECK_THROWS_AS(CovarianceModel::from_spec({0.0, 1.0, 0.0}, lat), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceModel::from_spec({2.0, 1.0, 0.0}, lat), std::invalid_argument);
  CHECK_THROWS_AS(CovarianceModel::from_spec({0.5, 1.0, 0.5}, lat), std::invalid_argument);
  CHECK_NOTHROW(CovarianceModel::from_spec({1.9, 1.0, 0.0}, lat));
}

TEST_CASE("zero amplitude gives a zero field") {
  const Lattice lat(2, 32);
  const auto f = synthesize_gaussian({0.5, 0.0, 0.0}, lat, {1, 0});
  CHECK(testutil::max_abs(f.values()) == 0.0);
}

TEST_CASE("synthesis is deterministic and samples decorrelate") {
  const Lattice lat(2, 64);
  const auto model = CovarianceModel::from_spec({0.5, 1.0, 0.0}, lat);
  const auto f1 = synthesize_gaussian(model, {42, 3});
  const auto f2 = synthesize_gaussian(model, {42, 3});
  CHECK(std::equal(f1.values().begin(), f1.values().end(), f2.values().begin()));

  // White input makes the site values independent, so the cross-correlation
  // estimate has standard deviation 1/sqrt(n^d).
  const auto white = CovarianceModel::white(lat, 1.0);
  const auto w1 = synthesize_gaussian(white, {42, 3});
  const auto w2 = synthesize_gaussian(white, {42, 4});
  const auto a = w1.component(0, 0), b = w2.component(0, 0);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t x = 0; x < lat.size(); ++x) sab += a[x] * b[x], saa += a[x] * a[x], sbb += b[x] * b[x];
  CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 3.0 / std::sqrt(static_cast<double>(lat.size())));
  // Components are independent draws.
  CHECK(!std::equal(w1.component(0, 0).begin(), w1.component(0, 0).end(),
                    w1.component(1, 1).begin()));
}

TEST_CASE("kernel obeys the normalisation bound") {
  const Lattice lat(2, 128);
  for (double beta : {0.25, 0.5, 1.0, 1.5}) {
    const auto model = CovarianceModel::from_spec({beta, 0.8, 0.0}, lat);
    const auto C = model.kernel();
    double worst = 0;
    for (std::size_t x = 1; x < lat.size(); ++x) {
      const double r = std::hypot(lat.signed_coord(x, 0), lat.signed_coord(x, 1));
      worst = std::max(worst, std::abs(C[x]) * std::pow(r, beta));
    }
    CHECK(worst == doctest::Approx(0.8).epsilon(1e-10));
    CHECK(model.variance() == doctest::Approx(C[0]).epsilon(1e-12));
    for (double p : model.spectrum()) CHECK(p >= 0.0);
  }
}

TEST_CASE("empirical covariance decays like a power law") {
  const Lattice lat(2, 256);
  const auto model = CovarianceModel::from_spec({0.5, 1.0, 0.0}, lat);
  std::vector<TensorField> samples;
  for (std::uint64_t s = 0; s < 100; ++s) samples.push_back(synthesize_gaussian(model, {7, s}));
  const auto cov = estimate_covariance(samples);

  std::vector<double> lags, vals;
  for (std::size_t i = 0; i < cov.lag.size(); ++i) {
    const double rho = cov.lag[i];
    // Bound check over [4, n/4].
    if (rho >= 4 && rho <= lat.n() / 4) CHECK(cov.value[i] <= std::pow(rho, -0.5) * 1.25);
    // Slope over [4, n/8]: beyond that the zero-mean constraint of the torus bends the kernel.
    if (rho >= 4 && rho <= lat.n() / 8) lags.push_back(rho), vals.push_back(cov.value[i]);
  }
  REQUIRE(lags.size() == 4);
  const double slope = loglog_slope(lags, vals);
  MESSAGE("covariance slope " << slope);
  CHECK(std::abs(slope + 0.5) <= 0.15);
}

TEST_CASE("lag-zero covariance is the empirical variance") {
  const Lattice lat(2, 32);
  const auto model = CovarianceModel::from_spec({0.5, 1.0, 0.0}, lat);
  std::vector<TensorField> samples{synthesize_gaussian(model, {1, 0})};
  const auto cov = estimate_covariance(samples);
  double s = 0;
  for (double v : samples[0].component(0, 0)) s += v * v;
  CHECK(cov.lag[0] == 0.0);
  CHECK(std::abs(cov.value[0] - s / lat.size()) <= 1e-12 * s / lat.size());
}

TEST_CASE("white input is uncorrelated beyond its scale") {
  const Lattice lat(2, 64);
  const auto model = CovarianceModel::white(lat, 1.0);
  std::vector<TensorField> samples;
  for (std::uint64_t s = 0; s < 40; ++s) samples.push_back(synthesize_gaussian(model, {9, s}));
  const auto cov = estimate_covariance(samples);
  for (std::size_t i = 1; i < cov.lag.size(); ++i)
    CHECK(std::abs(cov.value[i]) <= 3 * cov.std_error[i]);
}

TEST_CASE("marginals are Gaussian and centred") {
  const Lattice lat(2, 128);
  const auto model = CovarianceModel::from_spec({0.5, 1.0, 0.0}, lat);
  double m2 = 0, m4 = 0;
  std::size_t count = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto f = synthesize_gaussian(model, {3, s});
    const auto c = f.component(0, 0);
    double mean = 0, var = 0;
    for (double v : c) mean += v, var += v * v;
    mean /= c.size();
    var /= c.size();
    CHECK(std::abs(mean) <= 3 * std::sqrt(var) / std::sqrt(static_cast<double>(c.size())));
    for (double v : c) m2 += v * v, m4 += v * v * v * v, ++count;
  }
  const double kurt = (m4 / count) / std::pow(m2 / count, 2);
  MESSAGE("kurtosis " << kurt);
  CHECK(kurt >= 2.8);
  CHECK(kurt <= 3.2);
}

TEST_CASE("Phi at zero input") {
  const Lattice lat(2, 16);
  const auto a = apply_phi(TensorField(lat), {MapVariant::ScalarIsotropic, 0.4});
  for (std::size_t x = 0; x < lat.size(); ++x) {
    CHECK(a.at(x, 0, 0) == doctest::Approx(0.4 + 0.6 / 2));
    CHECK(a.at(x, 1, 1) == doctest::Approx(0.7));
    CHECK(a.at(x, 0, 1) == 0.0);
  }
  CHECK(a.symmetric());
}

TEST_CASE("Phi output is elliptic, bounded and 1-Lipschitz") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.0, 1.5);
  for (auto variant : {MapVariant::ScalarIsotropic, MapVariant::EigenvalueClamp}) {
    for (int d = 1; d <= 3; ++d) {
      const CoefficientMapSpec map{variant, 0.3};
      for (int t = 0; t < 10000 / 3; ++t) {
        std::vector<double> m1(d * d), m2(d * d), o1(d * d), o2(d * d);
        for (auto& v : m1) v = g(rng);
        for (std::size_t i = 0; i < m2.size(); ++i) m2[i] = (t % 2 ? m1[i] : 0.0) + 0.3 * g(rng);
        apply_phi_matrix(m1, d, map, o1);
        apply_phi_matrix(m2, d, map, o2);
        CHECK(frob(o1, o2) <= frob(m1, m2) * (1 + 1e-9));
        Eigen::MatrixXd A = Eigen::Map<Eigen::MatrixXd>(o1.data(), d, d);
        CHECK((A - A.transpose()).norm() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        CHECK(es.eigenvalues().minCoeff() >= 0.3 - 1e-12);
        CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("Phi on fields is local and translation equivariant") {
  const Lattice lat(2, 32);
  const auto at = synthesize_gaussian({0.5, 1.0, 0.0}, lat, {5, 0});
  const CoefficientMapSpec map{MapVariant::EigenvalueClamp, 0.5};
  const auto a = apply_phi(at, map);
  TensorField shifted(lat);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      for (std::size_t x = 0; x < lat.size(); ++x)
        shifted.component(r, c)[lat.neighbor(x, 0, 5)] = at.component(r, c)[x];
  const auto as = apply_phi(shifted, map);
  for (std::size_t x = 0; x < lat.size(); ++x)
    CHECK(as.at(lat.neighbor(x, 0, 5), 0, 1) == a.at(x, 0, 1));
  CHECK_THROWS(apply_phi(at, {MapVariant::ScalarIsotropic, 1.0}));
}

TEST_CASE("map variant names round trip") {
  for (auto v : {MapVariant::ScalarIsotropic, MapVariant::EigenvalueClamp})
    CHECK(map_variant_from_string(to_string(v)) == v);
  CHECK_THROWS(map_variant_from_string("bogus"));
}
