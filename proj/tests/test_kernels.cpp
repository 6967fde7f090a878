// Parallel kernels against the serial reference.
#include <omp.h>

#include "correctorlab/kernels.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace correctorlab;
namespace ks = kernels::serial;
namespace kp = kernels::parallel;

TEST_CASE("stencil kernels agree with the serial reference") {
  for (int d = 1; d <= 3; ++d) {
    const Lattice lat(d, d == 3 ? 16 : 64);
    const std::size_t N = lat.size();
    const auto u = testutil::random_values(N, 11 + d);
    const auto g = testutil::random_values(N * d, 17 + d);
    const auto a = testutil::random_coefficient(lat, 23 + d);

    std::vector<double> s(N * d), p(N * d);
    ks::grad(lat, u, s);
    kp::grad(lat, u, p);
    CHECK(s == p);

    std::vector<double> sd(N), pd(N);
    ks::div(lat, g, sd);
    kp::div(lat, g, pd);
    CHECK(sd == pd);

    std::vector<double> flux(N * d);
    for (bool transpose : {false, true}) {
      ks::apply_divform(lat, a.values(), transpose, u, flux, sd);
      kp::apply_divform(lat, a.values(), transpose, u, flux, pd);
      CHECK(testutil::max_abs_diff(sd, pd) <= 1e-13 * testutil::max_abs(sd));
    }
  }
}

TEST_CASE("reductions are close to serial and independent of thread count") {
  const auto x = testutil::random_values(100003, 1);
  const auto y = testutil::random_values(100003, 2);
  const double ref = ks::dot(x, y);
  const double one = [&] {
    omp_set_num_threads(1);
    return kp::dot(x, y);
  }();
  omp_set_num_threads(4);
  const double four = kp::dot(x, y);
  CHECK(one == four);
  CHECK(std::abs(one - ref) <= 1e-10 * std::abs(ref) + 1e-10);
  CHECK(kp::sum(x) == doctest::Approx(ks::sum(x)).epsilon(1e-10));
}

TEST_CASE("vector updates") {
  const auto x = testutil::random_values(5000, 3);
  auto y1 = testutil::random_values(5000, 4);
  auto y2 = y1;
  ks::axpy(0.7, x, y1);
  kp::axpy(0.7, x, y2);
  CHECK(y1 == y2);
  ks::xpby(x, -1.3, y1);
  kp::xpby(x, -1.3, y2);
  CHECK(y1 == y2);
}
