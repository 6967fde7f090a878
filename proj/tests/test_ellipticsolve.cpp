#include <cmath>
#include <numbers>

#include "correctorlab/ellipticsolve.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace correctorlab;

namespace {

double l2(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

ScalarField zero_mean(ScalarField u) {
  const double m = mean(u.values());
  for (double& v : u.values()) v -= m;
  return u;
}

}  // namespace

TEST_CASE("poisson solve of zero is zero") {
  const Lattice lat(2, 16);
  CHECK(testutil::max_abs(poisson_solve(ScalarField(lat)).values()) == 0.0);
}

TEST_CASE("poisson solve on a single Fourier mode") {
  const Lattice lat(1, 8, 1.0);
  ScalarField rhs(lat);
  for (std::size_t x = 0; x < lat.size(); ++x)
    rhs[x] = std::cos(2 * std::numbers::pi * x * lat.spacing());
  const double lambda1 = 256.0 * std::pow(std::sin(std::numbers::pi / 8), 2);
  CHECK(lambda1 == doctest::Approx(37.49).epsilon(1e-3));
  const auto u = poisson_solve(rhs);
  for (std::size_t x = 0; x < lat.size(); ++x) CHECK(std::abs(u[x] - rhs[x] / lambda1) < 1e-12);
}

TEST_CASE("poisson solve inverts the lattice Laplacian") {
  for (int d = 1; d <= 3; ++d) {
    const Lattice lat(d, d == 3 ? 8 : 32, 5.0);
    const auto u0 = testutil::random_scalar(lat, 70 + d);
    ScalarField minus_lap = div(grad(u0));
    for (double& v : minus_lap.values()) v = -v;
    const auto u = poisson_solve(minus_lap);
    const auto ref = zero_mean(u0);
    CHECK(testutil::max_abs_diff(u.values(), ref.values()) < 1e-12 * std::max(1.0, testutil::max_abs(ref.values())) * 10);
  }
}

TEST_CASE("solver options are validated") {
  SolveOptions o;
  o.rel_tolerance = 1e-3;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o.rel_tolerance = 0.0;
  CHECK_THROWS_AS(o.validate(), std::invalid_argument);
  o.rel_tolerance = 1e-4;
  CHECK_NOTHROW(o.validate());
}

TEST_CASE("identity coefficients reduce to the Poisson solve") {
  const Lattice lat(2, 32);
  const auto h = testutil::random_vector(lat, 4);
  const auto u = solve_divform(TensorField::identity(lat), h, false, {});
  const auto ref = poisson_solve(div(h));
  CHECK(testutil::max_abs_diff(u.solution.values(), ref.values()) <= 1e-8 * testutil::max_abs(ref.values()));
  CHECK(u.residual <= 1e-10);
}

TEST_CASE("manufactured solutions are recovered") {
  for (int d = 1; d <= 3; ++d) {
    const Lattice lat(d, d == 3 ? 16 : 64);
    const auto a = testutil::random_coefficient(lat, 90 + d, 0.2);
    const auto u0 = zero_mean(testutil::random_scalar(lat, 91 + d));
    // h = a grad u0 gives div h = div(a grad u0), i.e. -div(a grad u) = div h has u = -u0.
    const auto g = grad(u0);
    VectorField h(lat);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        for (std::size_t x = 0; x < lat.size(); ++x)
          h.component(r)[x] += a.at(x, r, c) * g.component(c)[x];
    SolveOptions opts;
    opts.lambda = 0.2;
    opts.rel_tolerance = 1e-12;
    const auto u = solve_divform(a, h, false, opts);
    double err = 0;
    for (std::size_t x = 0; x < lat.size(); ++x) err = std::max(err, std::abs(u.solution[x] + u0[x]));
    CHECK(err <= 1e-8 * testutil::max_abs(u0.values()));
    CHECK(std::abs(mean(u.solution.values())) < 1e-13);
  }
}

TEST_CASE("transpose solve equals the plain solve for symmetric coefficients") {
  const Lattice lat(2, 32);
  const auto a = testutil::random_coefficient(lat, 5);
  const auto h = testutil::random_vector(lat, 6);
  SolveOptions opts;
  opts.rel_tolerance = 1e-12;
  const auto u = solve_divform(a, h, false, opts);
  const auto ut = solve_divform(a, h, true, opts);
  CHECK(testutil::max_abs_diff(u.solution.values(), ut.solution.values()) <= 1e-12 * testutil::max_abs(u.solution.values()));
}

TEST_CASE("transpose solve uses the transposed coefficient") {
  const Lattice lat(2, 16);
  auto a = testutil::random_coefficient(lat, 8);
  for (std::size_t x = 0; x < lat.size(); ++x) {
    a.component(0, 1)[x] += 0.1;
    a.component(1, 0)[x] -= 0.1;
  }
  const auto h = testutil::random_vector(lat, 10);
  SolveOptions opts;
  opts.rel_tolerance = 1e-12;
  const auto w = solve_divform(a, h, true, opts);
  // Adjoint relation: <A^T w, u> = <w, A u>.
  const auto u = testutil::random_scalar(lat, 11);
  const auto lhs = inner(apply_divform(a, w.solution, true).values(), u.values(), lat);
  const auto rhs = inner(w.solution.values(), apply_divform(a, u, false).values(), lat);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  ScalarField residual = apply_divform(a, w.solution, true);
  const auto f = div(h);
  for (std::size_t x = 0; x < lat.size(); ++x) residual[x] -= f[x];
  CHECK(l2(residual.values()) <= 1e-10 * l2(f.values()));
}

TEST_CASE("energy identity and operator symmetry") {
  const Lattice lat(2, 32);
  const auto a = testutil::random_coefficient(lat, 12);
  const auto h = testutil::random_vector(lat, 13);
  const auto u = solve_divform(a, h, false, {});
  const auto g = grad(u.solution);
  double energy = 0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      for (std::size_t x = 0; x < lat.size(); ++x)
        energy += g.component(r)[x] * a.at(x, r, c) * g.component(c)[x];
  energy *= lat.cell_volume();
  CHECK(energy == doctest::Approx(-inner(g.values(), h.values(), lat)).epsilon(1e-8));

  const auto p = testutil::random_scalar(lat, 14), q = testutil::random_scalar(lat, 15);
  CHECK(inner(apply_divform(a, p).values(), q.values(), lat) ==
        doctest::Approx(inner(p.values(), apply_divform(a, q).values(), lat)).epsilon(1e-12));
}

TEST_CASE("solutions are translation equivariant") {
  const Lattice lat(2, 16);
  const auto a = testutil::random_coefficient(lat, 16);
  const auto h = testutil::random_vector(lat, 17);
  TensorField as(lat);
  VectorField hs(lat);
  auto shift = [&](std::size_t x) { return lat.neighbor(lat.neighbor(x, 0, 3), 1, -5); };
  for (std::size_t x = 0; x < lat.size(); ++x) {
    for (int r = 0; r < 2; ++r) {
      hs.component(r)[shift(x)] = h.component(r)[x];
      for (int c = 0; c < 2; ++c) as.component(r, c)[shift(x)] = a.at(x, r, c);
    }
  }
  SolveOptions opts;
  opts.rel_tolerance = 1e-12;
  const auto u = solve_divform(a, h, false, opts);
  const auto us = solve_divform(as, hs, false, opts);
  for (std::size_t x = 0; x < lat.size(); ++x)
    CHECK(std::abs(us.solution[shift(x)] - u.solution[x]) < 1e-10);
}

TEST_CASE("non-convergence raises a solver error") {
  const Lattice lat(2, 32);
  const auto a = testutil::random_coefficient(lat, 18, 0.05);
  SolveOptions opts;
  opts.lambda = 0.05;
  opts.max_iterations = 2;
  try {
    solve_divform(a, testutil::random_vector(lat, 19), false, opts);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.residual() > opts.rel_tolerance);
    CHECK(e.iterations() <= 2);
  }
}

TEST_CASE("Dirichlet solves") {
  const Lattice lat(2, 32, 16.0);
  const SubBox box{{3, 20, 0}, 12};
  SUBCASE("affine data is reproduced for identity coefficients") {
    BoxField data(2, box.side, lat.spacing());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto c = data.coords(i);
      data.values[i] = 0.3 + 1.7 * c[0] * lat.spacing() - 0.4 * c[1] * lat.spacing();
    }
    SolveOptions opts;
    opts.rel_tolerance = 1e-13;
    const auto u = solve_dirichlet(TensorField::identity(lat), data, box, opts);
    CHECK(testutil::max_abs_diff(u.solution.values, data.values) < 1e-10);
  }
  SUBCASE("constant data") {
    BoxField data(2, box.side, lat.spacing());
    for (double& v : data.values) v = -1.25;
    const auto u = solve_dirichlet(testutil::random_coefficient(lat, 3), data, box, {});
    for (double v : u.solution.values) CHECK(v == doctest::Approx(-1.25).epsilon(1e-10));
  }
  SUBCASE("maximum principle") {
    for (int t = 0; t < 10; ++t) {
      // Scalar coefficients give an M-matrix stencil.
      ScalarField mu(lat);
      std::mt19937_64 rng(t);
      std::uniform_real_distribution<double> uni(0.5, 1.0);
      for (double& v : mu.values()) v = uni(rng);
      const auto a = TensorField::scalar(mu);
      BoxField data(2, box.side, lat.spacing());
      data.values = testutil::random_values(data.size(), 100 + t);
      double lo = 1e300, hi = -1e300;
      for (std::size_t i = 0; i < data.size(); ++i)
        if (data.on_boundary(i)) lo = std::min(lo, data.values[i]), hi = std::max(hi, data.values[i]);
      const auto u = solve_dirichlet(a, data, box, {});
      for (double v : u.solution.values) {
        CHECK(v >= lo - 1e-9);
        CHECK(v <= hi + 1e-9);
      }
    }
  }
  SUBCASE("bad inputs") {
    BoxField data(2, box.side, lat.spacing());
    data.values[0] = std::nan("");
    CHECK_THROWS_AS(solve_dirichlet(TensorField::identity(lat), data, box, {}), std::invalid_argument);
    BoxField big(2, 64, lat.spacing());
    CHECK_THROWS_AS(solve_dirichlet(TensorField::identity(lat), big, SubBox{{0, 0, 0}, 64}, {}),
                    std::invalid_argument);
  }
}

TEST_CASE("Meyers ratio") {
  const Lattice lat(2, 32);
  CHECK(meyers_ratio(TensorField::identity(lat), VectorField(lat), 2.5, {}) == 0.0);
  const auto h = testutil::random_vector(lat, 20);
  const double id = meyers_ratio(TensorField::identity(lat), h, 2.5, {});
  MESSAGE("identity Meyers ratio at p=2.5: " << id);
  // In L^2 the Helmholtz projection has norm 1.
  CHECK(meyers_ratio(TensorField::identity(lat), h, 2.0, {}) <= 1.0 + 1e-8);
  CHECK(id > 0.0);
  CHECK(std::isfinite(meyers_ratio(testutil::random_coefficient(lat, 21), h, 2.5, {})));
}
