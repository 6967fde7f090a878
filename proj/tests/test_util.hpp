#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "correctorlab/lattice.hpp"

namespace testutil {

inline std::vector<double> random_values(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(count);
  for (double& x : v) x = g(rng);
  return v;
}

inline correctorlab::ScalarField random_scalar(const correctorlab::Lattice& lat,
                                               std::uint64_t seed) {
  return correctorlab::ScalarField(lat, random_values(lat.size(), seed));
}

inline correctorlab::VectorField random_vector(const correctorlab::Lattice& lat,
                                               std::uint64_t seed) {
  return correctorlab::VectorField(lat, random_values(lat.size() * lat.dim(), seed));
}

// Symmetric coefficient field with per-site eigenvalues in [lambda, 1]: a random
// rotation of a diagonal with entries uniform in [lambda, 1] (d <= 2), or a
// scalar multiple of the identity in d = 1, 3.
inline correctorlab::TensorField random_coefficient(const correctorlab::Lattice& lat,
                                                    std::uint64_t seed, double lambda = 0.5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lambda, 1.0);
  std::uniform_real_distribution<double> ang(0.0, 3.141592653589793);
  const int d = lat.dim();
  correctorlab::TensorField a(lat);
  for (std::size_t x = 0; x < lat.size(); ++x) {
    if (d == 2) {
      const double l1 = u(rng), l2 = u(rng), t = ang(rng);
      const double c = std::cos(t), s = std::sin(t);
      a.component(0, 0)[x] = l1 * c * c + l2 * s * s;
      a.component(1, 1)[x] = l1 * s * s + l2 * c * c;
      a.component(0, 1)[x] = a.component(1, 0)[x] = (l1 - l2) * c * s;
    } else {
      const double m = u(rng);
      for (int r = 0; r < d; ++r) a.component(r, r)[x] = m;
    }
  }
  a.mark_symmetric();
  return a;
}

inline double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

inline double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace testutil
