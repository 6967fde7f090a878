#include "correctorlab/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "correctorlab/kernels.hpp"

namespace correctorlab {

Lattice::Lattice(int dim, int sites_per_axis, double box_size) : dim_(dim), n_(sites_per_axis) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("lattice dimension must be 1, 2 or 3");
  if (sites_per_axis < 4 || !std::has_single_bit(static_cast<unsigned>(sites_per_axis)))
    throw std::invalid_argument("sites per axis must be a power of two >= 4, got " +
                                std::to_string(sites_per_axis));
  box_size_ = box_size > 0.0 ? box_size : static_cast<double>(sites_per_axis);
  spacing_ = box_size_ / n_;
  cell_volume_ = std::pow(spacing_, dim_);
  shift_ = std::countr_zero(static_cast<unsigned>(n_));
  mask_ = static_cast<std::size_t>(n_ - 1);
  size_ = std::size_t{1} << (shift_ * dim_);
}

std::size_t Lattice::index(std::span<const long> coords) const {
  std::size_t site = 0;
  for (int j = 0; j < dim_; ++j) {
    const long c = ((coords[j] % n_) + n_) % n_;
    site += static_cast<std::size_t>(c) * stride(j);
  }
  return site;
}

ScalarField::ScalarField(const Lattice& lattice, std::vector<double> values)
    : lattice_(lattice), values_(std::move(values)) {
  if (values_.size() != lattice_.size()) throw std::invalid_argument("scalar field size mismatch");
}

VectorField::VectorField(const Lattice& lattice, std::vector<double> values)
    : lattice_(lattice), values_(std::move(values)) {
  if (values_.size() != lattice_.size() * lattice_.dim())
    throw std::invalid_argument("vector field size mismatch");
}

void TensorField::mark_symmetric() {
  const int d = lattice_.dim();
  for (int r = 0; r < d; ++r)
    for (int c = r + 1; c < d; ++c) {
      auto upper = component(r, c);
      auto lower = component(c, r);
      for (std::size_t x = 0; x < upper.size(); ++x)
        if (std::abs(upper[x] - lower[x]) > 1e-12)
          throw std::invalid_argument("tensor field is not symmetric");
    }
  symmetric_ = true;
}

TensorField TensorField::identity(const Lattice& lattice) {
  TensorField a(lattice, true);
  for (int r = 0; r < lattice.dim(); ++r)
    for (double& v : a.component(r, r)) v = 1.0;
  return a;
}

TensorField TensorField::scalar(const ScalarField& mu) {
  TensorField a(mu.lattice(), true);
  for (int r = 0; r < mu.lattice().dim(); ++r) {
    auto comp = a.component(r, r);
    std::copy(mu.values().begin(), mu.values().end(), comp.begin());
  }
  return a;
}

std::vector<std::size_t> DyadicCube::sites(const Lattice& lattice) const {
  const int d = lattice.dim();
  std::size_t count = 1;
  for (int j = 0; j < d; ++j) count *= static_cast<std::size_t>(side_sites);
  std::vector<std::size_t> out;
  out.reserve(count);
  std::array<long, 3> c{};
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t rem = k;
    for (int j = 0; j < d; ++j) {
      c[j] = corner[j] + static_cast<long>(rem % side_sites);
      rem /= side_sites;
    }
    out.push_back(lattice.index(std::span<const long>(c.data(), d)));
  }
  return out;
}

int cube_side_sites(const Lattice& lattice, double radius) {
  const double m = 2.0 * radius / lattice.spacing();
  const long mi = std::lround(m);
  if (mi < 1 || std::abs(m - mi) > 1e-9 * std::max(1.0, m) ||
      !std::has_single_bit(static_cast<unsigned long>(mi)) || mi > lattice.n())
    throw std::invalid_argument("radius " + std::to_string(radius) +
                                " is not a dyadic cube radius on this lattice");
  return static_cast<int>(mi);
}

DyadicCube centered_cube(const Lattice& lattice, double radius, std::array<long, 3> center) {
  DyadicCube cube;
  cube.radius = radius;
  cube.side_sites = cube_side_sites(lattice, radius);
  for (int j = 0; j < lattice.dim(); ++j) cube.corner[j] = center[j] - cube.side_sites / 2;
  return cube;
}

std::vector<DyadicCube> dyadic_partition(const Lattice& lattice, double radius) {
  const int m = cube_side_sites(lattice, radius);
  const int per_axis = lattice.n() / m;
  std::size_t count = 1;
  for (int j = 0; j < lattice.dim(); ++j) count *= per_axis;
  std::vector<DyadicCube> cubes;
  cubes.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    DyadicCube cube;
    cube.radius = radius;
    cube.side_sites = m;
    std::size_t rem = k;
    for (int j = 0; j < lattice.dim(); ++j) {
      cube.corner[j] = static_cast<long>(rem % per_axis) * m;
      rem /= per_axis;
    }
    cubes.push_back(cube);
  }
  return cubes;
}

VectorField grad(const ScalarField& u) {
  VectorField out(u.lattice());
  kernels::parallel::grad(u.lattice(), u.values(), out.values());
  return out;
}

ScalarField div(const VectorField& h) {
  ScalarField out(h.lattice());
  kernels::parallel::div(h.lattice(), h.values(), out.values());
  return out;
}

ScalarField partial(const ScalarField& u, int axis) {
  const Lattice& lat = u.lattice();
  ScalarField out(lat);
  const double inv_h = 1.0 / lat.spacing();
  for (std::size_t x = 0; x < lat.size(); ++x)
    out[x] = (u[lat.neighbor(x, axis, 1)] - u[x]) * inv_h;
  return out;
}

ScalarField partial_backward(const ScalarField& u, int axis) {
  const Lattice& lat = u.lattice();
  ScalarField out(lat);
  const double inv_h = 1.0 / lat.spacing();
  for (std::size_t x = 0; x < lat.size(); ++x)
    out[x] = (u[x] - u[lat.neighbor(x, axis, -1)]) * inv_h;
  return out;
}

double cube_average(std::span<const double> values, const Lattice& lattice,
                    const DyadicCube& cube) {
  const auto sites = cube.sites(lattice);
  if (sites.empty()) throw std::invalid_argument("empty cube");
  double s = 0.0;
  for (std::size_t x : sites) s += values[x];
  return s / static_cast<double>(sites.size());
}

double cube_average(const ScalarField& field, const DyadicCube& cube) {
  return cube_average(field.values(), field.lattice(), cube);
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return kernels::parallel::sum(values) / static_cast<double>(values.size());
}

double inner(std::span<const double> f, std::span<const double> g, const Lattice& lattice) {
  return kernels::parallel::dot(f, g) * lattice.cell_volume();
}

namespace {

// Per-site magnitude over `components` blocks of N entries each.
double lq_blocks(const Lattice& lat, std::span<const double> values, int components, double q,
                 const DyadicCube* region) {
  if (!(q >= 1.0)) throw std::invalid_argument("lq_norm requires q >= 1");
  const std::size_t N = lat.size();
  auto site_term = [&](std::size_t x) {
    double m2 = 0.0;
    for (int c = 0; c < components; ++c) m2 += values[c * N + x] * values[c * N + x];
    return q == 2.0 ? m2 : std::pow(std::sqrt(m2), q);
  };
  double s = 0.0;
  if (region) {
    for (std::size_t x : region->sites(lat)) s += site_term(x);
  } else {
    for (std::size_t x = 0; x < N; ++x) s += site_term(x);
  }
  return std::pow(s * lat.cell_volume(), 1.0 / q);
}

}  // namespace

double lq_norm(const ScalarField& field, double q, const DyadicCube* region) {
  return lq_blocks(field.lattice(), field.values(), 1, q, region);
}

double lq_norm(const VectorField& field, double q, const DyadicCube* region) {
  return lq_blocks(field.lattice(), field.values(), field.lattice().dim(), q, region);
}

double lq_norm(const TensorField& field, double q, const DyadicCube* region) {
  const int d = field.lattice().dim();
  return lq_blocks(field.lattice(), field.values(), d * d, q, region);
}

}  // namespace correctorlab
