#include "correctorlab/kernels.hpp"

#include <algorithm>
#include <vector>

namespace correctorlab::kernels {

namespace {

// Flux (a grad u) at one site; a is component-major d x d.
inline void site_flux(const Lattice& lat, std::span<const double> a, bool transpose,
                      std::span<const double> u, std::size_t x, double* out) {
  const int d = lat.dim();
  const std::size_t N = lat.size();
  const double inv_h = 1.0 / lat.spacing();
  double gradu[3];
  for (int c = 0; c < d; ++c) gradu[c] = (u[lat.neighbor(x, c, 1)] - u[x]) * inv_h;
  for (int r = 0; r < d; ++r) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
      const int block = transpose ? c * d + r : r * d + c;
      s += a[block * N + x] * gradu[c];
    }
    out[r] = s;
  }
}

}  // namespace

namespace serial {

void grad(const Lattice& lat, std::span<const double> u, std::span<double> out) {
  const std::size_t N = lat.size();
  const double inv_h = 1.0 / lat.spacing();
  for (int j = 0; j < lat.dim(); ++j)
    for (std::size_t x = 0; x < N; ++x)
      out[j * N + x] = (u[lat.neighbor(x, j, 1)] - u[x]) * inv_h;
}

void div(const Lattice& lat, std::span<const double> g, std::span<double> out) {
  const std::size_t N = lat.size();
  const double inv_h = 1.0 / lat.spacing();
  for (std::size_t x = 0; x < N; ++x) {
    double s = 0.0;
    for (int j = 0; j < lat.dim(); ++j) s += g[j * N + x] - g[j * N + lat.neighbor(x, j, -1)];
    out[x] = s * inv_h;
  }
}

void apply_divform(const Lattice& lat, std::span<const double> a, bool transpose,
                   std::span<const double> u, std::span<double> flux, std::span<double> out) {
  const std::size_t N = lat.size();
  const int d = lat.dim();
  double f[3];
  for (std::size_t x = 0; x < N; ++x) {
    site_flux(lat, a, transpose, u, x, f);
    for (int r = 0; r < d; ++r) flux[r * N + x] = f[r];
  }
  div(lat, flux, out);
  for (std::size_t x = 0; x < N; ++x) out[x] = -out[x];
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double sum(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * y[i];
}

}  // namespace serial

namespace parallel {

void grad(const Lattice& lat, std::span<const double> u, std::span<double> out) {
  const std::ptrdiff_t N = static_cast<std::ptrdiff_t>(lat.size());
  const double inv_h = 1.0 / lat.spacing();
  const int d = lat.dim();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t x = 0; x < N; ++x)
    for (int j = 0; j < d; ++j)
      out[j * N + x] = (u[lat.neighbor(x, j, 1)] - u[x]) * inv_h;
}

void div(const Lattice& lat, std::span<const double> g, std::span<double> out) {
  const std::ptrdiff_t N = static_cast<std::ptrdiff_t>(lat.size());
  const double inv_h = 1.0 / lat.spacing();
  const int d = lat.dim();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t x = 0; x < N; ++x) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += g[j * N + x] - g[j * N + lat.neighbor(x, j, -1)];
    out[x] = s * inv_h;
  }
}

void apply_divform(const Lattice& lat, std::span<const double> a, bool transpose,
                   std::span<const double> u, std::span<double> flux, std::span<double> out) {
  const std::ptrdiff_t N = static_cast<std::ptrdiff_t>(lat.size());
  const int d = lat.dim();
  const double inv_h = 1.0 / lat.spacing();
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (std::ptrdiff_t x = 0; x < N; ++x) {
      double f[3];
      site_flux(lat, a, transpose, u, x, f);
      for (int r = 0; r < d; ++r) flux[r * N + x] = f[r];
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t x = 0; x < N; ++x) {
      double s = 0.0;
      for (int j = 0; j < d; ++j)
        s += flux[j * N + x] - flux[j * N + lat.neighbor(x, j, -1)];
      out[x] = -s * inv_h;
    }
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((n + kReductionBlock - 1) / kReductionBlock);
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i] * y[i];
    partial[b] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double sum(std::span<const double> x) {
  const std::size_t n = x.size();
  const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>((n + kReductionBlock - 1) / kReductionBlock);
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += x[i];
    partial[b] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

}  // namespace parallel

}  // namespace correctorlab::kernels
