#include "correctorlab/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace correctorlab::fft {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int dim, int n, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(dim, n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    int dims[3] = {n, n, n};
    std::size_t total = 1;
    for (int j = 0; j < dim; ++j) total *= static_cast<std::size_t>(n);
    auto* in = fftw_alloc_complex(total);
    auto* out = fftw_alloc_complex(total);
    fftw_plan plan = fftw_plan_dft(dim, dims, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

Spectrum forward(const Lattice& lat, std::span<const double> values) {
  Spectrum in(values.begin(), values.end());
  Spectrum out(lat.size());
  fftw_execute_dft(cache().get(lat.dim(), lat.n(), FFTW_FORWARD), as_fftw(in.data()),
                   as_fftw(out.data()));
  return out;
}

std::vector<double> inverse_real(const Lattice& lat, Spectrum modes) {
  Spectrum out(lat.size());
  fftw_execute_dft(cache().get(lat.dim(), lat.n(), FFTW_BACKWARD), as_fftw(modes.data()),
                   as_fftw(out.data()));
  const double scale = 1.0 / static_cast<double>(lat.size());
  std::vector<double> real(lat.size());
  for (std::size_t k = 0; k < real.size(); ++k) real[k] = out[k].real() * scale;
  return real;
}

std::vector<double> laplacian_symbol(const Lattice& lat) {
  const int n = lat.n();
  const double h = lat.spacing();
  std::vector<double> axis(n);
  for (int k = 0; k < n; ++k) {
    const double s = std::sin(std::numbers::pi * k / n);
    axis[k] = 4.0 / (h * h) * s * s;
  }
  std::vector<double> symbol(lat.size(), 0.0);
  for (std::size_t m = 0; m < lat.size(); ++m)
    for (int j = 0; j < lat.dim(); ++j) symbol[m] += axis[lat.coord(m, j)];
  return symbol;
}

}  // namespace correctorlab::fft
