// Serial reference kernels against their OpenMP counterparts, plus a full solve.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "correctorlab/corrector.hpp"
#include "correctorlab/gaussfield.hpp"
#include "correctorlab/kernels.hpp"

using namespace correctorlab;

namespace {

std::vector<double> noise(std::size_t count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> v(count);
  for (double& x : v) x = z(rng);
  return v;
}

struct Setup {
  Lattice lat;
  TensorField a;
  std::vector<double> u, flux, out;
  explicit Setup(int d, int n)
      : lat(d, n),
        a(apply_phi(synthesize_gaussian({0.5, 1.0, 0.0}, lat, {1, 0}), {})),
        u(noise(lat.size(), 2)),
        flux(lat.size() * d),
        out(lat.size()) {}
};

template <bool Parallel>
void BM_apply_divform(benchmark::State& state) {
  Setup s(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::apply_divform(s.lat, s.a.values(), false, s.u, s.flux, s.out);
    else
      kernels::serial::apply_divform(s.lat, s.a.values(), false, s.u, s.flux, s.out);
    benchmark::DoNotOptimize(s.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.lat.size()));
}

template <bool Parallel>
void BM_dot(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)), 3);
  const auto y = noise(x.size(), 4);
  for (auto _ : state) {
    double v = Parallel ? kernels::parallel::dot(x, y) : kernels::serial::dot(x, y);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_grad(benchmark::State& state) {
  const Lattice lat(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const auto u = noise(lat.size(), 5);
  std::vector<double> g(lat.size() * lat.dim());
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::parallel::grad(lat, u, g);
    else
      kernels::serial::grad(lat, u, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(lat.size()));
}

void BM_build_correctors(benchmark::State& state) {
  const Lattice lat(2, static_cast<int>(state.range(0)));
  const auto a = apply_phi(synthesize_gaussian({0.5, 1.0, 0.0}, lat, {1, 0}), {});
  for (auto _ : state) benchmark::DoNotOptimize(build_correctors(a, {}).a_hom.data());
}

}  // namespace

BENCHMARK(BM_apply_divform<false>)->Name("apply_divform/serial")->Args({2, 256})->Args({3, 64});
BENCHMARK(BM_apply_divform<true>)->Name("apply_divform/parallel")->Args({2, 256})->Args({3, 64});
BENCHMARK(BM_dot<false>)->Name("dot/serial")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_dot<true>)->Name("dot/parallel")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_grad<false>)->Name("grad/serial")->Args({2, 256})->Args({3, 64});
BENCHMARK(BM_grad<true>)->Name("grad/parallel")->Args({2, 256})->Args({3, 64});
BENCHMARK(BM_build_correctors)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
