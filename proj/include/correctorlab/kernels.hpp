#pragma once

#include <cstddef>
#include <span>

#include "correctorlab/lattice.hpp"

// Data-parallel inner loops of the solvers. `parallel` is the production path
// (OpenMP, deterministic blocked reductions); `serial` is the straightforward
// reference kept for testing and benchmarking.

namespace correctorlab::kernels {

/// Reductions are summed over fixed blocks of this many entries, then the block
/// partials are added in index order, so results do not depend on thread count.
inline constexpr std::size_t kReductionBlock = 4096;

namespace serial {

void grad(const Lattice& lat, std::span<const double> u, std::span<double> out);
void div(const Lattice& lat, std::span<const double> g, std::span<double> out);
/// out = -div(a grad u), or -div(a^T grad u) when transpose is set.
/// `flux` is scratch of size d * N.
void apply_divform(const Lattice& lat, std::span<const double> a, bool transpose,
                   std::span<const double> u, std::span<double> flux, std::span<double> out);
double dot(std::span<const double> x, std::span<const double> y);
double sum(std::span<const double> x);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double beta, std::span<double> y);

}  // namespace serial

namespace parallel {

void grad(const Lattice& lat, std::span<const double> u, std::span<double> out);
void div(const Lattice& lat, std::span<const double> g, std::span<double> out);
void apply_divform(const Lattice& lat, std::span<const double> a, bool transpose,
                   std::span<const double> u, std::span<double> flux, std::span<double> out);
double dot(std::span<const double> x, std::span<const double> y);
double sum(std::span<const double> x);
/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y = x + beta y
void xpby(std::span<const double> x, double beta, std::span<double> y);

}  // namespace parallel

}  // namespace correctorlab::kernels
