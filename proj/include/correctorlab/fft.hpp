#pragma once

#include <complex>
#include <span>
#include <vector>

#include "correctorlab/lattice.hpp"

namespace correctorlab::fft {

using Spectrum = std::vector<std::complex<double>>;

/// Unnormalised forward DFT of a real lattice field (mode layout matches site layout).
Spectrum forward(const Lattice& lat, std::span<const double> values);
/// Inverse DFT including the 1/N factor; returns the real part.
std::vector<double> inverse_real(const Lattice& lat, Spectrum modes);

/// Signed integer wave number of a mode along one axis, in [-n/2, n/2).
inline int wave_index(const Lattice& lat, std::size_t mode, int axis) {
  return lat.signed_coord(mode, axis);
}

/// Discrete symbol of -Laplacian, (4/h^2) sum_j sin^2(pi k_j / n), one entry per mode.
std::vector<double> laplacian_symbol(const Lattice& lat);

}  // namespace correctorlab::fft
