#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "correctorlab/lattice.hpp"

namespace correctorlab {

/// Power-law covariance |C(x)| <= amplitude * |x|^{-beta} for |x| >= 1.
struct CovarianceSpec {
  double beta = 0.5;
  double amplitude = 1.0;
  /// Regularisation length l0 >= h entering the infrared mass 2pi/(L l0).
  /// A non-positive value selects l0 = L.
  double smoothing_scale = 0.0;
};

enum class MapVariant { ScalarIsotropic, EigenvalueClamp };

std::string to_string(MapVariant variant);
MapVariant map_variant_from_string(const std::string& name);

/// The pointwise 1-Lipschitz map from tensors to lambda-elliptic symmetric tensors.
struct CoefficientMapSpec {
  MapVariant variant = MapVariant::ScalarIsotropic;
  double lambda = 0.5;
};

/// (base_seed, sample_index) determines a realization bit-reproducibly.
struct FieldSeed {
  std::uint64_t base_seed = 0;
  std::uint64_t sample_index = 0;
};

/// Discrete spectrum of a stationary covariance on the torus.
///
/// `spectrum()[k]` is the DFT of the covariance kernel, so a field built as
/// IFFT(sqrt(P) * FFT(white noise)) has covariance IFFT(P).
class CovarianceModel {
 public:
  /// Cell-averaged density (|xi|^2 + m^2)^{(beta-d)/2} with m = 2pi/(L l0). The zero
  /// mode is removed and the mass of the central cell is moved to the 2d
  /// fundamental modes; the result is scaled so that max_{|x|>=1} |C(x)| |x|^beta
  /// equals the amplitude.
  static CovarianceModel from_spec(const CovarianceSpec& spec, const Lattice& lattice);
  /// Delta-correlated kernel with the given variance (constant spectrum).
  static CovarianceModel white(const Lattice& lattice, double variance);

  const Lattice& lattice() const { return lattice_; }
  std::span<const double> spectrum() const { return spectrum_; }
  /// Covariance C(x) = <f(x) f(0)> at every site.
  std::vector<double> kernel() const;
  double variance() const;

 private:
  Lattice lattice_;
  std::vector<double> spectrum_;
};

/// Independent centred Gaussian draws for each of the d*d tensor components.
TensorField synthesize_gaussian(const CovarianceModel& model, FieldSeed seed);
TensorField synthesize_gaussian(const CovarianceSpec& spec, const Lattice& lattice,
                                FieldSeed seed);

/// Scalar-isotropic squashing S onto [0,1] with S(0) = 1/2, and its derivative.
double squash(double t, double lambda, int dim);
double squash_slope(double t, double lambda, int dim);

/// Phi on a single d x d matrix (row-major in, row-major out).
void apply_phi_matrix(std::span<const double> m, int dim, const CoefficientMapSpec& map,
                      std::span<double> out);

/// Pointwise a(x) = Phi(atilde(x)); output is symmetric with spectrum in [lambda, 1].
TensorField apply_phi(const TensorField& atilde, const CoefficientMapSpec& map);

/// Chain rule dF/datilde = Phi'(atilde)^T dF/da (scalar-isotropic map only).
TensorField pullback_derivative(const TensorField& atilde, const TensorField& dF_da,
                                const CoefficientMapSpec& map);

struct RadialCovariance {
  std::vector<double> lag;       // physical lag
  std::vector<double> value;     // pooled estimate
  std::vector<double> std_error; // across samples; 0 with a single sample
};

/// Pooled <atilde_c(x + rho e) atilde_c(x)> over sites, axis directions e and samples,
/// for lags 0 and dyadic rho up to L/2.
RadialCovariance estimate_covariance(std::span<const TensorField> samples, int row = 0,
                                     int col = 0);

}  // namespace correctorlab
