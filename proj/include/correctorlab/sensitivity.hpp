#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "correctorlab/ellipticsolve.hpp"
#include "correctorlab/functionals.hpp"
#include "correctorlab/gaussfield.hpp"
#include "correctorlab/lattice.hpp"
#include "correctorlab/stats.hpp"

namespace correctorlab {

/// 1/q = 1 - beta/(2d), 1/p = 1/q - 1/2, dual_p = p/(p-1) = 2d/(d+beta).
struct ExponentSet {
  int dim = 0;
  double beta = 0.0;
  double q = 0.0;
  double p = 0.0;
  double dual_p = 0.0;
};

/// Requires beta in (0, d).
ExponentSet exponents(double beta, int dim);

/// Derivative of F applied to grad phi_i or grad sigma_ijk with respect to a, in the
/// lattice pairing: dF = sum_x sum_rc derivative_rc(x) da_rc(x) h^d.
struct MalliavinField {
  TensorField derivative;
  FunctionalSpec functional;
  /// phi functionals: {vbar}; sigma functionals: {v, vtilde}.
  std::vector<ScalarField> auxiliaries;
};

/// vbar solves -div(a^T grad vbar) = div g; derivative = grad vbar (x) (grad phi_i + e_i).
MalliavinField malliavin_phi(const TensorField& a, const ScalarField& phi_i,
                             const FunctionalSpec& F, int i, const SolveOptions& opts);

/// v = poisson_solve(div g), w = d^-_j v e_k - d^-_k v e_j (backward differences, the
/// exact adjoint of the forward differences in the sigma equation), vtilde solves
/// -div(a^T grad vtilde) = div(a^T w); derivative = (w + grad vtilde) (x) (grad phi_i + e_i).
MalliavinField malliavin_sigma(const TensorField& a, const ScalarField& phi_i,
                               const FunctionalSpec& F, int i, int j, int k,
                               const SolveOptions& opts);

/// sum_x sum_rc D_rc(x) E_rc(x) h^d.
double pair(const TensorField& D, const TensorField& E);

/// F(grad phi_i) and F(grad sigma_ijk) by a full solve.
double evaluate_phi_functional(const TensorField& a, const FunctionalSpec& F, int i,
                               const SolveOptions& opts);
double evaluate_sigma_functional(const TensorField& a, const FunctionalSpec& F, int i, int j,
                                 int k, const SolveOptions& opts);

/// Symmetric tensor field with iid uniform entries, scaled to sup norm 1.
TensorField random_symmetric_direction(const Lattice& lattice, std::uint64_t seed);

enum class FunctionalKind { Phi, Sigma };

struct RepresentationCheckOptions {
  FunctionalKind kind = FunctionalKind::Phi;
  int i = 0, j = 0, k = 1;
  int trials = 10;
  /// Step sizes, multiplied by max |a|.
  std::vector<double> eps{1e-3, 1e-4};
  std::uint64_t seed = 0;
  SolveOptions solve{1e-13, 0, 0.5};
};

struct RepresentationCheck {
  std::vector<double> eps;
  std::vector<double> predicted;               // <dF/da, da> per trial
  std::vector<std::vector<double>> rel_error;  // [eps][trial]
  double max_error(std::size_t eps_index) const;
  /// The worst error shrinks with every decrease of eps.
  bool converging() const;
};

/// Compares the representation against central differences (F(a + e da) - F(a - e da)) / 2e
/// for random symmetric directions da.
RepresentationCheck check_representation(const TensorField& a, const FunctionalSpec& F,
                                         const RepresentationCheckOptions& opts);

struct ScalingStudyConfig {
  Lattice lattice;
  CovarianceSpec covariance;
  CoefficientMapSpec map;
  int sample_count = 50;
  std::uint64_t base_seed = 0;
  std::vector<double> radii{4, 8, 16, 32};
  int direction = 0;   // corrector phi_i
  int component = 0;   // averaged component of grad phi_i
  int workers = 1;
  SolveOptions solve;
};

struct ScalingRow {
  double beta = 0.0;
  double r = 0.0;
  int sample = 0;
  double lq_norm = 0.0;
  std::uint64_t seed = 0;
};

struct ScalingStudy {
  ExponentSet exps;
  std::vector<ScalingRow> rows;
  std::vector<double> radii;
  std::vector<double> mean_norms;
  stats::LinearFit fit;  // log mean norm against log r
};

/// ||dF_r/da||_q for the average functional of radius r at the origin, one realization.
std::vector<double> sensitivity_norms(const TensorField& a, const ScalarField& phi_i, int i,
                                      int component, const std::vector<double>& radii, double q,
                                      const SolveOptions& opts);

/// Samples (base_seed, s), s < sample_count; per-sample work runs on `workers` threads
/// and the result does not depend on that number. Radii must be dyadic and <= L/8.
ScalingStudy lq_scaling_study(const ScalingStudyConfig& config);

/// Columns beta,r,sample,lq_norm,seed.
void write_scaling_csv(const ScalingStudy& study, std::ostream& out);

struct DecayProfile {
  std::vector<double> inner_radii;  // 2^n r, n = 1, 2, ... while 2^{n+1} r <= L/2
  std::vector<double> norms;        // ||grad v||_p on 2^n r <= |x| < 2^{n+1} r
  double total = 0.0;               // ||grad v||_p on the box
  double slope = 0.0;               // log-log fit of norms against inner radii
  double predicted = 0.0;           // -d + d/p
};

/// Annuli in the minimum-image Euclidean distance from `center`.
DecayProfile decay_profile(const ScalarField& v, double r, double p,
                           std::array<long, 3> center = {0, 0, 0});

/// sum_rc sum_{x,y} D_rc(x) C(x - y) D_rc(y) h^{2d}, evaluated in Fourier space with
/// the model's spectrum; each tensor component is an independent copy of the field.
double cov_quadratic_form(const TensorField& dF_datilde, const CovarianceModel& model);
double cov_quadratic_form(const TensorField& dF_datilde, const CovarianceSpec& spec);

}  // namespace correctorlab
