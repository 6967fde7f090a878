#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "correctorlab/corrector.hpp"
#include "correctorlab/ellipticsolve.hpp"
#include "correctorlab/lattice.hpp"

namespace correctorlab {

/// Linear functional F h = sum_x g(x) . h(x) h^d with weight g supported in a cube.
struct FunctionalSpec {
  VectorField weight;
  double radius = 0.0;
  double norm_exponent = 2.0;  // p of the normalisation ||g||_p <= r^{-(p-1)d/p}
  DyadicCube support;
  int component = 0;

  double apply(const VectorField& h) const;
  /// ||g||_p * r^{(p-1)d/p}; at most 1 for an admissible weight.
  double certificate() const;
};

/// Average of component `component` over the cube of radius r centred at `center`.
FunctionalSpec make_average_functional(const Lattice& lattice, double radius, int component,
                                       double norm_exponent = 2.0,
                                       std::array<long, 3> center = {0, 0, 0});

/// (avg_{support} |h|^s)^{1/s} with s = 2d/(d+beta): the right-hand side of the
/// boundedness requirement on functionals at scale r.
double boundedness_bound(const FunctionalSpec& functional, const VectorField& h, double beta);

/// F_n zeta = (1/r) (avg_{Q'_n} zeta - avg_Q zeta) with Q of radius r and Q'_n its
/// 2^d children of radius r/2. Acts on zeta itself; only differences enter, so the
/// value depends on grad zeta alone.
struct SubcubeFunctional {
  DyadicCube parent;
  DyadicCube child;
  double apply(const ScalarField& zeta) const;
};

std::vector<SubcubeFunctional> make_subcube_functionals(const Lattice& lattice, double radius,
                                                        std::array<long, 3> center = {0, 0, 0});

/// Replaces values on each level-r subcube of the window by their cube average;
/// sites outside the window are left unchanged.
ScalarField dyadic_projection(const ScalarField& field, double radius, const DyadicCube& window);

struct MultiscaleEnergy {
  double fine = 0.0;            // avg_window |f - f_{r1}|^2
  std::vector<double> radii;    // 2 r1, 4 r1, ..., R
  std::vector<double> levels;   // avg_window |f_{r/2} - f_r|^2
  double total = 0.0;           // avg_window |f - avg_window f|^2

  double sum() const;
};

/// Orthogonal decomposition of the centred energy of a multi-component field on
/// the window of radius R centred at `center`.
MultiscaleEnergy multiscale_energy(const std::vector<ScalarField>& components, double r1, double R,
                                   std::array<long, 3> center = {0, 0, 0});

/// The components (phi_i, sigma_ijk over all j != k) as one stacked field.
std::vector<ScalarField> corrector_components(const CorrectorSet& set);

/// D(r) = (1/r) (avg_{cube r} sum_c |f_c - avg f_c|^2)^{1/2}.
double sublinearity(const std::vector<ScalarField>& components, double radius,
                    std::array<long, 3> center = {0, 0, 0});

/// f(z) = log(e + log z).
double iterated_log(double z);

/// Dyadic r1 in [r0, R] closest (in log) to r0^{beta/2} R^{1-beta/2} f(R/r0)^{1/2}.
double intermediate_radius(double r0, double R, double beta, const Lattice& lattice);

/// Dyadic radii 4h, 8h, ..., L/4 used by the minimal-radius scan.
std::vector<double> rstar_radii(const Lattice& lattice);

struct RstarReport {
  double rstar = 0.0;
  bool censored = false;
  std::vector<double> radii;
  std::vector<double> sublinearity;  // D(r)
  std::vector<double> f_values;      // f(r / rstar)
};

/// Smallest dyadic r0 in [4h, L/4] with D(r)^2 <= (r0/r)^beta f(r/r0) for every dyadic
/// r in [r0, L/4]; L/4 flagged as censored when even r0 = L/4 fails.
RstarReport estimate_rstar(const std::vector<ScalarField>& components, double beta,
                           std::array<long, 3> center = {0, 0, 0});

/// Same scan on a precomputed D table (radii ascending).
RstarReport rstar_from_table(const std::vector<double>& radii, const std::vector<double>& D,
                             double beta);

struct MeanValueOptions {
  double r = 4.0;
  double R = 16.0;
  int random_trials = 8;
  bool corrected_coordinates = true;
  /// Harmonic-polynomial degree of the random boundary data.
  int boundary_modes = 2;
  /// Smallness screen: max_{R' in [r, L/4]} D(R') <= threshold.
  double smallness_threshold = 0.5;
  std::uint64_t seed = 0;
  SolveOptions solve;
};

struct MeanValueReport {
  std::vector<std::string> kinds;   // "random" or "coordinate"
  std::vector<double> ratios;       // max_rho avg_rho |grad u|^2 / avg_R |grad u|^2
  std::vector<double> reverse_holder;
  double max_ratio = 0.0;
  double smallness = 0.0;
  bool passes_screen = false;
};

/// Mean-value diagnostic on the cube of radius R centred at the origin. Random
/// trials solve Dirichlet problems with smooth Gaussian boundary data; coordinate
/// trials use u = x_i + phi_i directly.
MeanValueReport mean_value_check(const TensorField& a, const CorrectorSet& correctors,
                                 const MeanValueOptions& opts);

/// max over dyadic rho in [r, R] of avg_rho |grad u|^2 / avg_R |grad u|^2 for u on a
/// box of side 2R/h + 1 (centred cubes, forward differences inside the box).
double mean_value_ratio(const BoxField& u, double r, double R);

/// (avg_{R/2} |grad u|^2)^{1/2} / avg_R |grad u| on the same box layout.
double reverse_holder_ratio(const BoxField& u, double R);

/// (sum_{cube rho} |grad(phi,sigma)|^2 h^d)^{1/2} divided by
/// (1/rho) (sum_{cube 2rho} |(phi,sigma) - mean|^2 h^d)^{1/2} + rho^{d/2}.
double caccioppoli_ratio(const std::vector<ScalarField>& components, double rho,
                         std::array<long, 3> center = {0, 0, 0});

}  // namespace correctorlab
