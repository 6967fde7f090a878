#pragma once

#include <vector>

#include "correctorlab/ellipticsolve.hpp"
#include "correctorlab/lattice.hpp"

namespace correctorlab {

/// Extended corrector (phi, sigma) of one coefficient realization.
///
/// sigma is stored for j < k only; sigma(i, k, j) = -sigma(i, j, k).
struct CorrectorSet {
  Lattice lattice;
  std::vector<ScalarField> phi;      // d fields
  std::vector<ScalarField> sigma;    // d * d(d-1)/2 fields, see sigma_slot
  std::vector<VectorField> flux;     // q_i = a (e_i + grad phi_i)
  std::vector<double> a_hom;         // d x d, row-major; column i = box mean of q_i
  std::vector<double> phi_residual;  // relative CG residual per direction
  std::vector<int> phi_iterations;
  std::vector<double> flux_potential_residual;  // check_flux_potential per i

  int dim() const { return lattice.dim(); }
  double a_hom_at(int r, int c) const { return a_hom[r * dim() + c]; }
  /// sigma_ijk as a field (a negated copy when j > k, zero when j == k).
  ScalarField sigma_at(int i, int j, int k) const;
};

/// Position of (j, k), j < k, among the d(d-1)/2 pairs in lexicographic order.
int sigma_pair_index(int dim, int j, int k);
int sigma_slot(int dim, int i, int j, int k);

/// phi_i solving -div(a (e_i + grad phi_i)) = 0 with zero mean.
SolveResult solve_corrector(const TensorField& a, int i, const SolveOptions& opts);

/// q_i = a (e_i + grad phi_i).
VectorField flux(const TensorField& a, const ScalarField& phi_i, int i);

/// d x d row-major matrix whose column i is the box average of q_i.
std::vector<double> homogenized_coefficient(const std::vector<VectorField>& fluxes);

/// sigma_ijk for j < k from -Laplace sigma_ijk = d_j q_ik - d_k q_ij (forward differences).
std::vector<ScalarField> solve_sigma(const VectorField& q_i);

/// ||div sigma_i - (q_i - mean q_i)|| / ||q_i - mean q_i||, div with backward differences;
/// normalised by ||q_i|| instead when q_i is constant to rounding; 0 when both sides vanish.
double check_flux_potential(const std::vector<ScalarField>& sigma_i, const VectorField& q_i);

/// Full assembly: all phi_i, q_i, a_hom, sigma and the flux-potential residuals.
CorrectorSet build_correctors(const TensorField& a, const SolveOptions& opts);

}  // namespace correctorlab
