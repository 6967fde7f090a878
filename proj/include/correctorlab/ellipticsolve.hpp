#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "correctorlab/lattice.hpp"

namespace correctorlab {

struct SolveOptions {
  double rel_tolerance = 1e-10;
  /// <= 0 selects 10 * n * d.
  int max_iterations = 0;
  /// Ellipticity used for the constant-coefficient preconditioner (lambda + 1)/2 Id.
  double lambda = 0.5;

  void validate() const;
};

/// Raised when CG does not reach the tolerance; carries the last relative residual.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

struct SolveResult {
  ScalarField solution;
  double residual = 0.0;  // ||b - A u|| / ||b||, true residual
  int iterations = 0;
};

/// Zero-mean u with -Laplace u = rhs - mean(rhs), by division of Fourier modes.
ScalarField poisson_solve(const ScalarField& rhs);

/// Applies -div(a grad u) (or with a^T when transpose is set).
ScalarField apply_divform(const TensorField& a, const ScalarField& u, bool transpose = false);

/// Zero-mean u with -div(a grad u) = div h. Preconditioned CG for pointwise symmetric a,
/// BiCGSTAB otherwise.
SolveResult solve_divform(const TensorField& a, const VectorField& h, bool transpose,
                          const SolveOptions& opts);

/// Same, for an explicit zero-mean right-hand side f: -div(a grad u) = f.
SolveResult solve_divform_rhs(const TensorField& a, const ScalarField& f, bool transpose,
                              const SolveOptions& opts);

/// A non-periodic cubic block of sites, addressed in local coordinates 0..side-1.
struct SubBox {
  std::array<long, 3> corner{0, 0, 0};  // torus coordinates of local (0,...,0)
  int side = 0;
};

/// Values on a SubBox, axis 0 fastest.
struct BoxField {
  int dim = 0;
  int side = 0;
  double spacing = 1.0;
  std::vector<double> values;

  BoxField() = default;
  BoxField(int d, int m, double h);
  std::size_t size() const { return values.size(); }
  std::size_t index(const std::array<int, 3>& local) const;
  std::array<int, 3> coords(std::size_t i) const;
  bool on_boundary(std::size_t i) const;
};

/// Copies a periodic field onto the box (wrapping).
BoxField restrict_to_box(const ScalarField& field, const SubBox& box);

struct DirichletResult {
  BoxField solution;
  double residual = 0.0;
  int iterations = 0;
};

/// u with -div(a grad u) = 0 at interior sites and u = boundary data on the
/// one-site boundary layer. Requires the box to fit inside the torus.
DirichletResult solve_dirichlet(const TensorField& a, const BoxField& boundary, const SubBox& box,
                                const SolveOptions& opts);

/// ||grad w||_p / ||h||_p with w = solve_divform(a, h); 0 when h = 0.
double meyers_ratio(const TensorField& a, const VectorField& h, double p,
                    const SolveOptions& opts);

}  // namespace correctorlab
