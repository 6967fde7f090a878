#include "correctorlab/ellipticsolve.hpp"

#include <cmath>
#include <vector>

#include "correctorlab/fft.hpp"
#include "correctorlab/kernels.hpp"

namespace correctorlab {

namespace kp = kernels::parallel;

void SolveOptions::validate() const {
  if (!(rel_tolerance > 0.0 && rel_tolerance <= 1e-4))
    throw std::invalid_argument("rel_tolerance must lie in (0, 1e-4]");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0, 1)");
}

namespace {

struct CgOutcome {
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

double norm2(std::span<const double> v) { return std::sqrt(kp::dot(v, v)); }

void subtract_mean(std::span<double> v) {
  const double m = kp::sum(v) / static_cast<double>(v.size());
  for (double& x : v) x -= m;
}

// Preconditioned CG from x = 0. `apply(in, out)` and `precond(in, out)` act on
// vectors of b's length. Convergence is declared on the true residual; when the
// recursive residual drifts the iteration restarts from the true one.
template <class Apply, class Precond>
CgOutcome pcg(Apply&& apply, Precond&& precond, std::span<const double> b, std::vector<double>& x,
              double tol, int max_iterations) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  CgOutcome out;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  std::vector<double> r(b.begin(), b.end()), z(n), p(n), Ap(n);
  precond(r, z);
  p = z;
  double rz = kp::dot(r, z);
  int restarts = 0;
  while (out.iterations < max_iterations) {
    apply(p, Ap);
    const double pAp = kp::dot(p, Ap);
    if (!(pAp > 0.0)) break;
    const double alpha = rz / pAp;
    kp::axpy(alpha, p, x);
    kp::axpy(-alpha, Ap, r);
    ++out.iterations;
    if (norm2(r) <= tol * bnorm) {
      apply(x, Ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
      out.residual = norm2(r) / bnorm;
      if (out.residual <= tol) {
        out.converged = true;
        return out;
      }
      if (++restarts > 8) return out;
      precond(r, z);
      p = z;
      rz = kp::dot(r, z);
      continue;
    }
    precond(r, z);
    const double rz_next = kp::dot(r, z);
    kp::xpby(z, rz_next / rz, p);
    rz = rz_next;
  }
  apply(x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  out.residual = norm2(r) / bnorm;
  out.converged = out.residual <= tol;
  return out;
}

// Right-preconditioned BiCGSTAB for non-symmetric coefficient fields.
template <class Apply, class Precond>
CgOutcome bicgstab(Apply&& apply, Precond&& precond, std::span<const double> b,
                   std::vector<double>& x, double tol, int max_iterations) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  CgOutcome out;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  std::vector<double> r(b.begin(), b.end()), r0 = r, p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n),
      sh(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  while (out.iterations < max_iterations) {
    const double rho_next = kp::dot(r0, r);
    if (rho_next == 0.0) break;
    const double beta = (rho_next / rho) * (alpha / omega);
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    rho = rho_next;
    precond(p, ph);
    apply(ph, v);
    alpha = rho / kp::dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    kp::axpy(alpha, ph, x);
    ++out.iterations;
    if (norm2(s) <= tol * bnorm) {
      r = s;
      break;
    }
    precond(s, sh);
    apply(sh, t);
    const double tt = kp::dot(t, t);
    omega = tt > 0.0 ? kp::dot(t, s) / tt : 0.0;
    kp::axpy(omega, sh, x);
    for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
    if (norm2(r) <= tol * bnorm || omega == 0.0) break;
  }
  std::vector<double> Ax(n);
  apply(x, Ax);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ax[i];
  out.residual = norm2(r) / bnorm;
  out.converged = out.residual <= tol;
  return out;
}

bool pointwise_symmetric(const TensorField& a) {
  const int d = a.lattice().dim();
  for (int r = 0; r < d; ++r)
    for (int c = r + 1; c < d; ++c) {
      const auto upper = a.component(r, c), lower = a.component(c, r);
      for (std::size_t x = 0; x < upper.size(); ++x)
        if (std::abs(upper[x] - lower[x]) > 1e-12) return false;
    }
  return true;
}

std::vector<double> poisson_values(const Lattice& lat, std::span<const double> rhs) {
  auto modes = fft::forward(lat, rhs);
  const auto symbol = fft::laplacian_symbol(lat);
  modes[0] = 0.0;
  for (std::size_t k = 1; k < modes.size(); ++k) modes[k] /= symbol[k];
  return fft::inverse_real(lat, std::move(modes));
}

}  // namespace

ScalarField poisson_solve(const ScalarField& rhs) {
  return ScalarField(rhs.lattice(), poisson_values(rhs.lattice(), rhs.values()));
}

ScalarField apply_divform(const TensorField& a, const ScalarField& u, bool transpose) {
  const Lattice& lat = u.lattice();
  ScalarField out(lat);
  std::vector<double> flux(lat.size() * lat.dim());
  kp::apply_divform(lat, a.values(), transpose, u.values(), flux, out.values());
  return out;
}

SolveResult solve_divform_rhs(const TensorField& a, const ScalarField& f, bool transpose,
                              const SolveOptions& opts) {
  opts.validate();
  const Lattice& lat = f.lattice();
  const int max_it = opts.max_iterations > 0 ? opts.max_iterations : 10 * lat.n() * lat.dim();
  std::vector<double> b(f.values().begin(), f.values().end());
  subtract_mean(b);
  std::vector<double> flux(lat.size() * lat.dim());
  const double inv_c = 2.0 / (opts.lambda + 1.0);
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    kp::apply_divform(lat, a.values(), transpose, in, flux, out);
  };
  auto precond = [&](std::span<const double> in, std::span<double> out) {
    auto v = poisson_values(lat, in);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv_c;
  };
  std::vector<double> x;
  const auto outcome = pointwise_symmetric(a)
                           ? pcg(apply, precond, b, x, opts.rel_tolerance, max_it)
                           : bicgstab(apply, precond, b, x, opts.rel_tolerance, max_it);
  if (!outcome.converged)
    throw SolverError("iterative solve did not converge (relative residual " +
                          std::to_string(outcome.residual) + ")",
                      outcome.residual, outcome.iterations);
  subtract_mean(x);
  return SolveResult{ScalarField(lat, std::move(x)), outcome.residual, outcome.iterations};
}

SolveResult solve_divform(const TensorField& a, const VectorField& h, bool transpose,
                          const SolveOptions& opts) {
  return solve_divform_rhs(a, div(h), transpose, opts);
}

BoxField::BoxField(int d, int m, double h) : dim(d), side(m), spacing(h) {
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(m);
  values.assign(total, 0.0);
}

std::size_t BoxField::index(const std::array<int, 3>& local) const {
  std::size_t i = 0;
  std::size_t stride = 1;
  for (int j = 0; j < dim; ++j) {
    i += static_cast<std::size_t>(local[j]) * stride;
    stride *= static_cast<std::size_t>(side);
  }
  return i;
}

std::array<int, 3> BoxField::coords(std::size_t i) const {
  std::array<int, 3> c{0, 0, 0};
  for (int j = 0; j < dim; ++j) {
    c[j] = static_cast<int>(i % side);
    i /= side;
  }
  return c;
}

bool BoxField::on_boundary(std::size_t i) const {
  const auto c = coords(i);
  for (int j = 0; j < dim; ++j)
    if (c[j] == 0 || c[j] == side - 1) return true;
  return false;
}

BoxField restrict_to_box(const ScalarField& field, const SubBox& box) {
  const Lattice& lat = field.lattice();
  BoxField out(lat.dim(), box.side, lat.spacing());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto c = out.coords(i);
    long g[3];
    for (int j = 0; j < lat.dim(); ++j) g[j] = box.corner[j] + c[j];
    out.values[i] = field[lat.index(std::span<const long>(g, lat.dim()))];
  }
  return out;
}

DirichletResult solve_dirichlet(const TensorField& a, const BoxField& boundary, const SubBox& box,
                                const SolveOptions& opts) {
  opts.validate();
  const Lattice& lat = a.lattice();
  const int d = lat.dim();
  if (box.side < 3 || box.side > lat.n() || boundary.side != box.side || boundary.dim != d)
    throw std::invalid_argument("Dirichlet box does not fit the torus or the boundary data");
  for (double v : boundary.values)
    if (!std::isfinite(v)) throw std::invalid_argument("boundary data must be finite");

  // Local copy of the coefficients.
  std::vector<BoxField> coeff;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      ScalarField comp(lat, std::vector<double>(a.component(r, c).begin(), a.component(r, c).end()));
      coeff.push_back(restrict_to_box(comp, box));
    }
  const std::size_t M = boundary.size();
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < M; ++i)
    if (!boundary.on_boundary(i)) interior.push_back(i);

  const double inv_h2 = 1.0 / (lat.spacing() * lat.spacing());
  std::vector<std::size_t> stride(d);
  for (int j = 0; j < d; ++j) stride[j] = j == 0 ? 1 : stride[j - 1] * box.side;

  // -div(a grad u) at interior site i of a full box vector u.
  auto stencil = [&](std::span<const double> u, std::size_t i) {
    double s = 0.0;
    for (int r = 0; r < d; ++r) {
      const std::size_t back = i - stride[r];
      double w_here = 0.0, w_back = 0.0;
      for (int c = 0; c < d; ++c) {
        const auto& arc = coeff[r * d + c].values;
        w_here += arc[i] * (u[i + stride[c]] - u[i]);
        w_back += arc[back] * (u[back + stride[c]] - u[back]);
      }
      s -= w_here - w_back;
    }
    return s * inv_h2;
  };

  std::vector<double> full(M, 0.0);
  for (std::size_t i = 0; i < M; ++i)
    if (boundary.on_boundary(i)) full[i] = boundary.values[i];
  std::vector<double> b(interior.size());
  for (std::size_t k = 0; k < interior.size(); ++k) b[k] = -stencil(full, interior[k]);

  std::vector<double> diag(interior.size());
  for (std::size_t k = 0; k < interior.size(); ++k) {
    const std::size_t i = interior[k];
    double s = 0.0;
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) s += coeff[r * d + c].values[i];
      s += coeff[r * d + r].values[i - stride[r]];
    }
    diag[k] = s * inv_h2;
  }

  std::vector<double> work(M, 0.0);
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t k = 0; k < interior.size(); ++k) work[interior[k]] = in[k];
    for (std::size_t k = 0; k < interior.size(); ++k) out[k] = stencil(work, interior[k]);
  };
  auto precond = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] / diag[k];
  };
  const int max_it = opts.max_iterations > 0 ? opts.max_iterations
                                             : std::max(10 * box.side * d, 200);
  std::vector<double> x;
  const auto outcome = pcg(apply, precond, b, x, opts.rel_tolerance, max_it);
  if (!outcome.converged)
    throw SolverError("Dirichlet solve did not converge", outcome.residual, outcome.iterations);

  DirichletResult result;
  result.solution = BoxField(d, box.side, lat.spacing());
  result.solution.values = full;
  for (std::size_t k = 0; k < interior.size(); ++k) result.solution.values[interior[k]] = x[k];
  result.residual = outcome.residual;
  result.iterations = outcome.iterations;
  return result;
}

double meyers_ratio(const TensorField& a, const VectorField& h, double p,
                    const SolveOptions& opts) {
  const double hn = lq_norm(h, p);
  if (hn == 0.0) return 0.0;
  const auto w = solve_divform(a, h, false, opts);
  return lq_norm(grad(w.solution), p) / hn;
}

}  // namespace correctorlab
