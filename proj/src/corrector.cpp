#include "correctorlab/corrector.hpp"

#include <cmath>
#include <stdexcept>

namespace correctorlab {

int sigma_pair_index(int dim, int j, int k) {
  if (j < 0 || k >= dim || j >= k) throw std::invalid_argument("sigma pair needs 0 <= j < k < d");
  int idx = 0;
  for (int jj = 0; jj < j; ++jj) idx += dim - 1 - jj;
  return idx + (k - j - 1);
}

int sigma_slot(int dim, int i, int j, int k) {
  return i * (dim * (dim - 1) / 2) + sigma_pair_index(dim, j, k);
}

ScalarField CorrectorSet::sigma_at(int i, int j, int k) const {
  if (j == k) return ScalarField(lattice);
  if (j < k) return sigma[sigma_slot(dim(), i, j, k)];
  ScalarField out = sigma[sigma_slot(dim(), i, k, j)];
  for (double& v : out.values()) v = -v;
  return out;
}

SolveResult solve_corrector(const TensorField& a, int i, const SolveOptions& opts) {
  const Lattice& lat = a.lattice();
  if (i < 0 || i >= lat.dim()) throw std::invalid_argument("corrector direction out of range");
  VectorField rhs(lat);
  for (int r = 0; r < lat.dim(); ++r) {
    const auto col = a.component(r, i);
    std::copy(col.begin(), col.end(), rhs.component(r).begin());
  }
  return solve_divform(a, rhs, false, opts);
}

VectorField flux(const TensorField& a, const ScalarField& phi_i, int i) {
  const Lattice& lat = a.lattice();
  const int d = lat.dim();
  auto g = grad(phi_i);
  for (double& v : g.component(i)) v += 1.0;
  VectorField q(lat);
  for (int r = 0; r < d; ++r) {
    auto out = q.component(r);
    for (int c = 0; c < d; ++c) {
      const auto arc = a.component(r, c);
      const auto gc = g.component(c);
      for (std::size_t x = 0; x < lat.size(); ++x) out[x] += arc[x] * gc[x];
    }
  }
  return q;
}

std::vector<double> homogenized_coefficient(const std::vector<VectorField>& fluxes) {
  if (fluxes.empty()) throw std::invalid_argument("no fluxes");
  const int d = fluxes.front().lattice().dim();
  if (static_cast<int>(fluxes.size()) != d) throw std::invalid_argument("need one flux per direction");
  std::vector<double> m(d * d);
  for (int i = 0; i < d; ++i)
    for (int r = 0; r < d; ++r) m[r * d + i] = mean(fluxes[i].component(r));
  return m;
}

std::vector<ScalarField> solve_sigma(const VectorField& q_i) {
  const Lattice& lat = q_i.lattice();
  const int d = lat.dim();
  std::vector<ScalarField> out;
  for (int j = 0; j < d; ++j)
    for (int k = j + 1; k < d; ++k) {
      ScalarField qk(lat, {q_i.component(k).begin(), q_i.component(k).end()});
      ScalarField qj(lat, {q_i.component(j).begin(), q_i.component(j).end()});
      ScalarField rhs = partial(qk, j);
      const auto dk = partial(qj, k);
      for (std::size_t x = 0; x < lat.size(); ++x) rhs[x] -= dk[x];
      out.push_back(poisson_solve(rhs));
    }
  return out;
}

double check_flux_potential(const std::vector<ScalarField>& sigma_i, const VectorField& q_i) {
  const Lattice& lat = q_i.lattice();
  const int d = lat.dim();
  if (static_cast<int>(sigma_i.size()) != d * (d - 1) / 2)
    throw std::invalid_argument("sigma family has the wrong size");
  double num = 0.0, den = 0.0, total = 0.0;
  for (int j = 0; j < d; ++j) {
    ScalarField divj(lat);
    for (int k = 0; k < d; ++k) {
      if (k == j) continue;
      const auto& s = sigma_i[sigma_pair_index(d, std::min(j, k), std::max(j, k))];
      const double sign = j < k ? 1.0 : -1.0;
      const auto dk = partial_backward(s, k);
      for (std::size_t x = 0; x < lat.size(); ++x) divj[x] += sign * dk[x];
    }
    const auto qj = q_i.component(j);
    const double m = mean(qj);
    for (std::size_t x = 0; x < lat.size(); ++x) {
      const double centred = qj[x] - m;
      num += (divj[x] - centred) * (divj[x] - centred);
      den += centred * centred;
      total += qj[x] * qj[x];
    }
  }
  // A flux that is constant up to rounding has no meaningful centred norm.
  if (den <= 1e-24 * total) return total == 0.0 ? std::sqrt(num) : std::sqrt(num / total);
  return std::sqrt(num / den);
}

CorrectorSet build_correctors(const TensorField& a, const SolveOptions& opts) {
  const Lattice& lat = a.lattice();
  const int d = lat.dim();
  CorrectorSet set;
  set.lattice = lat;
  for (int i = 0; i < d; ++i) {
    auto res = solve_corrector(a, i, opts);
    set.phi_residual.push_back(res.residual);
    set.phi_iterations.push_back(res.iterations);
    set.flux.push_back(flux(a, res.solution, i));
    set.phi.push_back(std::move(res.solution));
  }
  set.a_hom = homogenized_coefficient(set.flux);
  for (int i = 0; i < d; ++i) {
    auto s = solve_sigma(set.flux[i]);
    set.flux_potential_residual.push_back(check_flux_potential(s, set.flux[i]));
    for (auto& f : s) set.sigma.push_back(std::move(f));
  }
  return set;
}

}  // namespace correctorlab
