#include "correctorlab/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <random>
#include <stdexcept>

#include "correctorlab/corrector.hpp"
#include "correctorlab/fft.hpp"

namespace correctorlab {

ExponentSet exponents(double beta, int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  if (!(beta > 0 && beta < dim)) throw std::invalid_argument("beta must lie in (0, d)");
  ExponentSet e;
  e.dim = dim;
  e.beta = beta;
  const double inv_q = 1.0 - beta / (2.0 * dim);
  e.q = 1.0 / inv_q;
  e.p = 1.0 / (inv_q - 0.5);
  e.dual_p = e.p / (e.p - 1.0);
  return e;
}

namespace {

// (grad phi_i + e_i) outer-multiplied from the left by the vector field w.
TensorField outer_with_gradient(const VectorField& w, const ScalarField& phi_i, int i) {
  const Lattice& lat = phi_i.lattice();
  const int d = lat.dim();
  auto g = grad(phi_i);
  for (double& v : g.component(i)) v += 1.0;
  TensorField D(lat);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      auto out = D.component(r, c);
      const auto wr = w.component(r);
      const auto gc = g.component(c);
      for (std::size_t x = 0; x < lat.size(); ++x) out[x] = wr[x] * gc[x];
    }
  return D;
}

VectorField apply_transpose(const TensorField& a, const VectorField& w) {
  const Lattice& lat = a.lattice();
  const int d = lat.dim();
  VectorField out(lat);
  for (int r = 0; r < d; ++r) {
    auto o = out.component(r);
    for (int c = 0; c < d; ++c) {
      const auto acr = a.component(c, r);
      const auto wc = w.component(c);
      for (std::size_t x = 0; x < lat.size(); ++x) o[x] += acr[x] * wc[x];
    }
  }
  return out;
}

void check_direction(const Lattice& lat, int i) {
  if (i < 0 || i >= lat.dim()) throw std::invalid_argument("corrector direction out of range");
}

void check_pair(const Lattice& lat, int j, int k) {
  if (j < 0 || k < 0 || j >= lat.dim() || k >= lat.dim() || j == k)
    throw std::invalid_argument("sigma indices need j != k within 0..d-1");
}

}  // namespace

MalliavinField malliavin_phi(const TensorField& a, const ScalarField& phi_i,
                             const FunctionalSpec& F, int i, const SolveOptions& opts) {
  check_direction(a.lattice(), i);
  auto vbar = solve_divform(a, F.weight, true, opts).solution;
  MalliavinField m;
  m.derivative = outer_with_gradient(grad(vbar), phi_i, i);
  m.functional = F;
  m.auxiliaries.push_back(std::move(vbar));
  return m;
}

MalliavinField malliavin_sigma(const TensorField& a, const ScalarField& phi_i,
                               const FunctionalSpec& F, int i, int j, int k,
                               const SolveOptions& opts) {
  const Lattice& lat = a.lattice();
  check_direction(lat, i);
  check_pair(lat, j, k);
  auto v = poisson_solve(div(F.weight));
  VectorField w(lat);
  {
    const auto dj = partial_backward(v, j);
    const auto dk = partial_backward(v, k);
    auto wk = w.component(k);
    auto wj = w.component(j);
    for (std::size_t x = 0; x < lat.size(); ++x) wk[x] = dj[x], wj[x] = -dk[x];
  }
  auto vtilde = solve_divform(a, apply_transpose(a, w), true, opts).solution;
  const auto gt = grad(vtilde);
  for (std::size_t s = 0; s < w.values().size(); ++s) w.values()[s] += gt.values()[s];
  MalliavinField m;
  m.derivative = outer_with_gradient(w, phi_i, i);
  m.functional = F;
  m.auxiliaries.push_back(std::move(v));
  m.auxiliaries.push_back(std::move(vtilde));
  return m;
}

double pair(const TensorField& D, const TensorField& E) {
  if (!(D.lattice() == E.lattice())) throw std::invalid_argument("tensor fields on different lattices");
  return inner(D.values(), E.values(), D.lattice());
}

double evaluate_phi_functional(const TensorField& a, const FunctionalSpec& F, int i,
                               const SolveOptions& opts) {
  const auto phi = solve_corrector(a, i, opts).solution;
  return F.apply(grad(phi));
}

double evaluate_sigma_functional(const TensorField& a, const FunctionalSpec& F, int i, int j,
                                 int k, const SolveOptions& opts) {
  const Lattice& lat = a.lattice();
  check_pair(lat, j, k);
  const auto phi = solve_corrector(a, i, opts).solution;
  auto s = solve_sigma(flux(a, phi, i));
  const int d = lat.dim();
  ScalarField sig = std::move(s[sigma_pair_index(d, std::min(j, k), std::max(j, k))]);
  if (j > k)
    for (double& v : sig.values()) v = -v;
  return F.apply(grad(sig));
}

TensorField random_symmetric_direction(const Lattice& lattice, std::uint64_t seed) {
  const int d = lattice.dim();
  std::seed_seq seq{seed, std::uint64_t{0x64656c7461}};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  TensorField t(lattice);
  double sup = 0;
  for (int r = 0; r < d; ++r)
    for (int c = r; c < d; ++c) {
      auto e = t.component(r, c);
      for (double& v : e) v = unif(rng), sup = std::max(sup, std::abs(v));
    }
  for (int r = 0; r < d; ++r)
    for (int c = r; c < d; ++c) {
      auto e = t.component(r, c);
      for (double& v : e) v /= sup;
      if (c != r) {
        auto m = t.component(c, r);
        std::copy(e.begin(), e.end(), m.begin());
      }
    }
  t.mark_symmetric();
  return t;
}

double RepresentationCheck::max_error(std::size_t eps_index) const {
  const auto& e = rel_error.at(eps_index);
  return e.empty() ? 0.0 : *std::max_element(e.begin(), e.end());
}

bool RepresentationCheck::converging() const {
  for (std::size_t s = 1; s < rel_error.size(); ++s)
    if (!(max_error(s) < max_error(s - 1))) return false;
  return true;
}

RepresentationCheck check_representation(const TensorField& a, const FunctionalSpec& F,
                                         const RepresentationCheckOptions& opts) {
  const Lattice& lat = a.lattice();
  if (opts.trials < 1) throw std::invalid_argument("need at least one trial");
  if (opts.eps.empty()) throw std::invalid_argument("need at least one step size");
  const bool phi_kind = opts.kind == FunctionalKind::Phi;
  auto evaluate = [&](const TensorField& coeff) {
    return phi_kind ? evaluate_phi_functional(coeff, F, opts.i, opts.solve)
                    : evaluate_sigma_functional(coeff, F, opts.i, opts.j, opts.k, opts.solve);
  };
  const auto phi = solve_corrector(a, opts.i, opts.solve).solution;
  const auto m = phi_kind ? malliavin_phi(a, phi, F, opts.i, opts.solve)
                          : malliavin_sigma(a, phi, F, opts.i, opts.j, opts.k, opts.solve);
  double scale = 0;
  for (double v : a.values()) scale = std::max(scale, std::abs(v));

  RepresentationCheck out;
  out.eps = opts.eps;
  out.rel_error.assign(opts.eps.size(), {});
  for (int t = 0; t < opts.trials; ++t) {
    const auto da = random_symmetric_direction(lat, opts.seed * 1000003 + t);
    const double predicted = pair(m.derivative, da);
    out.predicted.push_back(predicted);
    for (std::size_t s = 0; s < opts.eps.size(); ++s) {
      const double e = opts.eps[s] * scale;
      TensorField plus = a, minus = a;
      auto pv = plus.values();
      auto mv = minus.values();
      const auto dv = da.values();
      for (std::size_t x = 0; x < pv.size(); ++x) pv[x] += e * dv[x], mv[x] -= e * dv[x];
      if (a.symmetric()) plus.mark_symmetric(), minus.mark_symmetric();
      const double fd = (evaluate(plus) - evaluate(minus)) / (2 * e);
      out.rel_error[s].push_back(std::abs(predicted - fd) / std::abs(predicted));
    }
  }
  return out;
}

std::vector<double> sensitivity_norms(const TensorField& a, const ScalarField& phi_i, int i,
                                      int component, const std::vector<double>& radii, double q,
                                      const SolveOptions& opts) {
  std::vector<double> out;
  for (double r : radii) {
    const auto F = make_average_functional(a.lattice(), r, component);
    out.push_back(lq_norm(malliavin_phi(a, phi_i, F, i, opts).derivative, q));
  }
  return out;
}

ScalingStudy lq_scaling_study(const ScalingStudyConfig& cfg) {
  const Lattice& lat = cfg.lattice;
  if (cfg.sample_count < 1) throw std::invalid_argument("sample_count must be at least 1");
  if (cfg.radii.size() < 2) throw std::invalid_argument("need at least two radii");
  if (cfg.workers < 1) throw std::invalid_argument("workers must be at least 1");
  for (double r : cfg.radii) {
    cube_side_sites(lat, r);
    if (r > lat.box_size() / 8) throw std::invalid_argument("scaling radii must be <= L/8");
  }
  cfg.solve.validate();
  ScalingStudy study;
  study.exps = exponents(cfg.covariance.beta, lat.dim());
  study.radii = cfg.radii;
  const auto model = CovarianceModel::from_spec(cfg.covariance, lat);

  const int S = cfg.sample_count;
  std::vector<std::vector<double>> norms(S);
  std::vector<std::exception_ptr> errors(S);
#pragma omp parallel for schedule(dynamic) num_threads(cfg.workers)
  for (int s = 0; s < S; ++s) {
    try {
      const auto a = apply_phi(synthesize_gaussian(model, {cfg.base_seed, std::uint64_t(s)}), cfg.map);
      const auto phi = solve_corrector(a, cfg.direction, cfg.solve).solution;
      norms[s] = sensitivity_norms(a, phi, cfg.direction, cfg.component, cfg.radii,
                                   study.exps.q, cfg.solve);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> lr, lm;
  for (std::size_t ri = 0; ri < cfg.radii.size(); ++ri) {
    double acc = 0;
    for (int s = 0; s < S; ++s) {
      study.rows.push_back({cfg.covariance.beta, cfg.radii[ri], s, norms[s][ri], cfg.base_seed});
      acc += norms[s][ri];
    }
    study.mean_norms.push_back(acc / S);
    lr.push_back(std::log(cfg.radii[ri]));
    lm.push_back(std::log(acc / S));
  }
  study.fit = stats::linear_fit(lr, lm);
  return study;
}

void write_scaling_csv(const ScalingStudy& study, std::ostream& out) {
  out << "beta,r,sample,lq_norm,seed\n";
  out.precision(17);
  for (const auto& row : study.rows)
    out << row.beta << ',' << row.r << ',' << row.sample << ',' << row.lq_norm << ',' << row.seed
        << '\n';
}

DecayProfile decay_profile(const ScalarField& v, double r, double p, std::array<long, 3> center) {
  const Lattice& lat = v.lattice();
  const int d = lat.dim();
  if (!(r > 0)) throw std::invalid_argument("radius must be positive");
  if (!(p >= 1)) throw std::invalid_argument("norm exponent must be >= 1");
  const auto g = grad(v);
  const double h = lat.spacing();
  DecayProfile prof;
  prof.predicted = -d + d / p;
  prof.total = lq_norm(g, p);
  for (double inner_r = 2 * r; 2 * inner_r <= lat.box_size() / 2 + 1e-12; inner_r *= 2)
    prof.inner_radii.push_back(inner_r);
  std::vector<double> acc(prof.inner_radii.size(), 0.0);
  const long n = lat.n();
  for (std::size_t x = 0; x < lat.size(); ++x) {
    double dist2 = 0;
    for (int j = 0; j < d; ++j) {
      long c = (lat.coord(x, j) - center[j]) % n;
      if (c < 0) c += n;
      if (c >= n / 2) c -= n;
      dist2 += double(c) * double(c) * h * h;
    }
    const double dist = std::sqrt(dist2);
    for (std::size_t b = 0; b < acc.size(); ++b)
      if (dist >= prof.inner_radii[b] && dist < 2 * prof.inner_radii[b]) {
        double m2 = 0;
        for (int j = 0; j < d; ++j) m2 += g.component(j)[x] * g.component(j)[x];
        acc[b] += std::pow(m2, p / 2) * lat.cell_volume();
      }
  }
  std::vector<double> lr, ln;
  for (std::size_t b = 0; b < acc.size(); ++b) {
    prof.norms.push_back(std::pow(acc[b], 1 / p));
    if (prof.norms.back() > 0) lr.push_back(std::log(prof.inner_radii[b])), ln.push_back(std::log(prof.norms.back()));
  }
  if (lr.size() >= 2) prof.slope = stats::linear_fit(lr, ln).slope;
  return prof;
}

double cov_quadratic_form(const TensorField& D, const CovarianceModel& model) {
  const Lattice& lat = D.lattice();
  if (!(lat == model.lattice())) throw std::invalid_argument("covariance model on a different lattice");
  const int d = lat.dim();
  const auto P = model.spectrum();
  double total = 0;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      const auto modes = fft::forward(lat, D.component(r, c));
      double acc = 0;
      for (std::size_t k = 0; k < modes.size(); ++k) acc += P[k] * std::norm(modes[k]);
      total += acc / static_cast<double>(lat.size());
    }
  return total * lat.cell_volume() * lat.cell_volume();
}

double cov_quadratic_form(const TensorField& D, const CovarianceSpec& spec) {
  return cov_quadratic_form(D, CovarianceModel::from_spec(spec, D.lattice()));
}

}  // namespace correctorlab
