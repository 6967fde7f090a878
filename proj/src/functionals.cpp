#include "correctorlab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace correctorlab {

double FunctionalSpec::apply(const VectorField& h) const {
  return inner(weight.values(), h.values(), weight.lattice());
}

double FunctionalSpec::certificate() const {
  const int d = weight.lattice().dim();
  const double p = norm_exponent;
  return lq_norm(weight, p) * std::pow(radius, (p - 1.0) * d / p);
}

FunctionalSpec make_average_functional(const Lattice& lattice, double radius, int component,
                                       double norm_exponent, std::array<long, 3> center) {
  if (component < 0 || component >= lattice.dim())
    throw std::invalid_argument("functional component out of range");
  if (radius < lattice.spacing() || radius > lattice.box_size() / 2)
    throw std::invalid_argument("functional radius must lie in [h, L/2]");
  FunctionalSpec spec;
  spec.radius = radius;
  spec.norm_exponent = norm_exponent;
  spec.component = component;
  spec.support = centered_cube(lattice, radius, center);
  spec.weight = VectorField(lattice);
  const auto sites = spec.support.sites(lattice);
  const double w = 1.0 / (static_cast<double>(sites.size()) * lattice.cell_volume());
  auto g = spec.weight.component(component);
  for (std::size_t x : sites) g[x] = w;
  return spec;
}

double boundedness_bound(const FunctionalSpec& functional, const VectorField& h, double beta) {
  const Lattice& lat = h.lattice();
  const int d = lat.dim();
  const double s = 2.0 * d / (d + beta);
  const auto sites = functional.support.sites(lat);
  double acc = 0.0;
  for (std::size_t x : sites) {
    double m2 = 0.0;
    for (int j = 0; j < d; ++j) m2 += h.component(j)[x] * h.component(j)[x];
    acc += std::pow(m2, 0.5 * s);
  }
  return std::pow(acc / static_cast<double>(sites.size()), 1.0 / s);
}

double SubcubeFunctional::apply(const ScalarField& zeta) const {
  return (cube_average(zeta, child) - cube_average(zeta, parent)) / parent.radius;
}

std::vector<SubcubeFunctional> make_subcube_functionals(const Lattice& lattice, double radius,
                                                        std::array<long, 3> center) {
  const auto parent = centered_cube(lattice, radius, center);
  if (parent.side_sites < 2) throw std::invalid_argument("parent cube has no children");
  const int d = lattice.dim();
  const int half = parent.side_sites / 2;
  std::vector<SubcubeFunctional> out;
  for (int n = 0; n < (1 << d); ++n) {
    SubcubeFunctional f;
    f.parent = parent;
    f.child.radius = radius / 2;
    f.child.side_sites = half;
    for (int j = 0; j < d; ++j) f.child.corner[j] = parent.corner[j] + ((n >> j) & 1) * half;
    out.push_back(f);
  }
  return out;
}

namespace {

// Level-r subcubes of a window.
std::vector<DyadicCube> window_tiles(const Lattice& lat, double radius, const DyadicCube& window) {
  const int m = cube_side_sites(lat, radius);
  if (m > window.side_sites) throw std::invalid_argument("projection level exceeds the window");
  const int per_axis = window.side_sites / m;
  const int d = lat.dim();
  std::size_t count = 1;
  for (int j = 0; j < d; ++j) count *= per_axis;
  std::vector<DyadicCube> tiles;
  for (std::size_t k = 0; k < count; ++k) {
    DyadicCube q;
    q.radius = radius;
    q.side_sites = m;
    std::size_t rem = k;
    for (int j = 0; j < d; ++j) {
      q.corner[j] = window.corner[j] + static_cast<long>(rem % per_axis) * m;
      rem /= per_axis;
    }
    tiles.push_back(q);
  }
  return tiles;
}

double window_sq_diff(const std::vector<ScalarField>& a, const std::vector<ScalarField>& b,
                      const std::vector<std::size_t>& sites) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c)
    for (std::size_t x : sites) s += (a[c][x] - b[c][x]) * (a[c][x] - b[c][x]);
  return s / static_cast<double>(sites.size());
}

// Centred second moment over the cube, summed over components.
double centred_energy(const std::vector<ScalarField>& components, const std::vector<std::size_t>& sites) {
  double s = 0.0;
  for (const auto& f : components) {
    double m = 0.0;
    for (std::size_t x : sites) m += f[x];
    m /= static_cast<double>(sites.size());
    for (std::size_t x : sites) s += (f[x] - m) * (f[x] - m);
  }
  return s / static_cast<double>(sites.size());
}

}  // namespace

ScalarField dyadic_projection(const ScalarField& field, double radius, const DyadicCube& window) {
  const Lattice& lat = field.lattice();
  ScalarField out = field;
  for (const auto& q : window_tiles(lat, radius, window)) {
    const auto sites = q.sites(lat);
    double m = 0.0;
    for (std::size_t x : sites) m += field[x];
    m /= static_cast<double>(sites.size());
    for (std::size_t x : sites) out[x] = m;
  }
  return out;
}

double MultiscaleEnergy::sum() const {
  double s = fine;
  for (double e : levels) s += e;
  return s;
}

MultiscaleEnergy multiscale_energy(const std::vector<ScalarField>& components, double r1, double R,
                                   std::array<long, 3> center) {
  if (components.empty()) throw std::invalid_argument("no components");
  if (r1 > R) throw std::invalid_argument("multiscale_energy needs r1 <= R");
  const Lattice& lat = components.front().lattice();
  const auto window = centered_cube(lat, R, center);
  const auto sites = window.sites(lat);
  auto project = [&](double r) {
    std::vector<ScalarField> out;
    for (const auto& f : components) out.push_back(dyadic_projection(f, r, window));
    return out;
  };
  MultiscaleEnergy e;
  auto prev = project(r1);
  e.fine = window_sq_diff(components, prev, sites);
  for (double r = 2 * r1; r <= R * (1 + 1e-12); r *= 2) {
    auto next = project(r);
    e.radii.push_back(r);
    e.levels.push_back(window_sq_diff(prev, next, sites));
    prev = std::move(next);
  }
  e.total = centred_energy(components, sites);
  return e;
}

std::vector<ScalarField> corrector_components(const CorrectorSet& set) {
  std::vector<ScalarField> out(set.phi.begin(), set.phi.end());
  const int d = set.dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        if (j != k) out.push_back(set.sigma_at(i, j, k));
  return out;
}

double sublinearity(const std::vector<ScalarField>& components, double radius,
                    std::array<long, 3> center) {
  if (components.empty()) return 0.0;
  const Lattice& lat = components.front().lattice();
  if (radius > lat.box_size() / 2) throw std::invalid_argument("sublinearity radius exceeds L/2");
  const auto sites = centered_cube(lat, radius, center).sites(lat);
  return std::sqrt(centred_energy(components, sites)) / radius;
}

double iterated_log(double z) { return std::log(std::numbers::e + std::log(z)); }

double intermediate_radius(double r0, double R, double beta, const Lattice& lattice) {
  const double target =
      std::pow(r0, beta / 2) * std::pow(R, 1 - beta / 2) * std::sqrt(iterated_log(R / r0));
  double best = r0;
  for (double r = r0; r <= R * (1 + 1e-12); r *= 2)
    if (std::abs(std::log(r / target)) < std::abs(std::log(best / target))) best = r;
  cube_side_sites(lattice, best);
  return best;
}

std::vector<double> rstar_radii(const Lattice& lattice) {
  std::vector<double> radii;
  const double top = lattice.box_size() / 4;
  for (double r = 4 * lattice.spacing(); r <= top * (1 + 1e-12); r *= 2) radii.push_back(r);
  if (radii.empty()) throw std::invalid_argument("lattice too small for the minimal-radius scan");
  return radii;
}

RstarReport rstar_from_table(const std::vector<double>& radii, const std::vector<double>& D,
                             double beta) {
  if (radii.size() != D.size() || radii.empty()) throw std::invalid_argument("bad D table");
  RstarReport rep;
  rep.radii = radii;
  rep.sublinearity = D;
  const std::size_t K = radii.size();
  // The bound is not monotone in r0 (z^-beta f(z) increases near z = 1 when
  // beta < 1/e), so every candidate is checked.
  std::size_t best = K;
  for (std::size_t s = 0; s < K && best == K; ++s) {
    bool ok = true;
    for (std::size_t t = s; t < K && ok; ++t)
      ok = D[t] * D[t] <= std::pow(radii[s] / radii[t], beta) * iterated_log(radii[t] / radii[s]);
    if (ok) best = s;
  }
  if (best == K) {
    rep.rstar = radii.back();
    rep.censored = true;
  } else {
    rep.rstar = radii[best];
  }
  for (double r : radii) rep.f_values.push_back(r >= rep.rstar ? iterated_log(r / rep.rstar) : 0.0);
  return rep;
}

RstarReport estimate_rstar(const std::vector<ScalarField>& components, double beta,
                           std::array<long, 3> center) {
  if (components.empty()) throw std::invalid_argument("no components");
  const Lattice& lat = components.front().lattice();
  if (!(beta > 0.0 && beta < lat.dim())) throw std::invalid_argument("beta must lie in (0, d)");
  const auto radii = rstar_radii(lat);
  std::vector<double> D;
  for (double r : radii) D.push_back(sublinearity(components, r, center));
  return rstar_from_table(radii, D, beta);
}

namespace {

// Box of side 2R/h + 1: number of gradient cells per axis is 2R/h.
int box_cells(const BoxField& u, double R) {
  const long m = std::lround(2 * R / u.spacing);
  if (m + 1 != u.side) throw std::invalid_argument("box side must be 2R/h + 1");
  return static_cast<int>(m);
}

// |grad u|^2 on gradient cells (all local coordinates <= side - 2), axis 0 fastest.
std::vector<double> cell_grad_sq(const BoxField& u) {
  const int d = u.dim, m = u.side - 1;
  std::size_t count = 1;
  for (int j = 0; j < d; ++j) count *= m;
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::array<int, 3> c{0, 0, 0};
    std::size_t rem = k;
    for (int j = 0; j < d; ++j) c[j] = static_cast<int>(rem % m), rem /= m;
    const double here = u.values[u.index(c)];
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      auto n = c;
      ++n[j];
      const double g = (u.values[u.index(n)] - here) / u.spacing;
      s += g * g;
    }
    out[k] = s;
  }
  return out;
}

// Average of f^power over the centred sub-block of half-width w cells.
double centred_block_avg(const std::vector<double>& cells, int d, int m, int w, double power) {
  const int lo = m / 2 - w, hi = m / 2 + w;
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    std::size_t rem = k;
    bool inside = true;
    for (int j = 0; j < d; ++j) {
      const int c = static_cast<int>(rem % m);
      rem /= m;
      inside = inside && c >= lo && c < hi;
    }
    if (!inside) continue;
    s += power == 1.0 ? cells[k] : std::pow(cells[k], power);
    ++n;
  }
  return s / static_cast<double>(n);
}

int half_width_cells(double rho, double h) {
  const long w = std::lround(rho / h);
  if (w < 1 || std::abs(rho / h - w) > 1e-9) throw std::invalid_argument("radius must be a multiple of h");
  return static_cast<int>(w);
}

}  // namespace

double mean_value_ratio(const BoxField& u, double r, double R) {
  const int m = box_cells(u, R);
  const auto cells = cell_grad_sq(u);
  const double outer = centred_block_avg(cells, u.dim, m, m / 2, 1.0);
  if (outer == 0.0) return 0.0;
  double worst = 0.0;
  for (double rho = r; rho <= R * (1 + 1e-12); rho *= 2)
    worst = std::max(worst, centred_block_avg(cells, u.dim, m, half_width_cells(rho, u.spacing), 1.0) / outer);
  return worst;
}

double reverse_holder_ratio(const BoxField& u, double R) {
  const int m = box_cells(u, R);
  const auto cells = cell_grad_sq(u);
  const double rhs = centred_block_avg(cells, u.dim, m, m / 2, 0.5);
  if (rhs == 0.0) return 0.0;
  const double lhs = std::sqrt(centred_block_avg(cells, u.dim, m, half_width_cells(R / 2, u.spacing), 1.0));
  return lhs / rhs;
}

double caccioppoli_ratio(const std::vector<ScalarField>& components, double rho,
                         std::array<long, 3> center) {
  if (components.empty()) return 0.0;
  const Lattice& lat = components.front().lattice();
  if (2 * rho > lat.box_size() / 2) throw std::invalid_argument("caccioppoli_ratio needs 2 rho <= L/2");
  const int d = lat.dim();
  const auto inner_sites = centered_cube(lat, rho, center).sites(lat);
  const auto outer_sites = centered_cube(lat, 2 * rho, center).sites(lat);
  double grad_sq = 0.0;
  for (const auto& f : components) {
    const auto g = grad(f);
    for (int j = 0; j < d; ++j)
      for (std::size_t x : inner_sites) grad_sq += g.component(j)[x] * g.component(j)[x];
  }
  const double lhs = std::sqrt(grad_sq * lat.cell_volume());
  const double osc = centred_energy(components, outer_sites) * outer_sites.size() * lat.cell_volume();
  const double rhs = std::sqrt(osc) / rho + std::pow(rho, 0.5 * d);
  return lhs / rhs;
}

MeanValueReport mean_value_check(const TensorField& a, const CorrectorSet& correctors,
                                 const MeanValueOptions& opts) {
  const Lattice& lat = a.lattice();
  const int d = lat.dim();
  const double h = lat.spacing();
  if (!(opts.r <= opts.R && opts.R <= lat.box_size() / 4))
    throw std::invalid_argument("mean_value_check needs r <= R <= L/4");
  if (opts.random_trials < 0) throw std::invalid_argument("random_trials must be >= 0");
  const int cells = static_cast<int>(std::lround(2 * opts.R / h));
  const long half = cells / 2;
  SubBox box;
  box.side = cells + 1;
  for (int j = 0; j < d; ++j) box.corner[j] = -half;

  MeanValueReport rep;
  auto record = [&](const std::string& kind, const BoxField& u) {
    rep.kinds.push_back(kind);
    rep.ratios.push_back(mean_value_ratio(u, opts.r, opts.R));
    rep.reverse_holder.push_back(reverse_holder_ratio(u, opts.R));
  };

  for (int t = 0; t < opts.random_trials; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(t), 0x6d76u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> g;
    // Random trigonometric polynomial in the box coordinates, wave numbers |k_j| <= K.
    const int K = std::max(1, opts.boundary_modes);
    struct Mode {
      std::array<int, 3> k;
      double amp, phase;
    };
    std::vector<Mode> modes;
    std::array<int, 3> k{0, 0, 0};
    const int span = 2 * K + 1;
    int total = 1;
    for (int j = 0; j < d; ++j) total *= span;
    for (int idx = 0; idx < total; ++idx) {
      int rem = idx, k2 = 0;
      for (int j = 0; j < d; ++j) k[j] = rem % span - K, rem /= span, k2 += k[j] * k[j];
      const double amp = g(rng), phase = g(rng);
      if (k2 == 0) continue;
      modes.push_back({k, amp / std::sqrt(static_cast<double>(k2)), phase});
    }
    BoxField data(d, box.side, h);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!data.on_boundary(i)) continue;
      const auto c = data.coords(i);
      double v = 0.0;
      for (const auto& md : modes) {
        double arg = md.phase;
        for (int j = 0; j < d; ++j) arg += std::numbers::pi * md.k[j] * c[j] / cells;
        v += md.amp * std::cos(arg);
      }
      data.values[i] = v;
    }
    record("random", solve_dirichlet(a, data, box, opts.solve).solution);
  }

  if (opts.corrected_coordinates) {
    for (int i = 0; i < d; ++i) {
      BoxField u = restrict_to_box(correctors.phi[i], box);
      for (std::size_t s = 0; s < u.size(); ++s)
        u.values[s] += (box.corner[i] + u.coords(s)[i]) * h;
      record("coordinate", u);
    }
  }
  for (double r : rep.ratios) rep.max_ratio = std::max(rep.max_ratio, r);

  const auto comps = corrector_components(correctors);
  for (double R = opts.r; R <= lat.box_size() / 4 * (1 + 1e-12); R *= 2)
    rep.smallness = std::max(rep.smallness, sublinearity(comps, R));
  rep.passes_screen = rep.smallness <= opts.smallness_threshold;
  return rep;
}

}  // namespace correctorlab
