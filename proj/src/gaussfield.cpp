#include "correctorlab/gaussfield.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "correctorlab/fft.hpp"

namespace correctorlab {

std::string to_string(MapVariant variant) {
  return variant == MapVariant::ScalarIsotropic ? "scalar-isotropic" : "eigenvalue-clamp";
}

MapVariant map_variant_from_string(const std::string& name) {
  if (name == "scalar-isotropic") return MapVariant::ScalarIsotropic;
  if (name == "eigenvalue-clamp") return MapVariant::EigenvalueClamp;
  throw std::invalid_argument("unknown coefficient map '" + name + "'");
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Cells with max |k_j| up to this index are averaged by sub-sampling.
constexpr int kAveragedShell = 8;
constexpr int kCellSamples = 8;

struct Density {
  double exponent;  // (beta - d) / 2
  double mass2;
  double operator()(double k2) const { return std::pow(k2 + mass2, exponent); }
};

// Midpoint average of the density over the cell centred at wave vector `centre`
// (in units of dk) with `samples` points per axis.
double cell_average(const Density& f, int dim, const double* centre, double dk, int samples) {
  const int total = static_cast<int>(std::pow(samples, dim));
  double acc = 0.0;
  for (int s = 0; s < total; ++s) {
    int rem = s;
    double k2 = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double off = ((rem % samples) + 0.5) / samples - 0.5;
      rem /= samples;
      const double kj = (centre[j] + off) * dk;
      k2 += kj * kj;
    }
    acc += f(k2);
  }
  return acc / total;
}

// Integral of the density over [-a, a]^d minus [-a/2, a/2]^d.
double shell_integral(const Density& f, int dim, double a) {
  constexpr int samples = 16;
  const double w = 2.0 * a / samples;
  const int total = static_cast<int>(std::pow(samples, dim));
  double acc = 0.0;
  for (int s = 0; s < total; ++s) {
    int rem = s;
    bool inner = true;
    double k2 = 0.0;
    for (int j = 0; j < dim; ++j) {
      const int i = rem % samples;
      rem /= samples;
      inner = inner && i >= samples / 4 && i < 3 * samples / 4;
      const double kj = -a + (i + 0.5) * w;
      k2 += kj * kj;
    }
    if (!inner) acc += f(k2);
  }
  return acc * std::pow(w, dim);
}

// Average of the (integrably singular) density over the central cell [-dk/2, dk/2]^d,
// by peeling self-similar shells towards the origin.
double central_cell_average(const Density& f, int dim, double beta, double dk) {
  const double mass = std::sqrt(f.mass2);
  double a = 0.5 * dk;
  double integral = 0.0;
  for (int depth = 0; depth < 200; ++depth) {
    if (mass > 0.0 && a < 1e-3 * mass) {
      integral += std::pow(2.0 * a, dim) * f(0.0);
      return integral / std::pow(dk, dim);
    }
    if (a < 1e-12 * dk) break;
    integral += shell_integral(f, dim, a);
    a *= 0.5;
  }
  // Massless remainder: J(a) = a^beta J(1) with J(1) = shell(1) / (1 - 2^-beta).
  const Density massless{f.exponent, 0.0};
  integral += std::pow(a, beta) * shell_integral(massless, dim, 1.0) / (1.0 - std::pow(2.0, -beta));
  return integral / std::pow(dk, dim);
}

std::uint64_t component_seed(FieldSeed seed, int component) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.base_seed),
                    static_cast<std::uint32_t>(seed.base_seed >> 32),
                    static_cast<std::uint32_t>(seed.sample_index),
                    static_cast<std::uint32_t>(seed.sample_index >> 32),
                    static_cast<std::uint32_t>(component), 0x5eedu};
  std::uint64_t out[1];
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  out[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out[0];
}

}  // namespace

CovarianceModel CovarianceModel::from_spec(const CovarianceSpec& spec, const Lattice& lattice) {
  const int d = lattice.dim();
  if (!(spec.beta > 0.0 && spec.beta < d))
    throw std::invalid_argument("covariance exponent beta must lie in (0, d)");
  if (spec.amplitude < 0.0) throw std::invalid_argument("covariance amplitude must be >= 0");
  const double L = lattice.box_size();
  const double l0 = spec.smoothing_scale > 0.0 ? spec.smoothing_scale : L;
  if (l0 < lattice.spacing() * (1.0 - 1e-12))
    throw std::invalid_argument("smoothing scale must be at least one lattice spacing");

  CovarianceModel model;
  model.lattice_ = lattice;
  model.spectrum_.assign(lattice.size(), 0.0);
  if (spec.amplitude == 0.0) return model;

  const double dk = kTwoPi / L;
  const Density f{0.5 * (spec.beta - d), std::pow(dk / l0, 2)};
  for (std::size_t m = 1; m < lattice.size(); ++m) {
    double centre[3];
    int shell = 0;
    double k2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const int kj = fft::wave_index(lattice, m, j);
      centre[j] = kj;
      shell = std::max(shell, std::abs(kj));
      k2 += (kj * dk) * (kj * dk);
    }
    model.spectrum_[m] = shell <= kAveragedShell ? cell_average(f, d, centre, dk, kCellSamples)
                                                 : f(k2);
  }
  const double central = central_cell_average(f, d, spec.beta, dk);
  for (int j = 0; j < d; ++j) {
    const long up[3] = {j == 0 ? 1 : 0, j == 1 ? 1 : 0, j == 2 ? 1 : 0};
    const long down[3] = {-up[0], -up[1], -up[2]};
    model.spectrum_[lattice.index(std::span<const long>(up, d))] += central / (2.0 * d);
    model.spectrum_[lattice.index(std::span<const long>(down, d))] += central / (2.0 * d);
  }

  const auto kernel = model.kernel();
  double worst = 0.0;
  const double h = lattice.spacing();
  for (std::size_t x = 1; x < lattice.size(); ++x) {
    double r2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = lattice.signed_coord(x, j) * h;
      r2 += c * c;
    }
    if (r2 < 1.0 - 1e-12) continue;
    worst = std::max(worst, std::abs(kernel[x]) * std::pow(r2, 0.5 * spec.beta));
  }
  const double scale = spec.amplitude / worst;
  for (double& p : model.spectrum_) p *= scale;
  return model;
}

CovarianceModel CovarianceModel::white(const Lattice& lattice, double variance) {
  CovarianceModel model;
  model.lattice_ = lattice;
  model.spectrum_.assign(lattice.size(), variance);
  return model;
}

std::vector<double> CovarianceModel::kernel() const {
  fft::Spectrum modes(spectrum_.begin(), spectrum_.end());
  return fft::inverse_real(lattice_, std::move(modes));
}

double CovarianceModel::variance() const {
  double s = 0.0;
  for (double p : spectrum_) s += p;
  return s / static_cast<double>(spectrum_.size());
}

TensorField synthesize_gaussian(const CovarianceModel& model, FieldSeed seed) {
  const Lattice& lat = model.lattice();
  const int d = lat.dim();
  TensorField out(lat);
  const auto spectrum = model.spectrum();
  std::vector<double> noise(lat.size());
  for (int comp = 0; comp < d * d; ++comp) {
    std::mt19937_64 rng(component_seed(seed, comp));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& w : noise) w = normal(rng);
    auto modes = fft::forward(lat, noise);
    for (std::size_t k = 0; k < modes.size(); ++k) modes[k] *= std::sqrt(spectrum[k]);
    const auto values = fft::inverse_real(lat, std::move(modes));
    auto dst = out.component(comp / d, comp % d);
    std::copy(values.begin(), values.end(), dst.begin());
  }
  return out;
}

TensorField synthesize_gaussian(const CovarianceSpec& spec, const Lattice& lattice,
                                FieldSeed seed) {
  return synthesize_gaussian(CovarianceModel::from_spec(spec, lattice), seed);
}

// S(t) = (1 + tanh(k t)) / 2 with k = 2 / (sqrt(d) (1 - lambda)): the map
// t -> (lambda + (1 - lambda) S(t)) Id then has Frobenius Lipschitz constant 1.
double squash(double t, double lambda, int dim) {
  const double k = 2.0 / (std::sqrt(static_cast<double>(dim)) * (1.0 - lambda));
  return 0.5 * (1.0 + std::tanh(k * t));
}

double squash_slope(double t, double lambda, int dim) {
  const double k = 2.0 / (std::sqrt(static_cast<double>(dim)) * (1.0 - lambda));
  const double c = std::cosh(k * t);
  return 0.5 * k / (c * c);
}

void apply_phi_matrix(std::span<const double> m, int dim, const CoefficientMapSpec& map,
                      std::span<double> out) {
  const double lambda = map.lambda;
  if (map.variant == MapVariant::ScalarIsotropic) {
    const double mu = lambda + (1.0 - lambda) * squash(m[0], lambda, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) out[r * dim + c] = r == c ? mu : 0.0;
    return;
  }
  Eigen::MatrixXd sym(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) sym(r, c) = 0.5 * (m[r * dim + c] + m[c * dim + r]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  Eigen::VectorXd values = eig.eigenvalues().cwiseMax(lambda).cwiseMin(1.0);
  const Eigen::MatrixXd rebuilt = eig.eigenvectors() * values.asDiagonal() *
                                  eig.eigenvectors().transpose();
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) out[r * dim + c] = 0.5 * (rebuilt(r, c) + rebuilt(c, r));
}

TensorField apply_phi(const TensorField& atilde, const CoefficientMapSpec& map) {
  if (!(map.lambda > 0.0 && map.lambda < 1.0))
    throw std::invalid_argument("ellipticity lambda must lie in (0, 1)");
  const Lattice& lat = atilde.lattice();
  const int d = lat.dim();
  TensorField a(lat);
  const std::ptrdiff_t N = static_cast<std::ptrdiff_t>(lat.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t x = 0; x < N; ++x) {
    double in[9];
    double out[9];
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) in[r * d + c] = atilde.at(x, r, c);
    apply_phi_matrix(std::span<const double>(in, d * d), d, map, std::span<double>(out, d * d));
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a.component(r, c)[x] = out[r * d + c];
  }
  a.mark_symmetric();
  return a;
}

TensorField pullback_derivative(const TensorField& atilde, const TensorField& dF_da,
                                const CoefficientMapSpec& map) {
  if (map.variant != MapVariant::ScalarIsotropic)
    throw std::invalid_argument("chain rule is implemented for the scalar-isotropic map only");
  const Lattice& lat = atilde.lattice();
  const int d = lat.dim();
  TensorField out(lat);
  auto dst = out.component(0, 0);
  for (std::size_t x = 0; x < lat.size(); ++x) {
    double trace = 0.0;
    for (int r = 0; r < d; ++r) trace += dF_da.at(x, r, r);
    dst[x] = (1.0 - map.lambda) * squash_slope(atilde.at(x, 0, 0), map.lambda, d) * trace;
  }
  return out;
}

RadialCovariance estimate_covariance(std::span<const TensorField> samples, int row, int col) {
  if (samples.empty()) throw std::invalid_argument("estimate_covariance needs at least one sample");
  const Lattice& lat = samples.front().lattice();
  const int d = lat.dim();
  std::vector<int> lags{0};
  for (int rho = 1; rho <= lat.n() / 2; rho *= 2) lags.push_back(rho);

  RadialCovariance out;
  for (int rho : lags) {
    std::vector<double> per_sample;
    for (const auto& field : samples) {
      const auto comp = field.component(row, col);
      double acc = 0.0;
      const int directions = rho == 0 ? 1 : d;
      for (int e = 0; e < directions; ++e)
        for (std::size_t x = 0; x < lat.size(); ++x) acc += comp[lat.neighbor(x, e, rho)] * comp[x];
      per_sample.push_back(acc / (static_cast<double>(lat.size()) * directions));
    }
    double m = 0.0;
    for (double v : per_sample) m += v;
    m /= per_sample.size();
    double var = 0.0;
    for (double v : per_sample) var += (v - m) * (v - m);
    const double se = per_sample.size() > 1
                          ? std::sqrt(var / (per_sample.size() - 1) / per_sample.size())
                          : 0.0;
    out.lag.push_back(rho * lat.spacing());
    out.value.push_back(m);
    out.std_error.push_back(se);
  }
  return out;
}

}  // namespace correctorlab
