#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace correctorlab {

/// Periodic d-dimensional grid with n sites per axis and spacing h = L/n.
///
/// Sites are stored with axis 0 fastest: site = sum_j x_j * n^j. Because n is a
/// power of two, coordinates are extracted with shifts and masks.
class Lattice {
 public:
  Lattice() = default;
  /// box_size <= 0 selects the default L = n (unit spacing).
  Lattice(int dim, int sites_per_axis, double box_size = 0.0);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double box_size() const { return box_size_; }
  double spacing() const { return spacing_; }
  double cell_volume() const { return cell_volume_; }
  std::size_t size() const { return size_; }

  int coord(std::size_t site, int axis) const {
    return static_cast<int>((site >> (shift_ * axis)) & mask_);
  }
  std::size_t stride(int axis) const { return std::size_t{1} << (shift_ * axis); }

  /// Periodic neighbour site + delta * e_axis, |delta| < n.
  std::size_t neighbor(std::size_t site, int axis, int delta) const {
    const int c = coord(site, axis);
    const int w = (c + delta + n_) & static_cast<int>(mask_);
    return site + (static_cast<std::ptrdiff_t>(w) - c) * static_cast<std::ptrdiff_t>(stride(axis));
  }

  /// Site of arbitrary (possibly negative) integer coordinates, wrapped.
  std::size_t index(std::span<const long> coords) const;

  /// Signed minimum-image coordinate in [-n/2, n/2).
  int signed_coord(std::size_t site, int axis) const {
    const int c = coord(site, axis);
    return c >= n_ / 2 ? c - n_ : c;
  }

  bool operator==(const Lattice& other) const {
    return dim_ == other.dim_ && n_ == other.n_ && box_size_ == other.box_size_;
  }

 private:
  int dim_ = 0;
  int n_ = 0;
  double box_size_ = 0.0;
  double spacing_ = 0.0;
  double cell_volume_ = 0.0;
  std::size_t size_ = 0;
  int shift_ = 0;
  std::size_t mask_ = 0;
};

/// One real per site.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Lattice& lattice) : lattice_(lattice), values_(lattice.size(), 0.0) {}
  ScalarField(const Lattice& lattice, std::vector<double> values);

  const Lattice& lattice() const { return lattice_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t site) { return values_[site]; }
  double operator[](std::size_t site) const { return values_[site]; }

 private:
  Lattice lattice_;
  std::vector<double> values_;
};

/// d reals per site, stored component-major.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(const Lattice& lattice)
      : lattice_(lattice), values_(lattice.size() * lattice.dim(), 0.0) {}
  VectorField(const Lattice& lattice, std::vector<double> values);

  const Lattice& lattice() const { return lattice_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> component(int j) {
    return std::span<double>(values_).subspan(j * lattice_.size(), lattice_.size());
  }
  std::span<const double> component(int j) const {
    return std::span<const double>(values_).subspan(j * lattice_.size(), lattice_.size());
  }

 private:
  Lattice lattice_;
  std::vector<double> values_;
};

/// d x d reals per site, stored component-major with entry (r, c) at block r*d + c.
class TensorField {
 public:
  TensorField() = default;
  explicit TensorField(const Lattice& lattice, bool symmetric = false)
      : lattice_(lattice), values_(lattice.size() * lattice.dim() * lattice.dim(), 0.0),
        symmetric_(symmetric) {}

  const Lattice& lattice() const { return lattice_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> component(int r, int c) {
    const int d = lattice_.dim();
    return std::span<double>(values_).subspan((r * d + c) * lattice_.size(), lattice_.size());
  }
  std::span<const double> component(int r, int c) const {
    const int d = lattice_.dim();
    return std::span<const double>(values_).subspan((r * d + c) * lattice_.size(),
                                                    lattice_.size());
  }
  double at(std::size_t site, int r, int c) const {
    return values_[(r * lattice_.dim() + c) * lattice_.size() + site];
  }

  bool symmetric() const { return symmetric_; }
  /// Sets the symmetry flag after checking per-site symmetry to 1e-12.
  void mark_symmetric();

  static TensorField identity(const Lattice& lattice);
  static TensorField scalar(const ScalarField& mu);

 private:
  Lattice lattice_;
  std::vector<double> values_;
  bool symmetric_ = false;
};

/// Axis-aligned cube of side 2r whose lower corner sits at integer site coordinates.
struct DyadicCube {
  double radius = 0.0;                // physical level radius r
  std::array<long, 3> corner{0, 0, 0};  // site coordinates, wrapped periodically
  int side_sites = 0;                  // 2r / h

  /// All lattice sites inside the cube, ordered with axis 0 fastest.
  std::vector<std::size_t> sites(const Lattice& lattice) const;
  double side_length(const Lattice& lattice) const { return side_sites * lattice.spacing(); }
};

/// Number of sites per axis for a cube of level radius r; throws unless 2r/h is a power of two <= n.
int cube_side_sites(const Lattice& lattice, double radius);

/// Cube of radius r whose centre (in site units) is `center`; the default centre is the origin.
DyadicCube centered_cube(const Lattice& lattice, double radius,
                         std::array<long, 3> center = {0, 0, 0});

/// The (L / 2r)^d cubes of level r tiling the box, corners at multiples of 2r.
std::vector<DyadicCube> dyadic_partition(const Lattice& lattice, double radius);

/// Forward differences with periodic wrap.
VectorField grad(const ScalarField& u);
/// Backward differences; the negative adjoint of grad in the lattice inner product.
ScalarField div(const VectorField& h);
/// Forward difference along one axis.
ScalarField partial(const ScalarField& u, int axis);
/// Backward difference along one axis.
ScalarField partial_backward(const ScalarField& u, int axis);

double cube_average(std::span<const double> values, const Lattice& lattice, const DyadicCube& cube);
double cube_average(const ScalarField& field, const DyadicCube& cube);

double mean(std::span<const double> values);

/// Lattice inner product sum_x f(x) g(x) h^d.
double inner(std::span<const double> f, std::span<const double> g, const Lattice& lattice);

/// (sum_{x in region} |field(x)|^q h^d)^{1/q} with |.| the Euclidean/Frobenius magnitude.
/// An empty region pointer means the whole box.
double lq_norm(const ScalarField& field, double q, const DyadicCube* region = nullptr);
double lq_norm(const VectorField& field, double q, const DyadicCube* region = nullptr);
double lq_norm(const TensorField& field, double q, const DyadicCube* region = nullptr);

}  // namespace correctorlab
