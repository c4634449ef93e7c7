#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace nlch {

/// Raised when a field does not live on the grid it is used with, or when an
/// operator precondition on the field is violated.
class SpectralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class NormKind { L2, V, Vdual, H2seminorm };

class SpectralSpace;

/// Grid function on the cosine-collocation nodes of a SpectralSpace.
///
/// Values are stored row-major (x slowest). A field may carry the spectral
/// coefficients it was synthesized from; any mutable access drops them.
class Field {
 public:
  Field() = default;
  explicit Field(std::vector<double> values) : values_(std::move(values)) {}

  static Field constant(const SpectralSpace& space, double value);
  static Field from_coefficients(const SpectralSpace& space, std::vector<double> coeffs);

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vector() const { return values_; }

  std::span<double> mutable_values() {
    coeffs_.reset();
    return values_;
  }

  double operator[](std::size_t i) const { return values_[i]; }

  /// Coefficients cached at construction, or null when values were edited.
  const std::vector<double>* cached_coefficients() const {
    return coeffs_ ? &*coeffs_ : nullptr;
  }

 private:
  std::vector<double> values_;
  std::optional<std::vector<double>> coeffs_;
};

/// Tensor-product box [0,L_x] (x [0,L_y]) with the Neumann cosine eigenbasis.
///
/// Basis functions are orthonormal in L^2: psi_k(x) = sqrt(c_k/L) cos(k pi x/L)
/// with c_0 = 1 and c_k = 2. Grid nodes are cell midpoints, so the discrete
/// transform is an exactly orthogonal DCT-II (scaled by the cell size).
/// Immutable after construction; copies share the transform plans.
class SpectralSpace {
 public:
  SpectralSpace(std::vector<double> lengths, std::vector<std::size_t> n_modes);

  static SpectralSpace unit_interval(std::size_t n) { return SpectralSpace({1.0}, {n}); }
  static SpectralSpace unit_square(std::size_t n) { return SpectralSpace({1.0, 1.0}, {n, n}); }

  int dims() const { return static_cast<int>(lengths_.size()); }
  const std::vector<double>& lengths() const { return lengths_; }
  const std::vector<std::size_t>& n_modes() const { return n_; }
  std::size_t n(int axis) const { return n_[axis]; }
  double spacing(int axis) const { return lengths_[axis] / static_cast<double>(n_[axis]); }
  /// Number of grid nodes (and of tensor modes).
  std::size_t size() const { return size_; }
  double volume() const { return volume_; }
  double cell_volume() const { return cell_volume_; }

  /// Coordinate of node i along an axis.
  double node(int axis, std::size_t i) const { return (static_cast<double>(i) + 0.5) * spacing(axis); }
  /// Coordinates of every node along an axis.
  std::vector<double> nodes(int axis) const;

  /// Neumann-Laplacian eigenvalue per tensor mode, laid out like the field.
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  double lambda_first_nonzero() const { return lambda_first_; }
  /// Poincare-Wirtinger constant, 1 / first nonzero eigenvalue.
  double lambda_omega() const { return lambda_omega_; }

  /// Value of the orthonormal 1D basis function `mode` along `axis` at x.
  double basis_1d(int axis, std::size_t mode, double x) const;

  std::vector<double> transform(std::span<const double> values) const;
  std::vector<double> inverse(std::span<const double> coeffs) const;
  std::vector<double> transform(const Field& f) const;

  double mean(const Field& f) const;
  Field apply_AN(const Field& f) const;
  /// Zero-mean solution g of A_N g = f. Throws SpectralError if <f> != 0.
  Field solve_inverse_AN(const Field& f) const;
  double norm(const Field& f, NormKind kind) const;
  double norm_from_coefficients(std::span<const double> coeffs, NormKind kind) const;

  /// L^2 inner product with the midpoint rule (equal to the coefficient dot product).
  double inner(const Field& f, const Field& g) const;

  void require_compatible(const Field& f) const;
  bool same_grid(const SpectralSpace& other) const;

 private:
  struct Plans;

  std::vector<double> lengths_;
  std::vector<std::size_t> n_;
  std::size_t size_ = 0;
  double volume_ = 0.0;
  double cell_volume_ = 0.0;
  std::vector<double> eigenvalues_;
  double lambda_first_ = 0.0;
  double lambda_omega_ = 0.0;
  std::vector<double> forward_scale_;
  std::vector<double> inverse_scale_;
  std::shared_ptr<const Plans> plans_;
};

}  // namespace nlch
