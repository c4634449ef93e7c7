#include "nlch/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "fftw_lock.hpp"

namespace nlch {

struct SpectralSpace::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;

  Plans(const std::vector<std::size_t>& n, std::size_t size) {
    std::vector<double> in(size), out(size);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (n.size() == 1) {
      const int n0 = static_cast<int>(n[0]);
      forward = fftw_plan_r2r_1d(n0, in.data(), out.data(), FFTW_REDFT10, flags);
      inverse = fftw_plan_r2r_1d(n0, in.data(), out.data(), FFTW_REDFT01, flags);
    } else {
      const int n0 = static_cast<int>(n[0]);
      const int n1 = static_cast<int>(n[1]);
      forward = fftw_plan_r2r_2d(n0, n1, in.data(), out.data(), FFTW_REDFT10, FFTW_REDFT10, flags);
      inverse = fftw_plan_r2r_2d(n0, n1, in.data(), out.data(), FFTW_REDFT01, FFTW_REDFT01, flags);
    }
  }

  ~Plans() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(inverse);
  }

  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

SpectralSpace::SpectralSpace(std::vector<double> lengths, std::vector<std::size_t> n_modes)
    : lengths_(std::move(lengths)), n_(std::move(n_modes)) {
  if (lengths_.empty() || lengths_.size() > 2 || lengths_.size() != n_.size()) {
    throw SpectralError("spectral space must be 1D or 2D with one length and mode count per axis");
  }
  for (std::size_t a = 0; a < lengths_.size(); ++a) {
    if (!(lengths_[a] > 0.0) || !std::isfinite(lengths_[a])) {
      throw SpectralError("domain lengths must be positive and finite");
    }
    if (n_[a] < 2) {
      throw SpectralError("at least two modes per axis are required");
    }
  }

  size_ = std::accumulate(n_.begin(), n_.end(), std::size_t{1}, std::multiplies<>());
  volume_ = std::accumulate(lengths_.begin(), lengths_.end(), 1.0, std::multiplies<>());
  cell_volume_ = volume_ / static_cast<double>(size_);

  // Per-axis factors, combined into tensor tables below.
  std::vector<std::vector<double>> lam(dims()), fwd(dims()), inv(dims());
  for (int a = 0; a < dims(); ++a) {
    const double L = lengths_[a];
    const double n = static_cast<double>(n_[a]);
    for (std::size_t k = 0; k < n_[a]; ++k) {
      const double c = (k == 0) ? 1.0 : 2.0;
      const double w = static_cast<double>(k) * kPi / L;
      lam[a].push_back(w * w);
      fwd[a].push_back(std::sqrt(c * L) / (2.0 * n));
      inv[a].push_back((k == 0) ? 1.0 / std::sqrt(L) : 1.0 / std::sqrt(2.0 * L));
    }
  }

  eigenvalues_.resize(size_);
  forward_scale_.resize(size_);
  inverse_scale_.resize(size_);
  if (dims() == 1) {
    eigenvalues_ = lam[0];
    forward_scale_ = fwd[0];
    inverse_scale_ = inv[0];
  } else {
    for (std::size_t i = 0; i < n_[0]; ++i) {
      for (std::size_t j = 0; j < n_[1]; ++j) {
        const std::size_t idx = i * n_[1] + j;
        eigenvalues_[idx] = lam[0][i] + lam[1][j];
        forward_scale_[idx] = fwd[0][i] * fwd[1][j];
        inverse_scale_[idx] = inv[0][i] * inv[1][j];
      }
    }
  }

  lambda_first_ = lam[0][1];
  for (int a = 1; a < dims(); ++a) lambda_first_ = std::min(lambda_first_, lam[a][1]);
  lambda_omega_ = 1.0 / lambda_first_;

  plans_ = std::make_shared<const Plans>(n_, size_);
}

std::vector<double> SpectralSpace::nodes(int axis) const {
  std::vector<double> x(n_[axis]);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = node(axis, i);
  return x;
}

double SpectralSpace::basis_1d(int axis, std::size_t mode, double x) const {
  const double L = lengths_[axis];
  const double c = (mode == 0) ? 1.0 : 2.0;
  return std::sqrt(c / L) * std::cos(static_cast<double>(mode) * kPi * x / L);
}

void SpectralSpace::require_compatible(const Field& f) const {
  if (f.size() != size_) {
    throw SpectralError("field has " + std::to_string(f.size()) + " values, grid has " +
                        std::to_string(size_));
  }
}

bool SpectralSpace::same_grid(const SpectralSpace& other) const {
  return lengths_ == other.lengths_ && n_ == other.n_;
}

std::vector<double> SpectralSpace::transform(std::span<const double> values) const {
  if (values.size() != size_) throw SpectralError("transform: size mismatch");
  // Uniform input maps onto the constant mode exactly, without transform round-off.
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) {
    std::vector<double> c(size_, 0.0);
    c[0] = values[0] * std::sqrt(volume_);
    return c;
  }
  std::vector<double> in(values.begin(), values.end());
  std::vector<double> out(size_);
  fftw_execute_r2r(plans_->forward, in.data(), out.data());
  for (std::size_t k = 0; k < size_; ++k) out[k] *= forward_scale_[k];
  return out;
}

std::vector<double> SpectralSpace::inverse(std::span<const double> coeffs) const {
  if (coeffs.size() != size_) throw SpectralError("inverse transform: size mismatch");
  std::vector<double> in(size_);
  for (std::size_t k = 0; k < size_; ++k) in[k] = coeffs[k] * inverse_scale_[k];
  std::vector<double> out(size_);
  fftw_execute_r2r(plans_->inverse, in.data(), out.data());
  return out;
}

std::vector<double> SpectralSpace::transform(const Field& f) const {
  require_compatible(f);
  if (const auto* cached = f.cached_coefficients()) return *cached;
  return transform(f.values());
}

double SpectralSpace::mean(const Field& f) const {
  const auto c = transform(f);
  return c[0] / std::sqrt(volume_);
}

Field SpectralSpace::apply_AN(const Field& f) const {
  auto c = transform(f);
  for (std::size_t k = 0; k < size_; ++k) c[k] *= eigenvalues_[k];
  return Field::from_coefficients(*this, std::move(c));
}

Field SpectralSpace::solve_inverse_AN(const Field& f) const {
  auto c = transform(f);
  const double avg = c[0] / std::sqrt(volume_);
  const double rms = norm_from_coefficients(c, NormKind::L2) / std::sqrt(volume_);
  if (std::abs(avg) > 1e-10 * std::max(1.0, rms)) {
    throw SpectralError("solve_inverse_AN: right-hand side has nonzero mean " + std::to_string(avg));
  }
  c[0] = 0.0;
  for (std::size_t k = 1; k < size_; ++k) c[k] /= eigenvalues_[k];
  return Field::from_coefficients(*this, std::move(c));
}

double SpectralSpace::norm_from_coefficients(std::span<const double> c, NormKind kind) const {
  const double avg = c[0] / std::sqrt(volume_);
  double s = 0.0;
  switch (kind) {
    case NormKind::L2:
      for (double v : c) s += v * v;
      break;
    case NormKind::V:
      for (std::size_t k = 1; k < size_; ++k) s += eigenvalues_[k] * c[k] * c[k];
      s += avg * avg;
      break;
    case NormKind::Vdual:
      for (std::size_t k = 1; k < size_; ++k) s += c[k] * c[k] / eigenvalues_[k];
      s += avg * avg;
      break;
    case NormKind::H2seminorm:
      for (std::size_t k = 1; k < size_; ++k) {
        const double l = eigenvalues_[k];
        s += l * l * c[k] * c[k];
      }
      break;
  }
  return std::sqrt(s);
}

double SpectralSpace::norm(const Field& f, NormKind kind) const {
  return norm_from_coefficients(transform(f), kind);
}

double SpectralSpace::inner(const Field& f, const Field& g) const {
  require_compatible(f);
  require_compatible(g);
  double s = 0.0;
  for (std::size_t i = 0; i < size_; ++i) s += f[i] * g[i];
  return s * cell_volume_;
}

Field Field::constant(const SpectralSpace& space, double value) {
  Field f(std::vector<double>(space.size(), value));
  std::vector<double> c(space.size(), 0.0);
  c[0] = value * std::sqrt(space.volume());
  f.coeffs_ = std::move(c);
  return f;
}

Field Field::from_coefficients(const SpectralSpace& space, std::vector<double> coeffs) {
  Field f(space.inverse(coeffs));
  f.coeffs_ = std::move(coeffs);
  return f;
}

}  // namespace nlch
