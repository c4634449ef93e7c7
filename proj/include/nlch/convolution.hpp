#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace nlch {

/// Layout helper for kernel samples on the difference grid: offsets
/// m_a in [-(n_a-1), n_a-1] along each axis, stored row-major.
struct OffsetGrid {
  std::vector<std::size_t> n;  // state-grid nodes per axis

  std::size_t extent(int axis) const { return 2 * n[axis] - 1; }
  std::size_t size() const;
  std::size_t index(long mx) const { return static_cast<std::size_t>(mx + static_cast<long>(n[0]) - 1); }
  std::size_t index(long mx, long my) const {
    return index(mx) * extent(1) + static_cast<std::size_t>(my + static_cast<long>(n[1]) - 1);
  }
};

/// Truncated (non-periodic) discrete convolution
///   out_i = w * sum_j K(x_i - x_j) f_j
/// over an n_x (x n_y) grid, evaluated with zero-padded real FFTs of length
/// 2n per axis so that no periodic wrap-around reaches the domain.
class LinearConvolver {
 public:
  LinearConvolver(std::vector<std::size_t> n, double weight, std::vector<double> kernel_samples);

  std::vector<double> apply(std::span<const double> f) const;

  const OffsetGrid& offsets() const { return offsets_; }
  const std::vector<double>& samples() const { return samples_; }
  double weight() const { return weight_; }
  std::size_t grid_size() const;

 private:
  struct Plans;

  OffsetGrid offsets_;
  double weight_;
  std::vector<double> samples_;
  std::vector<std::size_t> padded_;
  std::size_t padded_real_ = 0;
  std::size_t padded_complex_ = 0;
  std::vector<double> spectrum_;  // interleaved re/im of the padded kernel
  std::shared_ptr<const Plans> plans_;
};

}  // namespace nlch
