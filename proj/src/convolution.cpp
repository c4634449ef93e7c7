#include "nlch/convolution.hpp"

#include <fftw3.h>

#include <complex>
#include <numeric>
#include <stdexcept>

#include "fftw_lock.hpp"

namespace nlch {

std::size_t OffsetGrid::size() const {
  std::size_t s = 1;
  for (int a = 0; a < static_cast<int>(n.size()); ++a) s *= extent(a);
  return s;
}

struct LinearConvolver::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  Plans(const std::vector<std::size_t>& p, std::size_t nreal, std::size_t ncomplex) {
    std::vector<double> re(nreal);
    std::vector<fftw_complex> cx(ncomplex);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (p.size() == 1) {
      const int p0 = static_cast<int>(p[0]);
      r2c = fftw_plan_dft_r2c_1d(p0, re.data(), cx.data(), flags);
      c2r = fftw_plan_dft_c2r_1d(p0, cx.data(), re.data(), flags);
    } else {
      const int p0 = static_cast<int>(p[0]);
      const int p1 = static_cast<int>(p[1]);
      r2c = fftw_plan_dft_r2c_2d(p0, p1, re.data(), cx.data(), flags);
      c2r = fftw_plan_dft_c2r_2d(p0, p1, cx.data(), re.data(), flags);
    }
  }

  ~Plans() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
  }

  Plans(const Plans&) = delete;
  Plans& operator=(const Plans&) = delete;
};

LinearConvolver::LinearConvolver(std::vector<std::size_t> n, double weight,
                                 std::vector<double> kernel_samples)
    : offsets_{std::move(n)}, weight_(weight), samples_(std::move(kernel_samples)) {
  const int dims = static_cast<int>(offsets_.n.size());
  if (dims < 1 || dims > 2) throw std::invalid_argument("convolution grid must be 1D or 2D");
  if (samples_.size() != offsets_.size()) {
    throw std::invalid_argument("kernel samples do not match the difference grid");
  }

  for (int a = 0; a < dims; ++a) padded_.push_back(2 * offsets_.n[a]);
  padded_real_ = std::accumulate(padded_.begin(), padded_.end(), std::size_t{1}, std::multiplies<>());
  padded_complex_ = (dims == 1) ? padded_[0] / 2 + 1 : padded_[0] * (padded_[1] / 2 + 1);
  plans_ = std::make_shared<const Plans>(padded_, padded_real_, padded_complex_);

  // Wrap negative offsets to the tail of the padded buffer.
  std::vector<double> kpad(padded_real_, 0.0);
  if (dims == 1) {
    const long nx = static_cast<long>(offsets_.n[0]);
    const long px = static_cast<long>(padded_[0]);
    for (long m = -(nx - 1); m <= nx - 1; ++m) {
      kpad[static_cast<std::size_t>((m + px) % px)] = samples_[offsets_.index(m)];
    }
  } else {
    const long nx = static_cast<long>(offsets_.n[0]);
    const long ny = static_cast<long>(offsets_.n[1]);
    const long px = static_cast<long>(padded_[0]);
    const long py = static_cast<long>(padded_[1]);
    for (long mx = -(nx - 1); mx <= nx - 1; ++mx) {
      for (long my = -(ny - 1); my <= ny - 1; ++my) {
        const auto ix = static_cast<std::size_t>((mx + px) % px);
        const auto iy = static_cast<std::size_t>((my + py) % py);
        kpad[ix * padded_[1] + iy] = samples_[offsets_.index(mx, my)];
      }
    }
  }

  std::vector<fftw_complex> out(padded_complex_);
  fftw_execute_dft_r2c(plans_->r2c, kpad.data(), out.data());
  spectrum_.resize(2 * padded_complex_);
  for (std::size_t k = 0; k < padded_complex_; ++k) {
    spectrum_[2 * k] = out[k][0];
    spectrum_[2 * k + 1] = out[k][1];
  }
}

std::size_t LinearConvolver::grid_size() const {
  return std::accumulate(offsets_.n.begin(), offsets_.n.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<double> LinearConvolver::apply(std::span<const double> f) const {
  if (f.size() != grid_size()) throw std::invalid_argument("convolution input size mismatch");
  const int dims = static_cast<int>(offsets_.n.size());

  std::vector<double> buf(padded_real_, 0.0);
  if (dims == 1) {
    std::copy(f.begin(), f.end(), buf.begin());
  } else {
    const std::size_t nx = offsets_.n[0], ny = offsets_.n[1];
    for (std::size_t i = 0; i < nx; ++i) {
      std::copy_n(f.begin() + static_cast<std::ptrdiff_t>(i * ny), ny, buf.begin() + static_cast<std::ptrdiff_t>(i * padded_[1]));
    }
  }

  std::vector<fftw_complex> spec(padded_complex_);
  fftw_execute_dft_r2c(plans_->r2c, buf.data(), spec.data());
  for (std::size_t k = 0; k < padded_complex_; ++k) {
    const std::complex<double> a(spec[k][0], spec[k][1]);
    const std::complex<double> b(spectrum_[2 * k], spectrum_[2 * k + 1]);
    const auto c = a * b;
    spec[k][0] = c.real();
    spec[k][1] = c.imag();
  }
  fftw_execute_dft_c2r(plans_->c2r, spec.data(), buf.data());

  const double scale = weight_ / static_cast<double>(padded_real_);
  std::vector<double> out(grid_size());
  if (dims == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = buf[i] * scale;
  } else {
    const std::size_t nx = offsets_.n[0], ny = offsets_.n[1];
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < ny; ++j) out[i * ny + j] = buf[i * padded_[1] + j] * scale;
    }
  }
  return out;
}

}  // namespace nlch
