#include "nlch/kernels.hpp"

#include <cstddef>

namespace nlch::kernels {

namespace {

inline double phi_increment(double lam, double w, double th, double dt, double s, double alpha,
                            double delta) {
  return -dt * lam * (w - delta * th) / (1.0 + dt * lam * s + alpha * lam);
}

inline double theta_update(double lam, double th, double d, double eps, double dt, double delta) {
  return (eps * th - delta * d) / (eps + dt * lam);
}

// Output index i of the truncated convolution, shared by both versions.
inline double convolve_at(const OffsetGrid& g, std::span<const double> samples,
                          std::span<const double> f, std::size_t i) {
  double s = 0.0;
  if (g.n.size() == 1) {
    const long n = static_cast<long>(g.n[0]);
    const long il = static_cast<long>(i);
    for (long j = 0; j < n; ++j) s += samples[g.index(il - j)] * f[static_cast<std::size_t>(j)];
  } else {
    const long nx = static_cast<long>(g.n[0]);
    const long ny = static_cast<long>(g.n[1]);
    const long ix = static_cast<long>(i) / ny;
    const long iy = static_cast<long>(i) % ny;
    for (long jx = 0; jx < nx; ++jx) {
      for (long jy = 0; jy < ny; ++jy) {
        s += samples[g.index(ix - jx, iy - jy)] * f[static_cast<std::size_t>(jx * ny + jy)];
      }
    }
  }
  return s;
}

}  // namespace

void evaluate(const Polynomial& p, std::span<const double> x, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = p(x[i]);
}

void chemical_source(std::span<const double> a, std::span<const double> phi,
                     std::span<const double> conv, const Polynomial& dF, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(phi.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = a[i] * phi[i] - conv[i] + dF(phi[i]);
}

void imex_phi_increment(std::span<const double> lam, std::span<const double> w_hat,
                        std::span<const double> theta_hat, double dt, double stabilization,
                        double alpha, double delta, std::span<double> increment) {
  const auto n = static_cast<std::ptrdiff_t>(lam.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    increment[k] = phi_increment(lam[k], w_hat[k], theta_hat[k], dt, stabilization, alpha, delta);
  }
}

void imex_theta_update(std::span<const double> lam, std::span<const double> theta_hat,
                       std::span<const double> increment, double epsilon, double dt, double delta,
                       std::span<double> theta_new) {
  const auto n = static_cast<std::ptrdiff_t>(lam.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    theta_new[k] = theta_update(lam[k], theta_hat[k], increment[k], epsilon, dt, delta);
  }
}

std::vector<double> convolve_direct(const OffsetGrid& grid, double weight,
                                    std::span<const double> samples, std::span<const double> f) {
  std::vector<double> out(f.size());
  const auto n = static_cast<std::ptrdiff_t>(f.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = weight * convolve_at(grid, samples, f, static_cast<std::size_t>(i));
  }
  return out;
}

namespace serial {

void evaluate(const Polynomial& p, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = p(x[i]);
}

void chemical_source(std::span<const double> a, std::span<const double> phi,
                     std::span<const double> conv, const Polynomial& dF, std::span<double> out) {
  for (std::size_t i = 0; i < phi.size(); ++i) out[i] = a[i] * phi[i] - conv[i] + dF(phi[i]);
}

void imex_phi_increment(std::span<const double> lam, std::span<const double> w_hat,
                        std::span<const double> theta_hat, double dt, double stabilization,
                        double alpha, double delta, std::span<double> increment) {
  for (std::size_t k = 0; k < lam.size(); ++k) {
    increment[k] = phi_increment(lam[k], w_hat[k], theta_hat[k], dt, stabilization, alpha, delta);
  }
}

void imex_theta_update(std::span<const double> lam, std::span<const double> theta_hat,
                       std::span<const double> increment, double epsilon, double dt, double delta,
                       std::span<double> theta_new) {
  for (std::size_t k = 0; k < lam.size(); ++k) {
    theta_new[k] = theta_update(lam[k], theta_hat[k], increment[k], epsilon, dt, delta);
  }
}

std::vector<double> convolve_direct(const OffsetGrid& grid, double weight,
                                    std::span<const double> samples, std::span<const double> f) {
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = weight * convolve_at(grid, samples, f, i);
  return out;
}

}  // namespace serial

}  // namespace nlch::kernels
