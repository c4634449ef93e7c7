#pragma once

// Data-parallel inner loops of the solver. Each kernel has an OpenMP version
// (used by the library) and a serial twin under `serial::` that is kept as the
// reference for tests and the benchmark. Kernels only parallelize elementwise
// maps; every reduction stays serial so results do not depend on the thread
// count.

#include <span>
#include <vector>

#include "nlch/convolution.hpp"
#include "nlch/polynomial.hpp"

namespace nlch::kernels {

/// out = p(x) pointwise.
void evaluate(const Polynomial& p, std::span<const double> x, std::span<double> out);

/// out_i = a_i phi_i - conv_i + dF(phi_i), the nonlocal chemical source.
void chemical_source(std::span<const double> a, std::span<const double> phi,
                     std::span<const double> conv, const Polynomial& dF, std::span<double> out);

/// Stabilized viscous increment of the order parameter, mode by mode:
///   (1 + dt*lam*S + alpha*lam) d_k = -dt*lam*(w_k - delta*theta_k)
void imex_phi_increment(std::span<const double> lam, std::span<const double> w_hat,
                        std::span<const double> theta_hat, double dt, double stabilization,
                        double alpha, double delta, std::span<double> increment);

/// Backward-Euler heat update driven by the order-parameter increment:
///   (eps + dt*lam) theta_new_k = eps*theta_k - delta*d_k
void imex_theta_update(std::span<const double> lam, std::span<const double> theta_hat,
                       std::span<const double> increment, double epsilon, double dt, double delta,
                       std::span<double> theta_new);

/// Direct O(N^2) midpoint quadrature of the truncated convolution.
std::vector<double> convolve_direct(const OffsetGrid& grid, double weight,
                                    std::span<const double> samples, std::span<const double> f);

namespace serial {

void evaluate(const Polynomial& p, std::span<const double> x, std::span<double> out);
void chemical_source(std::span<const double> a, std::span<const double> phi,
                     std::span<const double> conv, const Polynomial& dF, std::span<double> out);
void imex_phi_increment(std::span<const double> lam, std::span<const double> w_hat,
                        std::span<const double> theta_hat, double dt, double stabilization,
                        double alpha, double delta, std::span<double> increment);
void imex_theta_update(std::span<const double> lam, std::span<const double> theta_hat,
                       std::span<const double> increment, double epsilon, double dt, double delta,
                       std::span<double> theta_new);
std::vector<double> convolve_direct(const OffsetGrid& grid, double weight,
                                    std::span<const double> samples, std::span<const double> f);

}  // namespace serial

}  // namespace nlch::kernels
