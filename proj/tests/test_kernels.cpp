#include <gtest/gtest.h>

#include "generators.hpp"
#include "nlch/kernel.hpp"
#include "nlch/kernels.hpp"
#include "nlch/potential.hpp"

using namespace nlch;
using nlch::testing::Gen;

// Each parallel kernel must equal its serial twin bit for bit.

TEST(KernelsProperty, ParallelMatchesSerial) {
  const auto pot = Potential::double_well();
  for (int c = 0; c < nlch::testing::kCases; ++c) {
    Gen g(1000 + c);
    const auto sp = g.space(17, 40);
    const std::size_t n = sp.size();
    const auto x = g.values(n, 2.0), conv = g.values(n), a = g.values(n, 10.0);
    std::vector<double> p1(n), p2(n);

    kernels::evaluate(pot.F(), x, p1);
    kernels::serial::evaluate(pot.F(), x, p2);
    ASSERT_EQ(p1, p2);

    kernels::chemical_source(a, x, conv, pot.dF(), p1);
    kernels::serial::chemical_source(a, x, conv, pot.dF(), p2);
    ASSERT_EQ(p1, p2);

    const auto& lam = sp.eigenvalues();
    const auto w = g.values(n), th = g.values(n);
    const double dt = g.log_uniform(1e-5, 1e-2), S = g.uniform(0, 20), al = g.uniform(0.01, 1),
                 de = g.uniform(0, 1), ep = g.uniform(0.01, 1);
    kernels::imex_phi_increment(lam, w, th, dt, S, al, de, p1);
    kernels::serial::imex_phi_increment(lam, w, th, dt, S, al, de, p2);
    ASSERT_EQ(p1, p2);

    std::vector<double> t1(n), t2(n);
    kernels::imex_theta_update(lam, th, p1, ep, dt, de, t1);
    kernels::serial::imex_theta_update(lam, th, p1, ep, dt, de, t2);
    ASSERT_EQ(t1, t2);
  }
}

TEST(KernelsProperty, DirectConvolutionParallelMatchesSerial) {
  for (int c = 0; c < 10; ++c) {
    Gen g(1100 + c);
    const auto sp = g.space(17, 34);
    KernelSpec ks;
    ks.width = 8.0 * std::max(sp.spacing(0), sp.dims() == 2 ? sp.spacing(1) : 0.0) / 6.0;
    ks.mass = 5.0;
    const auto k = build_kernel(ks, sp);
    const auto f = g.values(sp.size());
    const auto& cv = k.convolver();
    ASSERT_EQ(kernels::convolve_direct(cv.offsets(), cv.weight(), cv.samples(), f),
              kernels::serial::convolve_direct(cv.offsets(), cv.weight(), cv.samples(), f));
  }
}

TEST(Kernels, ImexIncrementClosedForm) {
  const std::vector<double> lam{0.0, 2.0}, w{1.0, 3.0}, th{0.5, 0.25};
  std::vector<double> d(2), t(2);
  kernels::imex_phi_increment(lam, w, th, 0.1, 4.0, 0.5, 0.2, d);
  EXPECT_EQ(d[0], 0.0);
  // -dt lam (w - delta theta) / (1 + dt lam S + alpha lam)
  EXPECT_DOUBLE_EQ(d[1], -0.1 * 2.0 * (3.0 - 0.2 * 0.25) / (1 + 0.1 * 2 * 4 + 0.5 * 2));
  kernels::imex_theta_update(lam, th, d, 0.3, 0.1, 0.2, t);
  EXPECT_DOUBLE_EQ(t[1], (0.3 * 0.25 - 0.2 * d[1]) / (0.3 + 0.1 * 2.0));
  EXPECT_DOUBLE_EQ(t[0], 0.5);
}
