#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "generators.hpp"
#include "nlch/kernel.hpp"

using namespace nlch;
using nlch::testing::Gen;

namespace {

Kernel gaussian(const SpectralSpace& sp, double sigma, double mass = 10.0) {
  KernelSpec ks;
  ks.width = sigma;
  ks.mass = mass;
  return build_kernel(ks, sp);
}

// O(N^2) midpoint quadrature of int_Omega J(x - y) f(y) dy from point values of J.
std::vector<double> direct_quadrature(const Kernel& k, const Field& f) {
  const auto& sp = k.space();
  std::vector<double> out(f.size(), 0.0);
  const std::size_t d = static_cast<std::size_t>(sp.dims());
  std::vector<double> x(d), y(d), diff(d);
  const auto coords = [&](std::size_t i, std::vector<double>& p) {
    if (d == 1) {
      p[0] = sp.node(0, i);
    } else {
      p[0] = sp.node(0, i / sp.n(1));
      p[1] = sp.node(1, i % sp.n(1));
    }
  };
  for (std::size_t i = 0; i < f.size(); ++i) {
    coords(i, x);
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      coords(j, y);
      for (std::size_t a = 0; a < d; ++a) diff[a] = x[a] - y[a];
      s += k.value(diff) * f[j];
    }
    out[i] = sp.cell_volume() * s;
  }
  return out;
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / den;
}

std::string row(double dx, double v) {
  char line[128];
  std::snprintf(line, sizeof line, "%.17g,%.17g\n", dx, v);
  return line;
}

std::string write_table(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path.string();
}

}  // namespace

TEST(Kernel, FftConvolutionMatchesDirectQuadrature1D) {
  Gen g(1);
  for (std::size_t n = 9; n <= 65; n += 4) {
    const auto sp = SpectralSpace::unit_interval(n);
    const double sigma = std::max(0.1, 8.0 / (6.0 * static_cast<double>(n)));
    const auto k = gaussian(sp, sigma);
    const auto f = g.field(sp);
    EXPECT_LE(max_rel_error(k.convolve(f).vector(), direct_quadrature(k, f)), 1e-10) << "n=" << n;
  }
}

TEST(Kernel, FftConvolutionMatchesDirectQuadrature2D) {
  Gen g(2);
  for (std::size_t n : {9u, 12u, 17u}) {
    const auto sp = SpectralSpace::unit_square(n);
    const auto k = gaussian(sp, 0.2);
    const auto f = g.field(sp);
    EXPECT_LE(max_rel_error(k.convolve(f).vector(), direct_quadrature(k, f)), 1e-10) << "n=" << n;
  }
}

TEST(Kernel, DirectPathAgreesWithFft) {
  Gen g(3);
  const auto sp = SpectralSpace::unit_interval(33);
  const auto k = gaussian(sp, 0.1);
  const auto f = g.field(sp);
  EXPECT_LE(max_rel_error(k.convolve(f).vector(), k.convolve_direct(f).vector()), 1e-12);
}

TEST(Kernel, ConstantFieldGivesScaledA) {
  const auto sp = SpectralSpace::unit_interval(33);
  const auto k = gaussian(sp, 0.1);
  const auto c = k.convolve(Field::constant(sp, 2.5));
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], 2.5 * k.a_field()[i], 1e-11);
  const auto one = k.convolve(Field::constant(sp, 1.0));
  EXPECT_EQ(one.vector(), k.a_field().vector());
}

TEST(Kernel, GaussianAAtCentreMatchesErf) {
  // a(1/2) = m erf(1/(2 sigma sqrt 2)) for a unit-interval gaussian of mass m.
  const auto sp = SpectralSpace::unit_interval(65);
  const double sigma = 0.05, m = 3.0;
  const auto k = gaussian(sp, sigma, m);
  const double exact = m * std::erf(0.5 / (sigma * std::numbers::sqrt2));
  EXPECT_NEAR(k.a_field()[32], exact, 1e-6 * m);
  // The node next to the wall sees roughly half of the mass.
  const double x0 = sp.node(0, 0);
  const double edge = 0.5 * m * (std::erf((1 - x0) / (sigma * std::numbers::sqrt2)) +
                                 std::erf(x0 / (sigma * std::numbers::sqrt2)));
  EXPECT_NEAR(k.a_field()[0], edge, 5e-3 * m);
}

TEST(Kernel, MollifierInteriorSeesFullMass) {
  const auto sp = SpectralSpace::unit_interval(65);
  KernelSpec ks;
  ks.family = KernelFamily::mollifier;
  ks.width = 0.2;
  ks.mass = 4.0;
  const auto k = build_kernel(ks, sp);
  EXPECT_NEAR(k.c_J_full(), 4.0, 1e-9);
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const double x = sp.node(0, i);
    if (x > 0.2 && x < 0.8) EXPECT_NEAR(k.a_field()[i], 4.0, 1e-4 * 4.0) << "x=" << x;
  }
}

TEST(Kernel, MinimumOfAIsOnTheBoundary) {
  for (std::size_t n : {17u, 33u}) {
    const auto sp = SpectralSpace::unit_interval(n);
    const auto k = gaussian(sp, 0.1);
    double lo = 1e300;
    std::size_t at = 0;
    for (std::size_t i = 0; i < sp.size(); ++i) {
      if (k.a_field()[i] < lo) {
        lo = k.a_field()[i];
        at = i;
      }
    }
    EXPECT_TRUE(at == 0 || at == n - 1);
    EXPECT_LE(k.a0(), lo);
    const double x = k.a0_location().at(0);
    EXPECT_TRUE(x <= sp.spacing(0) || x >= 1.0 - sp.spacing(0)) << x;
  }
}

TEST(Kernel, GaussianConstants) {
  const auto sp = SpectralSpace::unit_interval(33);
  const double sigma = 0.1, m = 10.0;
  const auto k = gaussian(sp, sigma, m);
  // Full support: |J|_1 = m, |J'|_1 = 2 J(0) = 2 m / (sigma sqrt(2 pi)).
  EXPECT_NEAR(k.c_J_full(), m, 1e-12);
  EXPECT_NEAR(k.d_J_full(), 2 * m / (sigma * std::sqrt(2 * std::numbers::pi)), 1e-9);
  // Over Omega - Omega = [-1, 1] the tails beyond 10 sigma are invisible.
  EXPECT_NEAR(k.c_J(), m, 1e-6);
  EXPECT_NEAR(k.d_J(), k.d_J_full(), 1e-3 * k.d_J_full());
  EXPECT_GT(k.a0(), 0.0);
  EXPECT_LE(k.a0(), k.a_star());
  EXPECT_EQ(k.symmetry_residual(), 0.0);
  EXPECT_TRUE(certify_H1(k).pass);
}

TEST(Kernel, UnderResolvedRejected) {
  const auto sp = SpectralSpace::unit_interval(17);
  try {
    gaussian(sp, 0.05);
    FAIL() << "expected an under-resolution error";
  } catch (const KernelError& e) {
    EXPECT_EQ(e.kind(), KernelError::Kind::under_resolved);
  }
}

TEST(Kernel, BadParametersRejected) {
  const auto sp = SpectralSpace::unit_interval(17);
  EXPECT_THROW(gaussian(sp, -1.0), KernelError);
  EXPECT_THROW(parse_kernel_family("cauchy"), KernelError);
}

TEST(Kernel, OddTableFailsSymmetry) {
  std::string body = "dx,value\n";
  for (int m = -16; m <= 16; ++m) body += row(m / 17.0, m / 17.0);
  const auto path = write_table("nlch_odd_table.csv", body);
  const auto sp = SpectralSpace::unit_interval(17);
  KernelSpec ks;
  ks.family = KernelFamily::table;
  ks.table = read_kernel_table(path);
  const Kernel k(ks, sp);
  const auto rep = certify_H1(k);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.symmetric);
  EXPECT_THROW(build_kernel(ks, sp), KernelError);
}

TEST(Kernel, ZeroTableFailsPositivity) {
  std::string body = "# zero kernel\ndx,value\n";
  for (int m = -16; m <= 16; ++m) body += row(m / 17.0, 0.0);
  const auto path = write_table("nlch_zero_table.csv", body);
  const auto sp = SpectralSpace::unit_interval(17);
  KernelSpec ks;
  ks.family = KernelFamily::table;
  ks.table = read_kernel_table(path);
  const auto rep = certify_H1(Kernel(ks, sp));
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.positive);
}

TEST(Kernel, EvenTableReproducesGaussianConvolution) {
  const auto sp = SpectralSpace::unit_interval(17);
  const auto g = gaussian(sp, 0.1, 1.0);
  std::string body = "dx,value\n";
  for (int m = -16; m <= 16; ++m) {
    const std::vector<double> p{m / 17.0};
    body += row(p[0], g.value(p));
  }
  KernelSpec ks;
  ks.family = KernelFamily::table;
  ks.table = read_kernel_table(write_table("nlch_even_table.csv", body));
  const auto t = build_kernel(ks, sp);
  Gen gen(9);
  const auto f = gen.field(sp);
  EXPECT_LE(max_rel_error(t.convolve(f).vector(), g.convolve(f).vector()), 1e-12);
}

TEST(KernelProperty, SymmetricBilinearForm) {
  for (int c = 0; c < nlch::testing::kCases; ++c) {
    Gen g(700 + c);
    const auto sp = g.space(17, 40);
    const double sigma = 8.0 * std::max(sp.spacing(0), sp.dims() == 2 ? sp.spacing(1) : 0.0) / 6.0;
    const auto k = gaussian(sp, g.uniform(sigma, 2 * sigma), g.uniform(1.0, 10.0));
    const auto f = g.field(sp), h = g.field(sp);
    const double a = sp.inner(k.convolve(f), h), b = sp.inner(f, k.convolve(h));
    ASSERT_NEAR(a, b, 1e-10 * std::max(1.0, std::abs(a))) << "seed " << 700 + c;
  }
}

TEST(KernelProperty, YoungInequality) {
  for (int c = 0; c < nlch::testing::kCases; ++c) {
    Gen g(800 + c);
    const auto sp = g.space(17, 40);
    const double sigma = 8.0 * std::max(sp.spacing(0), sp.dims() == 2 ? sp.spacing(1) : 0.0) / 6.0;
    const auto k = gaussian(sp, g.uniform(sigma, 2 * sigma), g.uniform(1.0, 10.0));
    const auto f = g.field(sp);
    ASSERT_LE(sp.norm(k.convolve(f), NormKind::L2), k.c_J() * sp.norm(f, NormKind::L2) * (1 + 1e-10))
        << "seed " << 800 + c;
  }
}

TEST(KernelProperty, ExactGridSymmetry) {
  for (int c = 0; c < 10; ++c) {
    Gen g(900 + c);
    const auto sp = g.space(17, 40);
    const double sigma = 8.0 * std::max(sp.spacing(0), sp.dims() == 2 ? sp.spacing(1) : 0.0) / 6.0;
    const auto k = gaussian(sp, g.uniform(sigma, 2 * sigma));
    const auto& s = k.samples();
    for (std::size_t i = 0; i < s.size(); ++i) ASSERT_EQ(s[i], s[s.size() - 1 - i]);
  }
}
