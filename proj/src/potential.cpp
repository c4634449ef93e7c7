#include "nlch/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nlch/kernels.hpp"

namespace nlch {

namespace {

Field evaluate_field(const Polynomial& p, const Field& s) {
  std::vector<double> out(s.size());
  kernels::evaluate(p, s.values(), out);
  return Field(std::move(out));
}

// Maximum of a continuous function on [lo, hi]: dense sampling, then golden
// section on the bracket around every sampled local maximum.
double dense_maximum(double lo, double hi, std::size_t samples, auto&& f) {
  const double h = (hi - lo) / static_cast<double>(samples - 1);
  std::vector<double> v(samples);
  for (std::size_t i = 0; i < samples; ++i) v[i] = f(lo + static_cast<double>(i) * h);
  double best = *std::max_element(v.begin(), v.end());
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const bool left = i == 0 || v[i] >= v[i - 1];
    const bool right = i + 1 == samples || v[i] >= v[i + 1];
    if (!left || !right) continue;
    double a = lo + static_cast<double>(i == 0 ? 0 : i - 1) * h;
    double b = lo + static_cast<double>(std::min(i + 1, samples - 1)) * h;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = f(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = f(x1);
      }
    }
    best = std::max({best, f1, f2});
  }
  return best;
}

}  // namespace

Potential::Potential(std::vector<double> coeffs, double amplitude)
    : f_(Polynomial(std::move(coeffs)) * amplitude) {
  const int d = f_.degree();
  if (d < 4 || d % 2 != 0 || !(f_.leading() > 0.0)) {
    throw PotentialError("potential must be a polynomial of even degree >= 4 with positive leading coefficient");
  }
  for (double c : f_.coefficients()) {
    if (!std::isfinite(c)) throw PotentialError("potential coefficients must be finite");
  }
  df_ = f_.derivative();
  d2f_ = df_.derivative();
}

Potential Potential::double_well(double amplitude) { return Potential({1.0, 0.0, -2.0, 0.0, 1.0}, amplitude); }

Field Potential::F(const Field& s) const { return evaluate_field(f_, s); }
Field Potential::dF(const Field& s) const { return evaluate_field(df_, s); }
Field Potential::d2F(const Field& s) const { return evaluate_field(d2f_, s); }

Polynomial Potential::split_G(double a_star) const { return f_ + Polynomial::monomial(2, a_star / 2.0); }

const H4Candidate* H4Result::verdict(int num, int den) const {
  for (const auto& c : candidates) {
    if (c.num * den == num * c.den) return &c;
  }
  return nullptr;
}

H4Candidate certify_H4_at(const Potential& pot, int num, int den) {
  H4Candidate c;
  const int g = std::gcd(num, den);
  c.num = num / g;
  c.den = den / g;
  c.p = static_cast<double>(c.num) / c.den;
  const Polynomial& F = pot.F();
  const int d = F.degree();
  const double ad = F.leading();

  // |F'|^p grows like |s|^{(d-1)p}; |F| like |s|^d.
  if ((d - 1) * c.num > d * c.den) {
    c.reason = "|F'|^p outgrows |F| at infinity";
    return c;
  }

  const double lead = std::max(std::pow(d * ad, c.p), d * ad);
  c.c3 = 2.0 * lead / ad;

  // Tail radius beyond which the leading terms dominate with the factor 2 margin.
  double R = 1.0;
  for (;; R *= 2.0) {
    double eta0 = 0.0, eta1 = 0.0;
    for (int k = 0; k < d; ++k) {
      eta0 += std::abs(F.coefficient(k)) / (ad * std::pow(R, d - k));
      eta1 += k * std::abs(F.coefficient(k)) / (d * ad * std::pow(R, d - k));
    }
    if (eta0 < 1.0 && std::max(std::pow(1.0 + eta1, c.p), 1.0 + eta1) / (1.0 - eta0) <= 2.0) break;
  }
  c.tail_radius = R;

  const double p = c.p, c3 = c.c3;
  const auto excess = [&](double s) {
    const double dfs = std::abs(pot.dF(s));
    const double fs = std::abs(pot.F(s));
    return std::max(std::pow(dfs, p) - c3 * fs, dfs - c3 * fs);
  };
  const double m = std::max(0.0, dense_maximum(-R, R, 200001, excess));
  c.c4 = m * (1.0 + 1e-9) + 1e-9;
  c.feasible = true;
  c.reason = "ok";
  return c;
}

Certification certify_H2_to_H5(const Potential& pot, double a0, double c_J, double c_J_full,
                               std::optional<double> c1) {
  Certification cert;
  const Polynomial& F = pot.F();
  const int d = F.degree();

  // (H2)
  const auto m2 = pot.d2F().minimum();
  cert.h2.min_d2F = m2.value;
  cert.h2.min_d2F_at = m2.at;
  cert.h2.c0 = m2.value + a0;
  cert.h2.holds = cert.h2.c0 > 0.0;

  // (H3)
  const double mass = std::max(c_J, c_J_full);
  cert.h3.c1 = c1 ? *c1 : std::max(1.0, std::floor(mass / 2.0) + 1.0);
  const auto m3 = (F - Polynomial::monomial(2, cert.h3.c1)).minimum();
  cert.h3.c2 = -m3.value;
  cert.h3.min_at = m3.at;
  cert.h3.exceeds_half_cJ = cert.h3.c1 > c_J / 2.0;
  cert.h3.exceeds_half_cJ_full = cert.h3.c1 > c_J_full / 2.0;
  cert.h3.holds = cert.h3.exceeds_half_cJ_full;

  // (H4): search p over rationals in (6/5, 2] with denominators up to 12.
  std::vector<std::pair<int, int>> grid;
  for (int den = 1; den <= 12; ++den) {
    for (int num = den; num <= 2 * den; ++num) {
      if (5 * num <= 6 * den || std::gcd(num, den) != 1) continue;
      grid.emplace_back(num, den);
    }
  }
  std::sort(grid.begin(), grid.end(), [](auto a, auto b) { return a.first * b.second < b.first * a.second; });
  for (auto [num, den] : grid) {
    cert.h4.candidates.push_back(certify_H4_at(pot, num, den));
    const auto& c = cert.h4.candidates.back();
    if (c.feasible) {
      cert.h4.holds = true;
      cert.h4.p = c.p;
      cert.h4.c3 = c.c3;
      cert.h4.c4 = c.c4;
    }
  }

  // (H5): q = (d-2)/2 so that |s|^{2q} = s^{d-2}.
  cert.h5.q = (d - 2) / 2.0;
  double c5 = d * (d - 1) * F.leading();
  const Polynomial base = pot.d2F() + Polynomial({a0});
  std::optional<double> residual_min;
  for (int attempt = 0; attempt < 2 && !residual_min; ++attempt) {
    try {
      residual_min = (base - Polynomial::monomial(d - 2, c5)).minimum().value;
    } catch (const std::domain_error&) {
      c5 /= 2.0;
    }
  }
  cert.h5.c5 = c5;
  cert.h5.c6 = residual_min ? std::max(0.0, -*residual_min) : 0.0;
  cert.h5.holds = residual_min.has_value() && c5 > 0.0 && cert.h5.q >= 0.5;
  return cert;
}

Certification certify_H2_to_H5(const Potential& pot, const Kernel& k, std::optional<double> c1) {
  return certify_H2_to_H5(pot, k.a0(), k.c_J(), k.c_J_full(), c1);
}

double lipschitz_bound_on_range(const Potential& pot, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("lipschitz range must satisfy lo <= hi");
  return pot.d2F().max_abs_on(lo, hi);
}

}  // namespace nlch
