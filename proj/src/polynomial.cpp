#include "nlch/polynomial.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nlch {

Polynomial::Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {
  while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
}

Polynomial Polynomial::derivative() const {
  if (c_.size() <= 1) return Polynomial();
  std::vector<double> d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
  return Polynomial(std::move(d));
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
  for (std::size_t k = 0; k < c_.size(); ++k) r[k] += c_[k];
  for (std::size_t k = 0; k < o.c_.size(); ++k) r[k] += o.c_[k];
  return Polynomial(std::move(r));
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o * -1.0; }

Polynomial Polynomial::operator*(double s) const {
  std::vector<double> r(c_);
  for (double& v : r) v *= s;
  return Polynomial(std::move(r));
}

Polynomial Polynomial::monomial(int degree, double coeff) {
  std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
  c.back() = coeff;
  return Polynomial(std::move(c));
}

std::vector<double> Polynomial::real_roots() const {
  const int n = degree();
  if (n <= 0) return {};
  if (n == 1) return {-c_[0] / c_[1]};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -c_[i] / c_[n];
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  const auto ev = es.eigenvalues();

  const Polynomial d = derivative();
  std::vector<double> roots;
  for (int i = 0; i < n; ++i) {
    const double re = ev[i].real();
    const double im = ev[i].imag();
    if (std::abs(im) > 1e-6 * (1.0 + std::abs(re))) continue;
    double x = re;
    for (int it = 0; it < 8; ++it) {
      const double dv = d(x);
      if (dv == 0.0) break;
      const double step = (*this)(x) / dv;
      if (!std::isfinite(step)) break;
      x -= step;
      if (std::abs(step) <= 1e-16 * (1.0 + std::abs(x))) break;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)); }),
              roots.end());
  return roots;
}

Polynomial::Extremum Polynomial::minimum() const {
  const int n = degree();
  if (n <= 0) return {coefficient(0), 0.0};
  if (n % 2 != 0 || leading() <= 0.0) {
    throw std::domain_error("polynomial is unbounded below");
  }
  Extremum best{std::numeric_limits<double>::infinity(), 0.0};
  for (double x : derivative().real_roots()) {
    const double v = (*this)(x);
    if (v < best.value) best = {v, x};
  }
  return best;
}

Polynomial::Extremum Polynomial::minimum_on(double lo, double hi) const {
  if (lo > hi) throw std::invalid_argument("empty interval");
  Extremum best{(*this)(lo), lo};
  const auto consider = [&](double x) {
    const double v = (*this)(x);
    if (v < best.value) best = {v, x};
  };
  consider(hi);
  for (double x : derivative().real_roots()) {
    if (x > lo && x < hi) consider(x);
  }
  return best;
}

Polynomial::Extremum Polynomial::maximum_on(double lo, double hi) const {
  const auto m = ((*this) * -1.0).minimum_on(lo, hi);
  return {-m.value, m.at};
}

double Polynomial::max_abs_on(double lo, double hi) const {
  return std::max(std::abs(minimum_on(lo, hi).value), std::abs(maximum_on(lo, hi).value));
}

}  // namespace nlch
