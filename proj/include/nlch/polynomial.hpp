#pragma once

#include <span>
#include <vector>

namespace nlch {

/// Real polynomial with coefficients stored lowest degree first.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coeffs);

  const std::vector<double>& coefficients() const { return c_; }
  /// Degree after trimming trailing zeros; the zero polynomial has degree -1.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  double leading() const { return c_.empty() ? 0.0 : c_.back(); }
  double coefficient(int k) const { return k < static_cast<int>(c_.size()) ? c_[k] : 0.0; }

  double operator()(double x) const {
    double r = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + *it;
    return r;
  }

  Polynomial derivative() const;
  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(double s) const;
  static Polynomial monomial(int degree, double coeff);

  /// Distinct real roots, ascending (companion-matrix eigenvalues polished by Newton).
  std::vector<double> real_roots() const;

  struct Extremum {
    double value;
    double at;
  };
  /// Global minimum over R. Requires even degree with positive leading coefficient
  /// (or degree <= 0).
  Extremum minimum() const;
  Extremum minimum_on(double lo, double hi) const;
  Extremum maximum_on(double lo, double hi) const;
  /// max |p| over [lo, hi].
  double max_abs_on(double lo, double hi) const;

 private:
  std::vector<double> c_;
};

}  // namespace nlch
