#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlch/kernel.hpp"
#include "nlch/polynomial.hpp"
#include "nlch/spectral.hpp"

namespace nlch {

/// Raised for potentials outside the supported class (even degree >= 4,
/// positive leading coefficient).
class PotentialError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Potential {
 public:
  /// Coefficients lowest degree first, all multiplied by `amplitude`.
  explicit Potential(std::vector<double> coeffs, double amplitude = 1.0);

  /// F(s) = (1 - s^2)^2.
  static Potential double_well(double amplitude = 1.0);

  const Polynomial& F() const { return f_; }
  const Polynomial& dF() const { return df_; }
  const Polynomial& d2F() const { return d2f_; }

  double F(double s) const { return f_(s); }
  double dF(double s) const { return df_(s); }
  double d2F(double s) const { return d2f_(s); }

  Field F(const Field& s) const;
  Field dF(const Field& s) const;
  Field d2F(const Field& s) const;

  /// Convex part of the split F(s) = G(s) - (a_star/2) s^2.
  Polynomial split_G(double a_star) const;

 private:
  Polynomial f_, df_, d2f_;
};

struct H2Result {
  bool holds = false;
  double min_d2F = 0.0;
  double min_d2F_at = 0.0;
  double c0 = 0.0;  // min F'' + a0
};

struct H3Result {
  bool holds = false;  // c1 exceeds half the full-support mass of J
  double c1 = 0.0;
  double c2 = 0.0;     // minimal: -min(F - c1 s^2)
  double min_at = 0.0;
  bool exceeds_half_cJ = false;
  bool exceeds_half_cJ_full = false;
};

struct H4Candidate {
  int num = 0;
  int den = 1;
  double p = 0.0;
  bool feasible = false;
  double c3 = 0.0;
  double c4 = 0.0;
  double tail_radius = 0.0;
  std::string reason;
};

struct H4Result {
  bool holds = false;
  double p = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  std::vector<H4Candidate> candidates;  // ascending in p

  /// Verdict for p = num/den, or null if not on the search grid.
  const H4Candidate* verdict(int num, int den) const;
};

struct H5Result {
  bool holds = false;
  double q = 0.0;
  double c5 = 0.0;
  double c6 = 0.0;
};

struct Certification {
  H2Result h2;
  H3Result h3;
  H4Result h4;
  H5Result h5;
  bool all_hold() const { return h2.holds && h3.holds && h4.holds && h5.holds; }
};

/// Constants witnessing (H2)-(H5) for the pair (F, J). When c1 is not given the
/// smallest integer above half the kernel mass is used.
Certification certify_H2_to_H5(const Potential& pot, const Kernel& k,
                               std::optional<double> c1 = std::nullopt);

/// Same, from the kernel quantities alone.
Certification certify_H2_to_H5(const Potential& pot, double a0, double c_J, double c_J_full,
                               std::optional<double> c1 = std::nullopt);

/// H4 analysis for a single exponent p = num/den.
H4Candidate certify_H4_at(const Potential& pot, int num, int den);

/// max |F''| over [lo, hi]: a Lipschitz constant of F' on that range.
double lipschitz_bound_on_range(const Potential& pot, double lo, double hi);

}  // namespace nlch
