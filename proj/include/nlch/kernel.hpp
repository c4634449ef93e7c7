#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlch/convolution.hpp"
#include "nlch/spectral.hpp"

namespace nlch {

class KernelError : public std::invalid_argument {
 public:
  enum class Kind { bad_parameters, under_resolved, h1_violation, bad_table };
  KernelError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class KernelFamily { gaussian, mollifier, table };

KernelFamily parse_kernel_family(const std::string& name);
std::string to_string(KernelFamily family);

/// One sampled value of a tabulated kernel. `offset` has one entry per axis.
struct TableEntry {
  std::vector<double> offset;
  double value = 0.0;
};

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double width = 0.1;       // sigma (gaussian) or support radius (mollifier)
  double amplitude = 1.0;   // peak scale A; ignored when mass is set
  double mass = 0.0;        // if > 0, A is chosen so the integral over R^d equals mass
  std::vector<TableEntry> table;
};

/// Parse "dx,value" or "dx,dy,value" rows. Blank lines, '#' comments and a
/// non-numeric header line are skipped.
std::vector<TableEntry> read_kernel_table(const std::string& path);

struct H1Report {
  bool pass = false;
  bool symmetric = false;
  bool positive = false;
  double a0 = 0.0;
  double a_star = 0.0;
  double c_J = 0.0;
  double d_J = 0.0;
  double c_J_full = 0.0;
  double d_J_full = 0.0;
  double symmetry_residual = 0.0;
  std::vector<double> worst_point;  // where a attains its minimum
  std::string message;
};

/// Interaction kernel J restricted to a SpectralSpace, with the derived field
/// a = J*1 and the integral constants used by the estimates.
class Kernel {
 public:
  /// Samples J and computes the derived quantities. Performs only parameter and
  /// resolution checks; see build_kernel for the certified constructor.
  Kernel(const KernelSpec& spec, const SpectralSpace& space);

  const SpectralSpace& space() const { return space_; }
  KernelFamily family() const { return spec_.family; }
  const KernelSpec& spec() const { return spec_; }
  double amplitude() const { return amplitude_; }

  /// J at a point (analytic families), or the table lookup at the nearest offset.
  double value(std::span<const double> x) const;

  /// Samples on the difference grid, laid out by convolver().offsets().
  const std::vector<double>& samples() const { return conv_.samples(); }
  const LinearConvolver& convolver() const { return conv_; }

  /// Truncated convolution (J*f)(x) = int_Omega J(x-y) f(y) dy.
  Field convolve(const Field& f) const;
  /// Same quantity by the direct double sum.
  Field convolve_direct(const Field& f) const;

  const Field& a_field() const { return a_; }
  double c_J() const { return c_J_; }
  double d_J() const { return d_J_; }
  /// L1 norms over the whole support of J rather than the difference set of Omega.
  double c_J_full() const { return c_J_full_; }
  double d_J_full() const { return d_J_full_; }
  double a0() const { return a0_; }
  double a_star() const { return a_star_; }
  const std::vector<double>& a0_location() const { return a0_at_; }
  double symmetry_residual() const { return sym_residual_; }

 private:
  void compute_constants();

  KernelSpec spec_;
  SpectralSpace space_;
  double amplitude_ = 1.0;
  LinearConvolver conv_;
  Field a_;
  double c_J_ = 0.0;
  double d_J_ = 0.0;
  double c_J_full_ = 0.0;
  double d_J_full_ = 0.0;
  double a0_ = 0.0;
  double a_star_ = 0.0;
  std::vector<double> a0_at_;
  double sym_residual_ = 0.0;
};

H1Report certify_H1(const Kernel& k);

/// Construct and certify; throws KernelError(h1_violation) when the report fails.
Kernel build_kernel(const KernelSpec& spec, const SpectralSpace& space);

}  // namespace nlch
