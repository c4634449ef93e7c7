#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nlch/dynamics.hpp"
#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"
#include "nlch/spectral.hpp"

namespace nlch {

/// E_eps = 1/4 int int J (phi(x)-phi(y))^2 + int F(phi) + eps/2 |theta|^2,
/// with the double integral written as 1/2 (a phi, phi) - 1/2 (J*phi, phi).
double energy_eps(const State& s, const Params& p, const Kernel& k, const Potential& pot);

/// Offset that keeps the Lyapunov functional nonnegative: 2 c2 |Omega|.
double lyapunov_offset(const Certification& cert, const SpectralSpace& sp);

/// E = xi |phi^|_{V'}^2 + xi alpha |phi^|^2 + |sqrt(a) phi|^2 + eps |theta^|^2
///     + 2 (F(phi), 1) - (J*phi, phi^) + C_F, hats denoting removal of the
/// initial means. Throws std::domain_error when the result is negative.
double lyapunov_E(const State& s, const Params& p, const Kernel& k, const Potential& pot, double xi,
                  double C_F);

/// |phi|_{V'}^2 + alpha |phi|^2 + eps |theta|^2.
double phase_norm2(const SpectralSpace& sp, const Field& phi, const Field& theta, const Params& p);

/// Certified constants consumed by the ledger.
struct LedgerConstants {
  double xi = 0.1;
  double C_F = 0.0;
  double c_J = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
};

LedgerConstants ledger_constants(const Certification& cert, const Kernel& k, const Params& p);

struct LedgerRow {
  std::size_t step = 0;
  double t = 0.0;
  double E_eps = 0.0;
  double E_lyap = 0.0;
  double residual = 0.0;
  double grad_mu2 = 0.0;
  double alpha_phit2 = 0.0;
  double grad_theta2 = 0.0;
  double phit_Vdual = 0.0;
  double theta_V = 0.0;
  double mu_reg = 0.0;  // alpha |Lap mu|^2 + |mu|_V^2
  double calV2 = 0.0;   // |phi|^2 + alpha |phi|_V^2 + eps |theta|_V^2
  double int_grad_mu2 = 0.0;
  double int_alpha_phit2 = 0.0;
  double int_grad_theta2 = 0.0;
  double mean_phi = 0.0;
  double mean_theta = 0.0;
  double mean_mu = 0.0;
  double mean_mu_bound = 0.0;
  double stabilization = 0.0;
};

/// Column names in CSV order.
const std::vector<std::string>& ledger_columns();
std::vector<double> ledger_values(const LedgerRow& r);

/// Builds ledger rows from a stream of consecutive states. The discrete phi_t
/// at step n is the forward difference to step n+1 (backward at the last
/// state); time integrals use the trapezoid rule over every step, while only
/// every `stride`-th row is kept.
class LedgerRecorder {
 public:
  LedgerRecorder(const Kernel& k, const Potential& pot, const Params& p, LedgerConstants c,
                 std::size_t stride = 1);

  void push(const State& s, double stabilization = 0.0);
  /// Completes the last pending row. Further pushes are rejected.
  void finish();

  const std::vector<LedgerRow>& rows() const { return rows_; }
  /// Per-step series, independent of the stride.
  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& energies() const { return e_; }
  const std::vector<double>& lyapunov() const { return lyap_; }
  double max_abs_residual() const { return max_residual_; }
  /// Largest step-to-step increase of E_eps (<= 0 when monotone).
  double max_energy_increase() const { return max_increase_; }
  std::size_t mean_mu_violations() const { return mean_mu_violations_; }
  double max_mean_drift_phi() const { return drift_phi_; }
  double max_mean_drift_theta() const { return drift_theta_; }
  const std::vector<double>& theta_V_series() const { return thetaV_; }
  const std::vector<double>& mu_reg_series() const { return mureg_; }
  const std::vector<double>& phit_series() const { return phit_; }
  const std::vector<double>& calV_series() const { return calV_; }

 private:
  LedgerRow make_row(const State& s, const Field& phit, double S);
  void record(const LedgerRow& r, bool keep);

  const Kernel* k_;
  const Potential* pot_;
  Params p_;
  LedgerConstants c_;
  std::size_t stride_;
  std::optional<State> pending_;
  double pending_S_ = 0.0;
  std::optional<Field> last_phit_;
  std::optional<LedgerRow> prev_row_;
  std::size_t count_ = 0;
  bool finished_ = false;
  double E0_ = 0.0;
  double M0_ = 0.0, N0_ = 0.0;
  std::vector<LedgerRow> rows_;
  std::vector<double> t_, e_, lyap_, thetaV_, mureg_, phit_, calV_;
  double max_residual_ = 0.0;
  double max_increase_ = -1e300;
  std::size_t mean_mu_violations_ = 0;
  double drift_phi_ = 0.0, drift_theta_ = 0.0;
};

/// Residual of the energy equality at the last recorded row.
double energy_equality_residual(const std::vector<LedgerRow>& rows);

struct DissipationFit {
  bool plateau_found = false;
  bool inconclusive = true;
  double nu3 = 0.0;
  double E_plateau = 0.0;
  std::size_t plateau_index = 0;
  std::size_t fit_begin = 0, fit_end = 0;  // sample range used by the fit
  /// Positive invariance of the level E_plateau (1 + 1e-6) once entered.
  bool invariant = false;
  double entry_time = 0.0;            // first time E <= E_plateau + entry_level
  double predicted_entry_time = 0.0;  // max(ln((E0 - E_plateau)/entry_level)/nu3, 0)
  double entry_level = 1.0;
  /// Largest relative excess of E over the fitted exponential envelope in the window.
  double gronwall_excess = 0.0;
  bool gronwall_ok = false;
  /// Largest rate for which the envelope anchored at t = 0 bounds E on the
  /// whole run; below nu3 when the decay starts late.
  double envelope_rate = 0.0;
};

DissipationFit fit_dissipation_rate(const std::vector<double>& t, const std::vector<double>& E,
                                    double entry_level = 1.0);

/// Decay rate of the energy gap for the system linearized about the constant
/// state M0 with delta = 0: twice the slowest nonzero relaxation rate.
double linearized_energy_decay_rate(const Kernel& k, const Potential& pot, const Params& p, double M0);

/// First constant of the continuous-dependence estimate.
double contdep_nu1(double c0, double c_J, double d_J, double alpha, double epsilon, double delta0);
/// Second constant, with the generic constant of the convolution bound taken as 1.
double contdep_nu2(double C_F, double volume, double delta0);

struct ContDepRow {
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;      // clamped to the largest finite double
  double log_rhs = 0.0;  // natural log, exact even when rhs overflows
};

struct ContDepReport {
  bool pass = true;
  double nu1 = 0.0;
  double nu2 = 0.0;
  double C_F = 0.0;
  std::optional<double> first_violation;
  double min_margin = 0.0;  // min rhs/lhs over rows with lhs > 0
  std::vector<ContDepRow> rows;
};

/// Compares two trajectories recorded at identical times (uniform dt).
ContDepReport continuous_dependence_check(const std::vector<State>& run1, const std::vector<State>& run2,
                                          const Params& p, const Potential& pot, const Kernel& k,
                                          double c0);

struct RegularityFlags {
  bool theta_V = false;
  bool mu_reg = false;
  bool phit = false;
  bool calV = false;
  bool any() const { return theta_V || mu_reg || phit || calV; }
};

/// Flags a monitor whose sup after t_ref = 0.1 t_end exceeds 10x its sup before.
RegularityFlags regularity_flags(const LedgerRecorder& rec, double t_end);

/// sup of the series over samples with t >= tau.
double sup_after(const std::vector<double>& t, const std::vector<double>& v, double tau);

}  // namespace nlch
