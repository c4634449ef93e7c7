#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlch/config.hpp"
#include "nlch/diagnostics.hpp"
#include "nlch/dynamics.hpp"
#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"
#include "nlch/spectral.hpp"

namespace nlch {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_certification = 3,
  exit_blow_up = 4,
  exit_study_failed = 5,
};

class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StudyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  bool force = false;       // run even when a hypothesis is not certified
  int jobs = 1;             // parallel jobs for sweeps and pair runs
  std::ostream* log = nullptr;
  bool write_files = true;  // false keeps everything in memory
};

/// Grid, kernel, potential and certificates built from a config.
struct Setup {
  SpectralSpace space;
  Kernel kernel;
  Potential potential;
  H1Report h1;
  Certification cert;
};

/// Builds the setup; kernel errors surface as ConfigError, failed
/// certification as CertificationError unless `force` is set.
Setup build_setup(const RunConfig& cfg, bool force = false, std::ostream* log = nullptr);

/// Initial data for the configured preset. The mean of phi (and of theta for
/// the random presets) is imposed exactly on the zero mode.
State initial_state(const RunConfig& cfg, const SpectralSpace& sp);

struct SimulateReport {
  State final_state;
  std::size_t steps = 0;
  bool blew_up = false;
  double blow_up_time = 0.0;
  std::vector<LedgerRow> ledger;
  std::vector<double> times;     // every step
  std::vector<double> energies;  // E_eps at every step
  std::vector<double> theta_V;
  std::vector<double> mu_reg;
  std::vector<double> phit;
  std::vector<double> calV;
  double max_energy_increase = 0.0;
  double max_abs_residual = 0.0;
  double drift_phi = 0.0;
  double drift_theta = 0.0;
  std::size_t mean_mu_violations = 0;
  bool fixed_point = false;  // phi and theta never changed
  bool steady = false;
  std::optional<double> steady_time;
  DissipationFit fit;
  RegularityFlags flags;
  double stabilization = 0.0;
  std::size_t range_alarms = 0;
};

/// Integrates one trajectory and writes ledger.csv, snapshots and
/// summary.json under cfg.outputs.directory. A blow-up keeps the partial
/// outputs and is rethrown as BlowUpError.
SimulateReport run_simulate(const RunConfig& cfg, const RunOptions& opt = {});

struct SweepEntry {
  double value = 0.0;
  std::string directory;
  bool ok = false;
  std::string error;
  double sup_theta_V = 0.0;
  double sup_mu_reg = 0.0;
  double sup_phit = 0.0;
  double sup_calV = 0.0;
  double nu3 = 0.0;
  double final_energy = 0.0;
};

struct SweepReport {
  std::vector<SweepEntry> entries;
  double tau = 0.0;
  /// Log-log slope of sup ||theta||_V against the swept value (least squares).
  double theta_V_slope = 0.0;
  bool pass = false;
};

/// One simulate job per value (directory `<axis>_<index>`), run in parallel,
/// then aggregated into sweep.csv and sweep.json. For the epsilon axis the
/// sweep passes when the slope is at least -0.6.
SweepReport run_sweep(const RunConfig& cfg, const RunOptions& opt = {});

struct LimitEntry {
  double epsilon = 0.0;
  double gap = 0.0;
};

struct LimitReport {
  double delta = 0.0;
  double beta = 0.0;
  std::vector<LimitEntry> entries;
  std::size_t inversions = 0;
  bool pass = false;
};

/// Gaps must not increase along the list, except for at most one increase
/// of at most 5%.
bool gap_trend_ok(const std::vector<double>& gaps, std::size_t* inversions = nullptr);

/// Coupled runs for each epsilon against the isothermal equation with
/// viscosity beta = alpha / (1 + delta^2) stepped with dt / (1 + delta^2).
LimitReport run_limit_study(const RunConfig& cfg, const RunOptions& opt = {});

struct SamplingCheck {
  std::size_t samples = 0;
  std::size_t h2_violations = 0;
  std::size_t h3_violations = 0;
  std::size_t h4_violations = 0;
  std::size_t h5_violations = 0;
  std::size_t total() const { return h2_violations + h3_violations + h4_violations + h5_violations; }
};

/// Checks the certified inequalities at n equispaced points of [lo, hi].
SamplingCheck check_certificate_by_sampling(const Potential& pot, const Certification& cert, double a0,
                                            double lo, double hi, std::size_t n);

struct CertifyReport {
  H1Report h1;
  Certification cert;
  SamplingCheck sampling;
  bool pass = false;
};

CertifyReport run_certify(const RunConfig& cfg, const RunOptions& opt = {});

/// Advances a state by one step of the scheme under test.
using Stepper = std::function<State(const State&)>;
using StepperFactory = std::function<Stepper(const Kernel&, const Potential&, const Params&)>;

StepperFactory imex_stepper_factory();

struct OracleCheckReport {
  std::vector<double> dts;
  std::vector<double> gaps;    // L2 endpoint gap per dt, then at fine_dt
  std::vector<double> slopes;  // log2 ratios of consecutive gaps over dts
  double fine_gap = 0.0;
  double oracle_residual = 0.0;
  bool pass = false;
};

/// IMEX against the Galerkin oracle on an n = oracle.modes grid with the
/// stabilization switched off. Passes iff every slope is >= 0.9 and the
/// gap at fine_dt is <= 1e-4.
OracleCheckReport run_oracle_check(const RunConfig& cfg, const RunOptions& opt = {},
                                   const StepperFactory& factory = {});

struct ContDepPair {
  std::size_t index = 0;
  ContDepReport report;
  double log_margin_at_end = 0.0;  // ln(rhs / lhs) at t_end
};

struct ContDepStudy {
  std::vector<ContDepPair> pairs;
  std::size_t violations = 0;
  bool pass = false;
};

/// Random equal-mean pairs around the preset data, checked against the
/// continuous-dependence estimate. Writes contdep.csv and contdep.json.
ContDepStudy run_contdep(const RunConfig& cfg, const RunOptions& opt = {});

/// Plot data from a run directory: decimated ledger columns, sweep and gap
/// tables and a gnuplot script. Throws IoError when the directory has
/// nothing to plot; nothing is written in that case. Returns the files written.
std::vector<std::string> emit_plots(const std::string& run_dir, std::size_t stride);

}  // namespace nlch
