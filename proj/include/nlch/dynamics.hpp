#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"
#include "nlch/spectral.hpp"

namespace nlch {

class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values appeared in the nonlinear term or the new state.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(double last_valid_time, const std::string& what)
      : std::runtime_error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

enum class Scheme { imex_stabilized, oracle_rk4 };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme s);

struct Params {
  double alpha = 0.1;
  double epsilon = 0.1;
  double delta = 0.1;
  double delta0 = 0.1;
  double dt = 1e-3;
  double t_end = 1.0;
  double stabilization = 0.0;
  /// Raise S to the Lipschitz bound of F' on the running range of phi.
  bool auto_stabilization = true;
  Scheme scheme = Scheme::imex_stabilized;
  double mean_cap = 1.0;
  double xi = 0.1;  // weight of the hatted terms in the Lyapunov functional

  /// Throws ParamError when a field is outside its admissible range.
  void validate() const;
  std::size_t steps() const;
};

/// beta = alpha / (1 + delta^2), the viscosity of the time-rescaled isothermal limit.
double rescaled_viscosity(double alpha, double delta);

struct State {
  double t = 0.0;
  Field phi;
  Field theta;
  double M0 = 0.0;
  double N0 = 0.0;

  /// State at time t with M0, N0 taken from the fields.
  static State make(const SpectralSpace& sp, Field phi, Field theta, double t = 0.0);
};

/// Throws ParamError if the means exceed the phase-space cap m.
void check_mean_cap(const SpectralSpace& sp, const State& s, double mean_cap);

struct ChemicalPotentialField {
  Field mu;
  Field rho;  // a phi + F'(phi)
  double mean_mu = 0.0;
};

/// Solves mu - alpha Lap mu = a phi - J*phi + F'(phi) - delta theta with
/// Neumann conditions, mode by mode.
ChemicalPotentialField recover_mu(const State& s, const Params& p, const Kernel& k, const Potential& pot);

/// Stabilized IMEX stepper. Holds the running stabilization constant, so a
/// single instance should advance a single trajectory.
class ImexStepper {
 public:
  ImexStepper(const Kernel& k, const Potential& pot, const Params& p);

  /// One step of size p.dt.
  State step(const State& s);

  /// Current stabilization constant S.
  double stabilization() const { return S_; }
  /// Number of times phi left the range used for S.
  std::size_t range_alarms() const { return alarms_; }

  /// Treat the equation as isothermal (delta = 0, theta frozen).
  void set_isothermal(bool on) { isothermal_ = on; }

  const Params& params() const { return p_; }

 private:
  void refresh_stabilization(const Field& phi);

  const Kernel* k_;
  const Potential* pot_;
  Params p_;
  double S_ = 0.0;
  double range_lo_ = 0.0;
  double range_hi_ = 0.0;
  std::size_t steps_ = 0;
  std::size_t alarms_ = 0;
  bool isothermal_ = false;
};

/// Single step with a fresh stepper (stabilization computed from s).
State step_imex(const State& s, const Params& p, const Kernel& k, const Potential& pot);

/// One step of phi_t = Lap(a phi - J*phi + F'(phi) + beta phi_t); theta is carried unchanged.
State rescaled_viscous_ch_step(const State& s, double beta, const Params& p, const Kernel& k,
                               const Potential& pot);

/// Integrates with the IMEX scheme up to p.t_end. The observer sees every
/// accepted step (previous, next) and may return false to stop early.
State integrate(const State& s0, const Params& p, const Kernel& k, const Potential& pot,
                const std::function<bool(const State&, const State&)>& observer = {});

/// Streaming steady-state test: rate ||dphi||/dt + ||dtheta||/dt below tol for
/// `window` consecutive steps.
class SteadyStateDetector {
 public:
  SteadyStateDetector(const SpectralSpace& sp, double tol, std::size_t window = 50)
      : sp_(&sp), tol_(tol), window_(window) {}

  /// Feed one step; returns true once the criterion has been met.
  bool update(const State& prev, const State& next, double dt);
  bool detected() const { return detected_at_.has_value(); }
  /// Step count (1-based) at which the window completed.
  std::optional<std::size_t> detected_at() const { return detected_at_; }
  double last_rate() const { return last_rate_; }

 private:
  const SpectralSpace* sp_;
  double tol_;
  std::size_t window_;
  std::size_t steps_ = 0;
  std::size_t run_ = 0;
  double last_rate_ = 0.0;
  std::optional<std::size_t> detected_at_;
};

struct SteadyState {
  std::size_t step = 0;
  State state;
  double energy = 0.0;
};

/// Scans a recorded trajectory (uniform dt). Requires more than 10 states.
std::optional<SteadyState> detect_steady_state(const SpectralSpace& sp, const std::vector<State>& traj,
                                               double dt, double tol,
                                               const std::function<double(const State&)>& energy = {});

}  // namespace nlch
