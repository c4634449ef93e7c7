#include "nlch/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlch/kernels.hpp"

namespace nlch {

namespace {

constexpr std::size_t kStabilizationRefresh = 100;
constexpr double kRangeMargin = 0.5;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string blowup_message(double t) {
  std::ostringstream os;
  os << "non-finite values after t = " << t << "; reduce dt or raise the stabilization";
  return os.str();
}

// r = a phi - J*phi + F'(phi), the explicit part of the chemical potential.
std::vector<double> chemical_source(const Field& phi, const Kernel& k, const Potential& pot) {
  const Field conv = k.convolve(phi);
  std::vector<double> w(phi.size());
  kernels::chemical_source(k.a_field().values(), phi.values(), conv.values(), pot.dF(), w);
  return w;
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
  if (name == "imex_stabilized" || name == "imex") return Scheme::imex_stabilized;
  if (name == "oracle_rk4" || name == "oracle") return Scheme::oracle_rk4;
  throw ParamError("unknown scheme '" + name + "'");
}

std::string to_string(Scheme s) { return s == Scheme::imex_stabilized ? "imex_stabilized" : "oracle_rk4"; }

void Params::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw ParamError(what);
  };
  require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
  require(epsilon > 0.0 && epsilon <= 1.0, "epsilon must lie in (0, 1]");
  require(delta0 > 0.0 && std::isfinite(delta0), "delta0 must be positive");
  require(delta >= 0.0 && delta <= delta0, "delta must lie in [0, delta0]");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  require(t_end >= 0.0 && std::isfinite(t_end), "t_end must be nonnegative");
  require(stabilization >= 0.0 && std::isfinite(stabilization), "stabilization must be nonnegative");
  require(mean_cap >= 0.0, "mean_cap must be nonnegative");
  require(xi > 0.0 && xi < 1.0, "xi must lie in (0, 1)");
}

std::size_t Params::steps() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }

double rescaled_viscosity(double alpha, double delta) { return alpha / (1.0 + delta * delta); }

State State::make(const SpectralSpace& sp, Field phi, Field theta, double t) {
  sp.require_compatible(phi);
  sp.require_compatible(theta);
  State s;
  s.t = t;
  s.M0 = sp.mean(phi);
  s.N0 = sp.mean(theta);
  s.phi = std::move(phi);
  s.theta = std::move(theta);
  return s;
}

void check_mean_cap(const SpectralSpace& sp, const State& s, double mean_cap) {
  const double m = sp.mean(s.phi);
  const double n = sp.mean(s.theta);
  if (std::abs(m) > mean_cap || std::abs(n) > mean_cap) {
    std::ostringstream os;
    os << "initial means (" << m << ", " << n << ") exceed the phase-space cap " << mean_cap;
    throw ParamError(os.str());
  }
}

ChemicalPotentialField recover_mu(const State& s, const Params& p, const Kernel& k, const Potential& pot) {
  const auto& sp = k.space();
  const Field conv = k.convolve(s.phi);
  const auto& a = k.a_field();
  std::vector<double> r(s.phi.size()), rho(s.phi.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double fp = pot.dF(s.phi[i]);
    rho[i] = a[i] * s.phi[i] + fp;
    r[i] = rho[i] - conv[i] - p.delta * s.theta[i];
  }
  auto c = sp.transform(r);
  const auto& lam = sp.eigenvalues();
  for (std::size_t j = 0; j < c.size(); ++j) c[j] /= 1.0 + p.alpha * lam[j];
  ChemicalPotentialField out;
  out.mean_mu = c[0] / std::sqrt(sp.volume());
  out.mu = Field::from_coefficients(sp, std::move(c));
  out.rho = Field(std::move(rho));
  return out;
}

ImexStepper::ImexStepper(const Kernel& k, const Potential& pot, const Params& p) : k_(&k), pot_(&pot), p_(p) {
  S_ = p_.stabilization;
}

void ImexStepper::refresh_stabilization(const Field& phi) {
  const auto v = phi.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  range_lo_ = *lo - kRangeMargin;
  range_hi_ = *hi + kRangeMargin;
  S_ = std::max(p_.stabilization, lipschitz_bound_on_range(*pot_, range_lo_, range_hi_));
}

State ImexStepper::step(const State& s) {
  const auto& sp = k_->space();
  const auto& lam = sp.eigenvalues();
  const double delta = isothermal_ ? 0.0 : p_.delta;

  if (p_.auto_stabilization) {
    const auto v = s.phi.values();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const bool outside = steps_ > 0 && (*lo < range_lo_ || *hi > range_hi_);
    if (outside) ++alarms_;
    if (steps_ % kStabilizationRefresh == 0 || outside) refresh_stabilization(s.phi);
  }
  ++steps_;

  const auto w = chemical_source(s.phi, *k_, *pot_);
  if (!all_finite(w)) throw BlowUpError(s.t, blowup_message(s.t));
  const auto w_hat = sp.transform(w);
  const auto phi_hat = sp.transform(s.phi);
  const auto theta_hat = sp.transform(s.theta);

  std::vector<double> d(sp.size());
  kernels::imex_phi_increment(lam, w_hat, theta_hat, p_.dt, S_, p_.alpha, delta, d);
  d[0] = 0.0;

  State next;
  next.t = s.t + p_.dt;
  next.M0 = s.M0;
  next.N0 = s.N0;

  if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) {
    next.phi = s.phi;
  } else {
    std::vector<double> phi_new(phi_hat);
    for (std::size_t j = 1; j < phi_new.size(); ++j) phi_new[j] += d[j];
    next.phi = Field::from_coefficients(sp, std::move(phi_new));
  }

  if (isothermal_) {
    next.theta = s.theta;
  } else {
    std::vector<double> th(sp.size());
    kernels::imex_theta_update(lam, theta_hat, d, p_.epsilon, p_.dt, delta, th);
    th[0] = theta_hat[0];
    if (th == theta_hat) {
      next.theta = s.theta;
    } else {
      next.theta = Field::from_coefficients(sp, std::move(th));
    }
  }

  if (!all_finite(next.phi.values()) || !all_finite(next.theta.values())) {
    throw BlowUpError(s.t, blowup_message(s.t));
  }
  return next;
}

State step_imex(const State& s, const Params& p, const Kernel& k, const Potential& pot) {
  ImexStepper stepper(k, pot, p);
  return stepper.step(s);
}

State rescaled_viscous_ch_step(const State& s, double beta, const Params& p, const Kernel& k,
                               const Potential& pot) {
  Params q = p;
  q.alpha = beta;
  q.delta = 0.0;
  ImexStepper stepper(k, pot, q);
  stepper.set_isothermal(true);
  return stepper.step(s);
}

State integrate(const State& s0, const Params& p, const Kernel& k, const Potential& pot,
                const std::function<bool(const State&, const State&)>& observer) {
  ImexStepper stepper(k, pot, p);
  State s = s0;
  const std::size_t n = p.steps();
  for (std::size_t i = 0; i < n; ++i) {
    State next = stepper.step(s);
    next.t = s0.t + static_cast<double>(i + 1) * p.dt;
    const bool keep_going = !observer || observer(s, next);
    s = std::move(next);
    if (!keep_going) break;
  }
  return s;
}

bool SteadyStateDetector::update(const State& prev, const State& next, double dt) {
  ++steps_;
  std::vector<double> dphi(prev.phi.size()), dth(prev.theta.size());
  for (std::size_t i = 0; i < dphi.size(); ++i) {
    dphi[i] = next.phi[i] - prev.phi[i];
    dth[i] = next.theta[i] - prev.theta[i];
  }
  const double n1 = std::sqrt(sp_->inner(Field(dphi), Field(dphi)));
  const double n2 = std::sqrt(sp_->inner(Field(dth), Field(dth)));
  last_rate_ = (n1 + n2) / dt;
  run_ = last_rate_ < tol_ ? run_ + 1 : 0;
  if (!detected_at_ && run_ >= window_) detected_at_ = steps_;
  return detected_at_.has_value();
}

std::optional<SteadyState> detect_steady_state(const SpectralSpace& sp, const std::vector<State>& traj,
                                               double dt, double tol,
                                               const std::function<double(const State&)>& energy) {
  if (traj.size() <= 10) throw std::invalid_argument("steady-state detection needs more than 10 states");
  SteadyStateDetector det(sp, tol);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    if (det.update(traj[i - 1], traj[i], dt)) {
      SteadyState out;
      out.step = i;
      out.state = traj[i];
      if (energy) out.energy = energy(traj[i]);
      return out;
    }
  }
  return std::nullopt;
}

}  // namespace nlch
