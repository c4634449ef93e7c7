#include "nlch/diagnostics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nlch {

namespace {

double sum_sq(const Field& f) {
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return s;
}

Field difference(const Field& a, const Field& b, double scale = 1.0) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (a[i] - b[i]) * scale;
  return Field(std::move(d));
}

Field shifted(const Field& a, double c) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - c;
  return Field(std::move(d));
}

double weighted_sum(std::span<const double> lam, std::span<const double> c, int power) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) s += std::pow(lam[k], power) * c[k] * c[k];
  return s;
}

}  // namespace

double energy_eps(const State& s, const Params& p, const Kernel& k, const Potential& pot) {
  const auto& sp = k.space();
  const Field conv = k.convolve(s.phi);
  const auto& a = k.a_field();
  double nonlocal = 0.0, bulk = 0.0, heat = 0.0;
  for (std::size_t i = 0; i < s.phi.size(); ++i) {
    const double phi = s.phi[i];
    nonlocal += a[i] * phi * phi - conv[i] * phi;
    bulk += pot.F(phi);
    heat += s.theta[i] * s.theta[i];
  }
  const double w = sp.cell_volume();
  return w * (0.5 * nonlocal + bulk + 0.5 * p.epsilon * heat);
}

double lyapunov_offset(const Certification& cert, const SpectralSpace& sp) {
  return 2.0 * std::max(cert.h3.c2, 0.0) * sp.volume();
}

double lyapunov_E(const State& s, const Params& p, const Kernel& k, const Potential& pot, double xi,
                  double C_F) {
  const auto& sp = k.space();
  const Field phi_hat = shifted(s.phi, s.M0);
  const Field theta_hat = shifted(s.theta, s.N0);
  const Field conv = k.convolve(s.phi);
  const auto& a = k.a_field();
  const double w = sp.cell_volume();

  const double vdual = sp.norm(phi_hat, NormKind::Vdual);
  double a_phi2 = 0.0, bulk = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < s.phi.size(); ++i) {
    a_phi2 += a[i] * s.phi[i] * s.phi[i];
    bulk += pot.F(s.phi[i]);
    cross += conv[i] * phi_hat[i];
  }
  const double E = xi * vdual * vdual + xi * p.alpha * w * sum_sq(phi_hat) + w * a_phi2 +
                   p.epsilon * w * sum_sq(theta_hat) + 2.0 * w * bulk - w * cross + C_F;
  if (E < 0.0) throw std::domain_error("Lyapunov functional is negative; the offset C_F is too small");
  return E;
}

double phase_norm2(const SpectralSpace& sp, const Field& phi, const Field& theta, const Params& p) {
  const double v = sp.norm(phi, NormKind::Vdual);
  return v * v + p.alpha * sp.cell_volume() * sum_sq(phi) + p.epsilon * sp.cell_volume() * sum_sq(theta);
}

LedgerConstants ledger_constants(const Certification& cert, const Kernel& k, const Params& p) {
  LedgerConstants c;
  c.xi = p.xi;
  c.C_F = lyapunov_offset(cert, k.space());
  c.c_J = k.c_J();
  c.c3 = cert.h4.c3;
  c.c4 = cert.h4.c4;
  return c;
}

const std::vector<std::string>& ledger_columns() {
  static const std::vector<std::string> cols = {
      "step",        "t",           "E_eps",        "E_lyap",          "residual",        "grad_mu2",
      "alpha_phit2", "grad_theta2", "phit_Vdual",   "theta_V",         "mu_reg",          "calV2",
      "int_grad_mu2", "int_alpha_phit2", "int_grad_theta2", "mean_phi", "mean_theta", "mean_mu",
      "mean_mu_bound", "stabilization"};
  return cols;
}

std::vector<double> ledger_values(const LedgerRow& r) {
  return {static_cast<double>(r.step), r.t, r.E_eps, r.E_lyap, r.residual, r.grad_mu2, r.alpha_phit2,
          r.grad_theta2, r.phit_Vdual, r.theta_V, r.mu_reg, r.calV2, r.int_grad_mu2, r.int_alpha_phit2,
          r.int_grad_theta2, r.mean_phi, r.mean_theta, r.mean_mu, r.mean_mu_bound, r.stabilization};
}

LedgerRecorder::LedgerRecorder(const Kernel& k, const Potential& pot, const Params& p, LedgerConstants c,
                               std::size_t stride)
    : k_(&k), pot_(&pot), p_(p), c_(c), stride_(std::max<std::size_t>(stride, 1)) {}

LedgerRow LedgerRecorder::make_row(const State& s, const Field& phit, double S) {
  const auto& sp = k_->space();
  const auto& lam = sp.eigenvalues();
  const double w = sp.cell_volume();
  const double vol = sp.volume();

  LedgerRow r;
  r.step = count_;
  r.t = s.t;
  r.stabilization = S;
  r.E_eps = energy_eps(s, p_, *k_, *pot_);
  r.E_lyap = lyapunov_E(s, p_, *k_, *pot_, c_.xi, c_.C_F);

  const auto cp = recover_mu(s, p_, *k_, *pot_);
  const auto mu_hat = sp.transform(cp.mu);
  const auto theta_hat = sp.transform(s.theta);
  const double phit2 = w * sum_sq(phit);
  r.grad_mu2 = weighted_sum(lam, mu_hat, 1);
  r.alpha_phit2 = p_.alpha * phit2;
  r.grad_theta2 = weighted_sum(lam, theta_hat, 1);
  r.phit_Vdual = sp.norm(phit, NormKind::Vdual);
  r.theta_V = sp.norm_from_coefficients(theta_hat, NormKind::V);
  const double mu_V = sp.norm_from_coefficients(mu_hat, NormKind::V);
  r.mu_reg = p_.alpha * weighted_sum(lam, mu_hat, 2) + mu_V * mu_V;
  const double phi_V = sp.norm(s.phi, NormKind::V);
  r.calV2 = w * sum_sq(s.phi) + p_.alpha * phi_V * phi_V + p_.epsilon * r.theta_V * r.theta_V;

  r.mean_phi = sp.mean(s.phi);
  r.mean_theta = sp.mean(s.theta);
  r.mean_mu = cp.mean_mu;
  double F_l1 = 0.0;
  for (double v : s.phi.values()) F_l1 += std::abs(pot_->F(v));
  F_l1 *= w;
  const double rv = std::sqrt(vol);
  r.mean_mu_bound = 2.0 * c_.c_J / rv * std::sqrt(w * sum_sq(s.phi)) + c_.c3 / vol * F_l1 + c_.c4 +
                    p_.alpha / rv * std::sqrt(phit2) + p_.delta0 / rv * std::sqrt(w * sum_sq(s.theta)) + 1e-8;

  if (prev_row_) {
    const double h = r.t - prev_row_->t;
    r.int_grad_mu2 = prev_row_->int_grad_mu2 + 0.5 * h * (prev_row_->grad_mu2 + r.grad_mu2);
    r.int_alpha_phit2 = prev_row_->int_alpha_phit2 + 0.5 * h * (prev_row_->alpha_phit2 + r.alpha_phit2);
    r.int_grad_theta2 = prev_row_->int_grad_theta2 + 0.5 * h * (prev_row_->grad_theta2 + r.grad_theta2);
  } else {
    E0_ = r.E_eps;
    M0_ = r.mean_phi;
    N0_ = r.mean_theta;
  }
  r.residual = r.E_eps + r.int_grad_mu2 + r.int_alpha_phit2 + r.int_grad_theta2 - E0_;
  return r;
}

void LedgerRecorder::record(const LedgerRow& r, bool keep) {
  if (prev_row_) max_increase_ = std::max(max_increase_, r.E_eps - prev_row_->E_eps);
  max_residual_ = std::max(max_residual_, std::abs(r.residual));
  if (std::abs(r.mean_mu) > r.mean_mu_bound) ++mean_mu_violations_;
  drift_phi_ = std::max(drift_phi_, std::abs(r.mean_phi - M0_));
  drift_theta_ = std::max(drift_theta_, std::abs(r.mean_theta - N0_));
  t_.push_back(r.t);
  e_.push_back(r.E_eps);
  lyap_.push_back(r.E_lyap);
  thetaV_.push_back(r.theta_V);
  mureg_.push_back(r.mu_reg);
  phit_.push_back(r.phit_Vdual);
  calV_.push_back(r.calV2);
  if (keep) rows_.push_back(r);
  prev_row_ = r;
  ++count_;
}

void LedgerRecorder::push(const State& s, double stabilization) {
  if (finished_) throw std::logic_error("ledger already finished");
  if (pending_) {
    Field phit = difference(s.phi, pending_->phi, 1.0 / (s.t - pending_->t));
    const LedgerRow r = make_row(*pending_, phit, pending_S_);
    last_phit_ = std::move(phit);
    record(r, count_ % stride_ == 0);
  }
  pending_ = s;
  pending_S_ = stabilization;
}

void LedgerRecorder::finish() {
  if (finished_) return;
  finished_ = true;
  if (!pending_) return;
  const Field phit = last_phit_ ? *last_phit_ : Field(std::vector<double>(pending_->phi.size(), 0.0));
  record(make_row(*pending_, phit, pending_S_), true);  // the final row is always kept
  pending_.reset();
}

double energy_equality_residual(const std::vector<LedgerRow>& rows) {
  return rows.empty() ? 0.0 : rows.back().residual;
}

DissipationFit fit_dissipation_rate(const std::vector<double>& t, const std::vector<double>& E,
                                    double entry_level) {
  DissipationFit fit;
  fit.entry_level = entry_level;
  const std::size_t n = E.size();
  if (n < 2 || t.size() != n) return fit;

  constexpr std::size_t kWindow = 100;
  const std::size_t span = std::min(kWindow, n - 1);
  for (std::size_t i = 0; i + span < n; ++i) {
    if (std::abs(E[i + span] - E[i]) <= 1e-8 * std::max(std::abs(E[i]), std::abs(E.front()))) {
      fit.plateau_found = true;
      fit.plateau_index = i;
      break;
    }
  }
  if (!fit.plateau_found) return fit;

  const double Ep = E.back();
  fit.E_plateau = Ep;
  const double g0 = E.front() - Ep;

  // Positive invariance of the plateau level.
  const double level = Ep + 1e-6 * std::abs(Ep);
  std::size_t enter = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (E[i] <= level) {
      enter = i;
      break;
    }
  }
  fit.invariant = enter < n;
  for (std::size_t i = enter; i < n; ++i) {
    if (E[i] > level) fit.invariant = false;
  }

  if (g0 <= 1e-12 * std::max(1.0, std::abs(Ep))) {
    fit.inconclusive = false;  // no transient
    fit.gronwall_ok = true;
    return fit;
  }

  const double upper = 0.5 * g0;
  const double lower = std::max(1e-6 * g0, 1e-9 * std::max(1.0, std::abs(Ep)));
  std::size_t b = n, e = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = E[i] - Ep;
    if (b == n && g <= upper) b = i;
    if (b != n && g >= lower) e = i + 1;
  }
  if (b == n || e <= b + 2) return fit;

  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t m = 0;
  for (std::size_t i = b; i < e; ++i) {
    const double g = E[i] - Ep;
    if (g <= 0.0) continue;
    const double y = std::log(g);
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
    ++m;
  }
  if (m < 3) return fit;
  const double denom = static_cast<double>(m) * stt - st * st;
  const double slope = (static_cast<double>(m) * sty - st * sy) / denom;
  fit.nu3 = -slope;
  fit.fit_begin = b;
  fit.fit_end = e;
  fit.inconclusive = !(fit.nu3 > 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    if (E[i] <= Ep + entry_level) {
      fit.entry_time = t[i] - t.front();
      break;
    }
  }
  if (fit.nu3 > 0.0) {
    fit.predicted_entry_time = std::max(std::log(g0 / entry_level) / fit.nu3, 0.0);
    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = b; i < e; ++i) {
      const double bound = std::exp(-fit.nu3 * (t[i] - t.front())) * g0 + Ep;
      excess = std::max(excess, (E[i] - bound) / std::abs(bound));
    }
    fit.gronwall_excess = excess;
    fit.gronwall_ok = excess <= 0.05;
  }
  double rate = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i) {
    const double g = E[i] - Ep;
    const double dt = t[i] - t.front();
    if (g > 0.0 && dt > 0.0) rate = std::min(rate, -std::log(std::min(g / g0, 1.0)) / dt);
  }
  fit.envelope_rate = std::isfinite(rate) ? rate : 0.0;
  return fit;
}

double linearized_energy_decay_rate(const Kernel& k, const Potential& pot, const Params& p, double M0) {
  const auto& sp = k.space();
  const auto& lam = sp.eigenvalues();
  const std::size_t N = sp.size();
  std::vector<std::size_t> modes;
  for (std::size_t j = 0; j < N; ++j) {
    if (lam[j] > 0.0) modes.push_back(j);
  }
  const auto m = static_cast<Eigen::Index>(modes.size());
  Eigen::MatrixXd A(m, m);
  const double fpp = pot.d2F(M0);
  const auto& a = k.a_field();
  for (Eigen::Index c = 0; c < m; ++c) {
    std::vector<double> e(N, 0.0);
    e[modes[c]] = 1.0;
    const Field psi(sp.inverse(e));
    const Field conv = k.convolve(psi);
    std::vector<double> q(N);
    for (std::size_t i = 0; i < N; ++i) q[i] = a[i] * psi[i] - conv[i] + fpp * psi[i];
    const auto qc = sp.transform(q);
    for (Eigen::Index r = 0; r < m; ++r) A(r, c) = qc[modes[r]];
  }
  Eigen::VectorXd bh(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double l = lam[modes[r]];
    bh(r) = std::sqrt(l / (1.0 + p.alpha * l));
  }
  Eigen::MatrixXd M = bh.asDiagonal() * A * bh.asDiagonal();
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return 2.0 * es.eigenvalues().minCoeff();
}

double contdep_nu1(double c0, double c_J, double d_J, double alpha, double epsilon, double delta0) {
  const double mid = (2.0 * c0 * (c0 / alpha - 1.0) + d_J * d_J + 2.0 * c_J * c_J / alpha + 1.0) / alpha;
  return std::max({1.0, mid, delta0 * delta0 / epsilon});
}

double contdep_nu2(double C_F, double volume, double delta0) {
  return std::max({C_F, volume, 0.5 * delta0 * volume, 1.0});
}

ContDepReport continuous_dependence_check(const std::vector<State>& run1, const std::vector<State>& run2,
                                          const Params& p, const Potential& pot, const Kernel& k,
                                          double c0) {
  if (run1.size() != run2.size() || run1.empty()) {
    throw std::invalid_argument("continuous dependence needs two runs of equal nonzero length");
  }
  const auto& sp = k.space();
  ContDepReport rep;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* run : {&run1, &run2}) {
    for (const auto& s : *run) {
      const auto v = s.phi.values();
      const auto [a, b] = std::minmax_element(v.begin(), v.end());
      lo = std::min(lo, *a);
      hi = std::max(hi, *b);
    }
  }
  rep.C_F = lipschitz_bound_on_range(pot, lo, hi) + k.a_star() + k.c_J();
  rep.nu1 = contdep_nu1(c0, k.c_J(), k.d_J(), p.alpha, p.epsilon, p.delta0);
  rep.nu2 = contdep_nu2(rep.C_F, sp.volume(), p.delta0);

  const std::size_t n = run1.size();
  const Field phi0 = difference(run1[0].phi, run2[0].phi);
  const Field theta0 = difference(run1[0].theta, run2[0].theta);
  const double dM = std::abs(sp.mean(run1[0].phi) - sp.mean(run2[0].phi));
  const double dN = std::abs(sp.mean(run1[0].theta) - sp.mean(run2[0].theta));
  const double base = phase_norm2(sp, phi0, theta0, p) + 2.0 * rep.nu2 / rep.nu1 * (dM + dN) * (dM + dN);

  const auto integrand = [&](std::size_t i) {
    const std::size_t j0 = i + 1 < n ? i : i - 1;
    const double h = run1[j0 + 1].t - run1[j0].t;
    const Field d1 = difference(run1[j0 + 1].phi, run1[j0].phi, 1.0 / h);
    const Field d2 = difference(run2[j0 + 1].phi, run2[j0].phi, 1.0 / h);
    const Field dbar = difference(d1, d2);
    const Field tbar = difference(run1[i].theta, run2[i].theta);
    const double vd = sp.norm(dbar, NormKind::Vdual);
    const double tv = sp.norm(tbar, NormKind::V);
    return 2.0 * vd * vd + p.alpha * sp.cell_volume() * sum_sq(dbar) + 2.0 * tv * tv;
  };

  double integral = 0.0;
  double prev = n > 1 ? integrand(0) : 0.0;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double cur = integrand(i);
      integral += 0.5 * (run1[i].t - run1[i - 1].t) * (prev + cur);
      prev = cur;
    }
    ContDepRow row;
    row.t = run1[i].t;
    const Field pb = difference(run1[i].phi, run2[i].phi);
    const Field tb = difference(run1[i].theta, run2[i].theta);
    row.lhs = phase_norm2(sp, pb, tb, p) + integral;
    const double elapsed = run1[i].t - run1[0].t;
    row.log_rhs = base > 0.0 ? rep.nu1 * elapsed + std::log(base) : -std::numeric_limits<double>::infinity();
    row.rhs = base > 0.0 ? std::min(std::exp(row.log_rhs), std::numeric_limits<double>::max()) : 0.0;
    const bool ok = row.lhs <= 0.0 || (base > 0.0 && std::log(row.lhs) <= row.log_rhs);
    if (!ok && !rep.first_violation) {
      rep.first_violation = row.t;
      rep.pass = false;
    }
    if (row.lhs > 0.0) rep.min_margin = std::min(rep.min_margin, std::exp(std::min(row.log_rhs - std::log(row.lhs), 700.0)));
    rep.rows.push_back(row);
  }
  return rep;
}

double sup_after(const std::vector<double>& t, const std::vector<double>& v, double tau) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size() && i < v.size(); ++i) {
    if (t[i] >= tau) s = std::max(s, v[i]);
  }
  return s;
}

RegularityFlags regularity_flags(const LedgerRecorder& rec, double t_end) {
  const auto& t = rec.times();
  const double t_ref = 0.1 * t_end;
  const auto flag = [&](const std::vector<double>& v) {
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] <= t_ref) before = std::max(before, v[i]);
      if (t[i] >= t_ref) after = std::max(after, v[i]);
    }
    return after > 10.0 * before;
  };
  RegularityFlags f;
  f.theta_V = flag(rec.theta_V_series());
  f.mu_reg = flag(rec.mu_reg_series());
  f.phit = flag(rec.phit_series());
  f.calV = flag(rec.calV_series());
  return f;
}

}  // namespace nlch
