#include "nlch/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "nlch/io.hpp"
#include "nlch/oracle.hpp"

namespace nlch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void note(const RunOptions& opt, const std::string& msg) {
  if (!opt.log) return;
#pragma omp critical(nlch_log)
  *opt.log << msg << '\n';
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string index_name(std::size_t i, int width = 8) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, i);
  return buf;
}

double l2_distance(const SpectralSpace& sp, const Field& a, const Field& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
  const Field f(std::move(d));
  return std::sqrt(sp.inner(f, f));
}

// Random grid values with the zero mode replaced so the mean is `mean`.
Field random_field(const SpectralSpace& sp, std::mt19937_64& rng, double mean, double amplitude) {
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  std::vector<double> v(sp.size());
  for (auto& x : v) x = u(rng);
  auto c = sp.transform(v);
  c[0] = mean * std::sqrt(sp.volume());
  return Field::from_coefficients(sp, std::move(c));
}

// Low-mode random field: modes with index at most 4 per axis.
Field smooth_field(const SpectralSpace& sp, std::mt19937_64& rng, double mean, double amplitude) {
  constexpr std::size_t kMaxMode = 4;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(sp.size(), 0.0);
  const double scale = amplitude * std::sqrt(sp.volume());
  if (sp.dims() == 1) {
    for (std::size_t k = 1; k <= std::min(kMaxMode, sp.n(0) - 1); ++k) c[k] = scale * u(rng) / k;
  } else {
    const std::size_t ny = sp.n(1);
    for (std::size_t kx = 0; kx <= std::min(kMaxMode, sp.n(0) - 1); ++kx) {
      for (std::size_t ky = 0; ky <= std::min(kMaxMode, ny - 1); ++ky) {
        if (kx + ky == 0) continue;
        c[kx * ny + ky] = scale * u(rng) / static_cast<double>(kx + ky);
      }
    }
  }
  c[0] = mean * std::sqrt(sp.volume());
  return Field::from_coefficients(sp, std::move(c));
}

Field load_field(const std::string& path, const SpectralSpace& sp) {
  const auto snap = read_snapshot(path);
  if (snap.n_modes != sp.n_modes() || snap.lengths != sp.lengths()) {
    throw ConfigError(path + ": snapshot grid does not match the configured grid");
  }
  return Field(snap.values);
}

SpectralSpace make_space(const RunConfig& cfg) {
  return SpectralSpace(cfg.spectral.lengths, cfg.spectral.n_modes);
}

Potential make_potential(const RunConfig& cfg) {
  try {
    return Potential(cfg.potential.coefficients, cfg.potential.amplitude);
  } catch (const PotentialError& e) {
    throw ConfigError(std::string("potential: ") + e.what());
  }
}

Kernel make_kernel(const RunConfig& cfg, const SpectralSpace& sp) {
  try {
    return build_kernel(kernel_spec(cfg), sp);
  } catch (const KernelError& e) {
    if (e.kind() == KernelError::Kind::h1_violation) throw CertificationError(e.what());
    throw ConfigError(std::string("kernel: ") + e.what());
  }
}

json certification_json(const H1Report& h1, const Certification& c) {
  json j;
  j["H1"] = {{"pass", h1.pass},         {"a0", h1.a0},
             {"a_star", h1.a_star},     {"c_J", h1.c_J},
             {"d_J", h1.d_J},           {"c_J_full", h1.c_J_full},
             {"d_J_full", h1.d_J_full}, {"symmetry_residual", h1.symmetry_residual},
             {"message", h1.message}};
  j["H2"] = {{"holds", c.h2.holds}, {"min_d2F", c.h2.min_d2F}, {"min_d2F_at", c.h2.min_d2F_at}, {"c0", c.h2.c0}};
  j["H3"] = {{"holds", c.h3.holds}, {"c1", c.h3.c1}, {"c2", c.h3.c2}};
  json cands = json::array();
  for (const auto& h : c.h4.candidates) {
    cands.push_back({{"p", std::to_string(h.num) + "/" + std::to_string(h.den)},
                     {"feasible", h.feasible},
                     {"c3", h.c3},
                     {"c4", h.c4},
                     {"reason", h.reason}});
  }
  j["H4"] = {{"holds", c.h4.holds}, {"p", c.h4.p}, {"c3", c.h4.c3}, {"c4", c.h4.c4}, {"candidates", cands}};
  j["H5"] = {{"holds", c.h5.holds}, {"q", c.h5.q}, {"c5", c.h5.c5}, {"c6", c.h5.c6}};
  j["all_hold"] = h1.pass && c.all_hold();
  return j;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

}  // namespace

Setup build_setup(const RunConfig& cfg, bool force, std::ostream* log) {
  validate(cfg);
  auto sp = make_space(cfg);
  auto pot = make_potential(cfg);
  auto k = make_kernel(cfg, sp);
  auto h1 = certify_H1(k);
  std::optional<double> c1;
  if (cfg.potential.c1 > 0.0) c1 = cfg.potential.c1;
  auto cert = certify_H2_to_H5(pot, k, c1);
  if (!h1.pass || !cert.all_hold()) {
    std::string which;
    if (!h1.pass) which += " H1";
    if (!cert.h2.holds) which += " H2";
    if (!cert.h3.holds) which += " H3";
    if (!cert.h4.holds) which += " H4";
    if (!cert.h5.holds) which += " H5";
    if (!force) throw CertificationError("hypotheses not certified:" + which);
    if (log) *log << "warning: running with uncertified hypotheses:" << which << '\n';
  }
  return Setup{std::move(sp), std::move(k), std::move(pot), std::move(h1), std::move(cert)};
}

State initial_state(const RunConfig& cfg, const SpectralSpace& sp) {
  const auto& in = cfg.initial;
  std::mt19937_64 rng(in.seed);
  Field phi, theta;
  if (in.preset == "constant") {
    phi = Field::constant(sp, in.mean);
    theta = Field::constant(sp, in.theta_mean);
  } else if (in.preset == "quench1d" || in.preset == "quench2d") {
    const int want = in.preset == "quench1d" ? 1 : 2;
    if (sp.dims() != want) throw ConfigError(in.preset + " needs spectral.dims = " + std::to_string(want));
    phi = random_field(sp, rng, in.mean, in.amplitude);
    theta = Field::constant(sp, in.theta_mean);
  } else if (in.preset == "roughtheta") {
    phi = random_field(sp, rng, in.mean, in.amplitude);
    theta = random_field(sp, rng, in.theta_mean, in.theta_amplitude);
  } else if (in.preset == "pair") {
    phi = smooth_field(sp, rng, in.mean, in.amplitude);
    theta = smooth_field(sp, rng, in.theta_mean, in.theta_amplitude);
  } else if (in.preset == "file") {
    phi = load_field(in.phi_file, sp);
    theta = load_field(in.theta_file, sp);
  } else {
    throw ConfigError("unknown initial.preset '" + in.preset + "'");
  }
  State s = State::make(sp, std::move(phi), std::move(theta));
  try {
    check_mean_cap(sp, s, cfg.params.mean_cap);
  } catch (const ParamError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

SimulateReport run_simulate(const RunConfig& cfg, const RunOptions& opt) {
  const Setup setup = build_setup(cfg, opt.force, opt.log);
  const auto& sp = setup.space;
  const auto& k = setup.kernel;
  const auto& pot = setup.potential;
  const Params& p = cfg.params;
  const State s0 = initial_state(cfg, sp);

  const bool oracle = p.scheme == Scheme::oracle_rk4;
  std::optional<GalerkinOracle> orc;
  if (oracle) {
    for (auto n : sp.n_modes()) {
      if (n > GalerkinOracle::kMaxModes) throw ConfigError("the oracle scheme supports at most 16 modes per axis");
    }
    orc.emplace(k, pot, p, OracleOptions{sp.n(0), cfg.oracle.dealias});
  }

  fs::path dir;
  if (opt.write_files) {
    dir = prepare_dir(cfg.outputs.directory);
    fs::create_directories(dir / "snapshots");
  }
  const auto snapshot = [&](const State& s, std::size_t step) {
    if (!opt.write_files) return;
    write_snapshot((dir / "snapshots" / ("phi_" + index_name(step) + ".bin")).string(), sp, s.phi, s.t, "phi");
    write_snapshot((dir / "snapshots" / ("theta_" + index_name(step) + ".bin")).string(), sp, s.theta, s.t,
                   "theta");
  };

  const LedgerConstants consts = ledger_constants(setup.cert, k, p);
  LedgerRecorder rec(k, pot, p, consts, cfg.outputs.ledger_stride);
  SteadyStateDetector steady(sp, cfg.steady_tol);
  ImexStepper stepper(k, pot, p);

  SimulateReport rep;
  rep.fixed_point = true;
  State s = s0;
  std::optional<GalerkinOracle::Snapshot> osnap;
  if (oracle) osnap = orc->initial(s0);
  snapshot(s, 0);

  const std::size_t n = p.steps();
  const auto current_S = [&] { return oracle ? 0.0 : stepper.stabilization(); };
  try {
    for (std::size_t i = 0; i < n; ++i) {
      State next;
      if (oracle) {
        orc->step(*osnap, p.dt);
        next = orc->to_state(*osnap);
        next.M0 = s0.M0;
        next.N0 = s0.N0;
        if (!std::isfinite(osnap->energy)) throw BlowUpError(s.t, "oracle state is not finite");
      } else {
        next = stepper.step(s);
      }
      next.t = s0.t + static_cast<double>(i + 1) * p.dt;
      // S used for the step from s is known only after stepping.
      rec.push(s, current_S());
      if (rep.fixed_point && (next.phi.vector() != s.phi.vector() || next.theta.vector() != s.theta.vector())) {
        rep.fixed_point = false;
      }
      if (steady.update(s, next, p.dt) && !rep.steady_time) rep.steady_time = next.t;
      s = std::move(next);
      rep.steps = i + 1;
      if ((i + 1) % cfg.outputs.snapshot_stride == 0) snapshot(s, i + 1);
    }
  } catch (const BlowUpError& e) {
    rep.blew_up = true;
    rep.blow_up_time = e.last_valid_time();
    note(opt, std::string("blow-up: ") + e.what());
  }
  rec.push(s, current_S());
  rec.finish();
  if (!rep.blew_up && n % cfg.outputs.snapshot_stride != 0) snapshot(s, n);

  rep.final_state = s;
  rep.ledger = rec.rows();
  rep.times = rec.times();
  rep.energies = rec.energies();
  rep.theta_V = rec.theta_V_series();
  rep.mu_reg = rec.mu_reg_series();
  rep.phit = rec.phit_series();
  rep.calV = rec.calV_series();
  rep.max_energy_increase = rec.max_energy_increase();
  rep.max_abs_residual = rec.max_abs_residual();
  rep.drift_phi = rec.max_mean_drift_phi();
  rep.drift_theta = rec.max_mean_drift_theta();
  rep.mean_mu_violations = rec.mean_mu_violations();
  rep.steady = rep.steady_time.has_value();
  if (rep.energies.size() > 200) rep.fit = fit_dissipation_rate(rep.times, rep.energies);
  rep.flags = regularity_flags(rec, p.t_end);
  rep.stabilization = current_S();
  rep.range_alarms = stepper.range_alarms();

  if (opt.write_files) {
    std::map<std::string, std::string> meta = {
        {"scheme", to_string(p.scheme)},
        {"dt", format_double(p.dt)},
        {"alpha", format_double(p.alpha)},
        {"epsilon", format_double(p.epsilon)},
        {"delta", format_double(p.delta)},
        {"delta0", format_double(p.delta0)},
        {"xi", format_double(consts.xi)},
        {"C_F", format_double(consts.C_F)},
        {"c_J", format_double(consts.c_J)},
        {"c3", format_double(consts.c3)},
        {"c4", format_double(consts.c4)},
        {"seed", std::to_string(cfg.initial.seed)},
        {"preset", cfg.initial.preset},
    };
    write_ledger((dir / "ledger.csv").string(), rep.ledger, meta);

    json sum;
    sum["steps"] = rep.steps;
    sum["t_final"] = s.t;
    sum["blow_up"] = rep.blew_up;
    if (rep.blew_up) sum["last_valid_time"] = rep.blow_up_time;
    sum["energy_initial"] = rep.energies.empty() ? 0.0 : rep.energies.front();
    sum["energy_final"] = rep.energies.empty() ? 0.0 : rep.energies.back();
    sum["lyapunov_final"] = rec.lyapunov().empty() ? 0.0 : rec.lyapunov().back();
    sum["max_energy_increase"] = rep.max_energy_increase;
    sum["max_abs_residual"] = rep.max_abs_residual;
    sum["drift_mean_phi"] = rep.drift_phi;
    sum["drift_mean_theta"] = rep.drift_theta;
    sum["mean_mu_violations"] = rep.mean_mu_violations;
    sum["fixed_point"] = rep.fixed_point;
    sum["steady_state"] = rep.steady;
    if (rep.steady_time) sum["steady_time"] = *rep.steady_time;
    sum["stabilization"] = rep.stabilization;
    sum["range_alarms"] = rep.range_alarms;
    sum["dissipation"] = {{"plateau_found", rep.fit.plateau_found},
                          {"inconclusive", rep.fit.inconclusive},
                          {"nu3", rep.fit.nu3},
                          {"E_plateau", rep.fit.E_plateau},
                          {"invariant", rep.fit.invariant},
                          {"entry_time", rep.fit.entry_time},
                          {"predicted_entry_time", rep.fit.predicted_entry_time},
                          {"gronwall_excess", rep.fit.gronwall_excess},
                          {"envelope_rate", rep.fit.envelope_rate}};
    sum["regularity_flags"] = {{"theta_V", rep.flags.theta_V},
                               {"mu_reg", rep.flags.mu_reg},
                               {"phit", rep.flags.phit},
                               {"calV", rep.flags.calV}};
    sum["certification"] = certification_json(setup.h1, setup.cert);
    write_json(dir / "summary.json", sum);
  }
  if (rep.blew_up) throw BlowUpError(rep.blow_up_time, "non-finite state after t = " + format_double(rep.blow_up_time));
  return rep;
}

SweepReport run_sweep(const RunConfig& cfg, const RunOptions& opt) {
  validate(cfg);
  SweepReport rep;
  rep.tau = cfg.sweep.tau > 0.0 ? cfg.sweep.tau : 0.1 * cfg.params.t_end;
  const auto& values = cfg.sweep.values;
  rep.entries.resize(values.size());
  const fs::path root(cfg.outputs.directory);
  if (opt.write_files) fs::create_directories(root);

  RunOptions job_opt = opt;
  const int jobs = std::max(1, opt.jobs);
  const auto count = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    auto& e = rep.entries[static_cast<std::size_t>(i)];
    e.value = values[static_cast<std::size_t>(i)];
    RunConfig c = cfg;
    c.scenario = "simulate";
    if (cfg.sweep.axis == "alpha") c.params.alpha = e.value;
    if (cfg.sweep.axis == "epsilon") c.params.epsilon = e.value;
    if (cfg.sweep.axis == "delta") c.params.delta = e.value;
    e.directory = (root / (cfg.sweep.axis + "_" + index_name(static_cast<std::size_t>(i), 2))).string();
    c.outputs.directory = e.directory;
    try {
      const auto r = run_simulate(c, job_opt);
      e.sup_theta_V = sup_after(r.times, r.theta_V, rep.tau);
      e.sup_mu_reg = sup_after(r.times, r.mu_reg, rep.tau);
      e.sup_phit = sup_after(r.times, r.phit, rep.tau);
      e.sup_calV = sup_after(r.times, r.calV, rep.tau);
      e.nu3 = r.fit.nu3;
      e.final_energy = r.energies.empty() ? 0.0 : r.energies.back();
      e.ok = true;
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
  }

  std::vector<double> lx, ly;
  bool all_ok = true;
  for (const auto& e : rep.entries) {
    all_ok = all_ok && e.ok;
    if (e.ok && e.value > 0.0 && e.sup_theta_V > 0.0) {
      lx.push_back(std::log(e.value));
      ly.push_back(std::log(e.sup_theta_V));
    }
  }
  rep.theta_V_slope = lx.size() >= 2 ? least_squares_slope(lx, ly) : 0.0;
  rep.pass = all_ok && (cfg.sweep.axis != "epsilon" || (lx.size() >= 2 && rep.theta_V_slope >= -0.6));

  if (opt.write_files) {
    std::vector<std::vector<double>> rows;
    for (const auto& e : rep.entries) {
      rows.push_back({e.value, e.sup_theta_V, e.sup_mu_reg, e.sup_phit, e.sup_calV, e.nu3, e.final_energy,
                      e.ok ? 1.0 : 0.0});
    }
    write_table((root / "sweep.csv").string(),
                {cfg.sweep.axis, "sup_theta_V", "sup_mu_reg", "sup_phit_Vdual", "sup_calV2", "nu3", "E_final", "ok"},
                rows, "sup over t >= " + format_double(rep.tau));
    json j;
    j["axis"] = cfg.sweep.axis;
    j["tau"] = rep.tau;
    j["theta_V_slope"] = rep.theta_V_slope;
    j["pass"] = rep.pass;
    for (const auto& e : rep.entries) {
      j["jobs"].push_back({{"value", e.value}, {"directory", e.directory}, {"ok", e.ok}, {"error", e.error}});
    }
    write_json(root / "sweep.json", j);
  }
  return rep;
}

bool gap_trend_ok(const std::vector<double>& gaps, std::size_t* inversions) {
  std::size_t inv = 0;
  bool ok = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    if (gaps[i] > gaps[i - 1]) {
      ++inv;
      if (gaps[i] > 1.05 * gaps[i - 1]) ok = false;
    }
  }
  if (inversions) *inversions = inv;
  return ok && inv <= 1;
}

LimitReport run_limit_study(const RunConfig& cfg, const RunOptions& opt) {
  RunConfig base = cfg;
  base.params.delta0 = std::max(base.params.delta0, cfg.limit.delta);
  base.params.delta = cfg.limit.delta;
  const Setup setup = build_setup(base, opt.force, opt.log);
  const auto& sp = setup.space;
  const State s0 = initial_state(base, sp);

  LimitReport rep;
  rep.delta = cfg.limit.delta;
  rep.beta = rescaled_viscosity(base.params.alpha, rep.delta);
  const double stretch = 1.0 + rep.delta * rep.delta;

  // Isothermal reference on the rescaled clock s = t / (1 + delta^2).
  Params q = base.params;
  q.alpha = rep.beta;
  q.delta = 0.0;
  q.dt = base.params.dt / stretch;
  ImexStepper ch(setup.kernel, setup.potential, q);
  ch.set_isothermal(true);
  std::vector<Field> ref{s0.phi};
  State r = s0;
  const std::size_t n = base.params.steps();
  for (std::size_t i = 0; i < n; ++i) {
    r = ch.step(r);
    ref.push_back(r.phi);
  }

  const auto& eps = cfg.limit.epsilons;
  rep.entries.resize(eps.size());
  const auto count = static_cast<std::ptrdiff_t>(eps.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, opt.jobs))
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    Params p = base.params;
    p.epsilon = eps[static_cast<std::size_t>(j)];
    ImexStepper st(setup.kernel, setup.potential, p);
    State s = s0;
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s = st.step(s);
      gap = std::max(gap, l2_distance(sp, s.phi, ref[i + 1]));
    }
    rep.entries[static_cast<std::size_t>(j)] = {p.epsilon, gap};
  }

  std::vector<double> gaps;
  for (const auto& e : rep.entries) gaps.push_back(e.gap);
  rep.pass = gap_trend_ok(gaps, &rep.inversions);

  if (opt.write_files) {
    const auto dir = prepare_dir(cfg.outputs.directory);
    std::vector<std::vector<double>> rows;
    for (const auto& e : rep.entries) rows.push_back({e.epsilon, e.gap, rep.beta});
    write_table((dir / "limit.csv").string(), {"epsilon", "gap", "beta"}, rows,
                "delta = " + format_double(rep.delta) + ", gap = max_t |phi_eps(t) - phi_CH(t/(1+delta^2))|");
    json j = {{"delta", rep.delta}, {"beta", rep.beta}, {"inversions", rep.inversions}, {"pass", rep.pass}};
    write_json(dir / "limit.json", j);
  }
  std::ostringstream table;
  table << "epsilon gap\n";
  for (const auto& e : rep.entries) table << format_double(e.epsilon) << ' ' << format_double(e.gap) << '\n';
  note(opt, table.str());
  return rep;
}

SamplingCheck check_certificate_by_sampling(const Potential& pot, const Certification& cert, double a0,
                                            double lo, double hi, std::size_t n) {
  SamplingCheck out;
  out.samples = n;
  const auto tol = [](double scale) { return 1e-10 * std::max(1.0, std::abs(scale)); };
  for (std::size_t i = 0; i < n; ++i) {
    const double s = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    const double F = pot.F(s), dF = pot.dF(s), d2F = pot.d2F(s);
    if (cert.h2.holds && d2F + a0 < cert.h2.c0 - tol(d2F)) ++out.h2_violations;
    if (cert.h3.holds && F < cert.h3.c1 * s * s - cert.h3.c2 - tol(F)) ++out.h3_violations;
    if (cert.h4.holds) {
      const double lhs = std::pow(std::abs(dF), cert.h4.p);
      if (lhs > cert.h4.c3 * std::abs(F) + cert.h4.c4 + tol(lhs)) ++out.h4_violations;
    }
    if (cert.h5.holds) {
      const double rhs = cert.h5.c5 * std::pow(std::abs(s), 2.0 * cert.h5.q) - cert.h5.c6;
      if (d2F + a0 < rhs - tol(rhs)) ++out.h5_violations;
    }
  }
  return out;
}

CertifyReport run_certify(const RunConfig& cfg, const RunOptions& opt) {
  validate(cfg);
  const auto sp = make_space(cfg);
  const auto pot = make_potential(cfg);
  CertifyReport rep;
  std::optional<Kernel> k;
  try {
    k.emplace(kernel_spec(cfg), sp);
  } catch (const KernelError& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  rep.h1 = certify_H1(*k);
  std::optional<double> c1;
  if (cfg.potential.c1 > 0.0) c1 = cfg.potential.c1;
  rep.cert = certify_H2_to_H5(pot, *k, c1);
  rep.sampling = check_certificate_by_sampling(pot, rep.cert, k->a0(), -10.0, 10.0, 1000001);
  rep.pass = rep.h1.pass && rep.cert.all_hold() && rep.sampling.total() == 0;
  if (opt.write_files) {
    const auto dir = prepare_dir(cfg.outputs.directory);
    json j = certification_json(rep.h1, rep.cert);
    j["sampling"] = {{"samples", rep.sampling.samples},
                     {"range", {-10.0, 10.0}},
                     {"H2", rep.sampling.h2_violations},
                     {"H3", rep.sampling.h3_violations},
                     {"H4", rep.sampling.h4_violations},
                     {"H5", rep.sampling.h5_violations}};
    j["pass"] = rep.pass;
    write_json(dir / "certify.json", j);
  }
  return rep;
}

StepperFactory imex_stepper_factory() {
  return [](const Kernel& k, const Potential& pot, const Params& p) -> Stepper {
    auto st = std::make_shared<ImexStepper>(k, pot, p);
    return [st](const State& s) { return st->step(s); };
  };
}

OracleCheckReport run_oracle_check(const RunConfig& cfg, const RunOptions& opt, const StepperFactory& factory) {
  RunConfig c = cfg;
  c.spectral.n_modes.assign(static_cast<std::size_t>(cfg.spectral.dims), cfg.oracle.modes);
  c.params.stabilization = 0.0;
  c.params.auto_stabilization = false;
  c.params.t_end = cfg.oracle.t_end;
  validate(cfg);
  const auto sp = make_space(c);
  const auto pot = make_potential(c);
  const auto k = make_kernel(c, sp);
  const State s0 = initial_state(c, sp);

  OracleCheckReport rep;
  const GalerkinOracle orc(k, pot, c.params, OracleOptions{cfg.oracle.modes, cfg.oracle.dealias});
  const auto snap = orc.run(s0, cfg.oracle.reference_dt, cfg.oracle.t_end);
  rep.oracle_residual = snap.residual;
  const State ref = orc.to_state(snap);

  const auto make = factory ? factory : imex_stepper_factory();
  const auto run_at = [&](double dt) {
    Params p = c.params;
    p.dt = dt;
    auto step = make(k, pot, p);
    State s = s0;
    for (std::size_t i = 0; i < p.steps(); ++i) s = step(s);
    return l2_distance(sp, s.phi, ref.phi);
  };
  rep.dts = cfg.oracle.dts;
  for (double dt : rep.dts) rep.gaps.push_back(run_at(dt));
  for (std::size_t i = 1; i < rep.gaps.size(); ++i) {
    const double ratio = rep.gaps[i - 1] / rep.gaps[i];
    rep.slopes.push_back(std::log(ratio) / std::log(rep.dts[i - 1] / rep.dts[i]));
  }
  rep.fine_gap = run_at(cfg.oracle.fine_dt);
  const double kTiny = 1e-14;
  const bool exact = std::all_of(rep.gaps.begin(), rep.gaps.end(), [&](double g) { return g <= kTiny; });
  rep.pass = rep.fine_gap <= 1e-4 &&
             (exact || std::all_of(rep.slopes.begin(), rep.slopes.end(), [](double s) { return s >= 0.9; }));

  if (opt.write_files) {
    const auto dir = prepare_dir(cfg.outputs.directory);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < rep.dts.size(); ++i) {
      rows.push_back({rep.dts[i], rep.gaps[i], i ? rep.slopes[i - 1] : 0.0});
    }
    rows.push_back({cfg.oracle.fine_dt, rep.fine_gap, 0.0});
    write_table((dir / "oracle_check.csv").string(), {"dt", "gap", "slope"}, rows,
                "oracle residual " + format_double(rep.oracle_residual));
    write_json(dir / "oracle_check.json",
               {{"fine_gap", rep.fine_gap}, {"oracle_residual", rep.oracle_residual}, {"pass", rep.pass}});
  }
  return rep;
}

ContDepStudy run_contdep(const RunConfig& cfg, const RunOptions& opt) {
  const Setup setup = build_setup(cfg, opt.force, opt.log);
  const auto& sp = setup.space;
  Params p = cfg.params;
  p.t_end = cfg.contdep.t_end;

  ContDepStudy study;
  study.pairs.resize(cfg.contdep.pairs);
  const auto count = static_cast<std::ptrdiff_t>(cfg.contdep.pairs);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, opt.jobs))
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    RunConfig c = cfg;
    c.initial.seed = cfg.initial.seed + idx;
    const State a0 = initial_state(c, sp);

    // Zero-mean perturbation of the given L2 size in both components.
    std::mt19937_64 rng(c.initial.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto bump = [&](const Field& f) {
      Field d = random_field(sp, rng, 0.0, 1.0);
      const double norm = std::sqrt(sp.inner(d, d));
      auto cf = sp.transform(f);
      const auto cd = sp.transform(d);
      for (std::size_t m = 1; m < cf.size(); ++m) cf[m] += cfg.contdep.perturbation * cd[m] / norm;
      return Field::from_coefficients(sp, std::move(cf));
    };
    const State b0 = State::make(sp, bump(a0.phi), bump(a0.theta));

    const auto trajectory = [&](const State& s0) {
      std::vector<State> traj{s0};
      integrate(s0, p, setup.kernel, setup.potential, [&](const State&, const State& next) {
        traj.push_back(next);
        return true;
      });
      return traj;
    };
    const auto run1 = trajectory(a0);
    const auto run2 = trajectory(b0);
    auto& out = study.pairs[idx];
    out.index = idx;
    out.report = continuous_dependence_check(run1, run2, p, setup.potential, setup.kernel, setup.cert.h2.c0);
    const auto& last = out.report.rows.back();
    out.log_margin_at_end =
        last.lhs > 0.0 ? last.log_rhs - std::log(last.lhs) : std::numeric_limits<double>::infinity();
  }

  for (const auto& pr : study.pairs) study.violations += pr.report.pass ? 0 : 1;
  study.pass = study.violations == 0;

  if (opt.write_files) {
    const auto dir = prepare_dir(cfg.outputs.directory);
    std::vector<std::vector<double>> rows;
    for (const auto& pr : study.pairs) {
      for (const auto& r : pr.report.rows) {
        rows.push_back({static_cast<double>(pr.index), r.t, r.lhs, r.rhs, r.log_rhs});
      }
    }
    write_table((dir / "contdep.csv").string(), {"pair", "t", "lhs", "rhs", "log_rhs"}, rows,
                "lhs <= rhs must hold at every t");
    json j;
    j["pass"] = study.pass;
    j["violations"] = study.violations;
    for (const auto& pr : study.pairs) {
      json e = {{"pair", pr.index},
                {"pass", pr.report.pass},
                {"nu1", pr.report.nu1},
                {"nu2", pr.report.nu2},
                {"C_F", pr.report.C_F},
                {"min_margin", pr.report.min_margin},
                {"log_margin_at_end", std::isfinite(pr.log_margin_at_end) ? json(pr.log_margin_at_end) : json("inf")}};
      if (pr.report.first_violation) e["first_violation"] = *pr.report.first_violation;
      j["pairs"].push_back(e);
    }
    write_json(dir / "contdep.json", j);
  }
  return study;
}

std::vector<std::string> emit_plots(const std::string& run_dir, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("plot stride must be at least 1");
  const fs::path dir(run_dir);
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + run_dir);

  // Everything is read before anything is written.
  struct Pending {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::string comment;
  };
  std::vector<Pending> out;
  std::vector<std::string> script;

  const auto read_table = [](const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> cols;
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      if (cols.empty()) {
        for (std::string w; ss >> w;) cols.push_back(w);
        continue;
      }
      std::vector<double> r;
      for (double v; ss >> v;) r.push_back(v);
      if (r.size() != cols.size()) throw IoError(path.string() + ": ragged row");
      rows.push_back(std::move(r));
    }
    return std::make_pair(cols, rows);
  };

  if (fs::exists(dir / "ledger.csv")) {
    const auto led = read_ledger((dir / "ledger.csv").string());
    const auto pick = [&](const std::string& name, const std::vector<std::string>& cols) {
      Pending p{name, cols, {}, "every " + std::to_string(stride) + "th ledger row"};
      std::vector<std::size_t> idx;
      for (const auto& c : cols) idx.push_back(led.column(c));
      for (std::size_t i = 0; i < led.rows.size(); i += stride) {
        std::vector<double> r;
        for (auto j : idx) r.push_back(led.rows[i][j]);
        p.rows.push_back(std::move(r));
      }
      out.push_back(std::move(p));
    };
    pick("energy.dat", {"t", "E_eps", "E_lyap"});
    pick("residual.dat", {"t", "residual"});
    pick("monitors.dat", {"t", "theta_V", "mu_reg", "phit_Vdual", "calV2"});
    script.push_back("set logscale y\nplot 'energy.dat' using 1:2 with lines title 'E_eps'");
    script.push_back("unset logscale y\nplot 'residual.dat' using 1:2 with lines title 'residual'");
    script.push_back(
        "set logscale y\nplot for [c=2:5] 'monitors.dat' using 1:c with lines title columnheader(c)");
  }
  if (fs::exists(dir / "limit.csv")) {
    const auto [cols, rows] = read_table(dir / "limit.csv");
    Pending p{"gap_loglog.dat", {"log10_epsilon", "log10_gap"}, {}, "limit-study gap against epsilon"};
    for (const auto& r : rows) {
      if (r[0] > 0.0 && r[1] > 0.0) p.rows.push_back({std::log10(r[0]), std::log10(r[1])});
    }
    out.push_back(std::move(p));
    script.push_back("unset logscale y\nplot 'gap_loglog.dat' using 1:2 with linespoints title 'gap'");
  }
  if (fs::exists(dir / "sweep.csv")) {
    const auto [cols, rows] = read_table(dir / "sweep.csv");
    Pending p{"sweep_loglog.dat", {"log10_" + cols.at(0), "log10_sup_theta_V"}, {}, "sweep monitors"};
    for (const auto& r : rows) {
      if (r[0] > 0.0 && r[1] > 0.0) p.rows.push_back({std::log10(r[0]), std::log10(r[1])});
    }
    out.push_back(std::move(p));
    script.push_back("plot 'sweep_loglog.dat' using 1:2 with linespoints title 'sup |theta|_V'");
  }
  if (fs::exists(dir / "contdep.csv")) {
    const auto [cols, rows] = read_table(dir / "contdep.csv");
    Pending p{"contdep.dat", {"pair", "t", "log_lhs", "log_rhs"}, {}, "natural logs"};
    for (const auto& r : rows) {
      if (r[2] > 0.0) p.rows.push_back({r[0], r[1], std::log(r[2]), r[4]});
    }
    out.push_back(std::move(p));
    script.push_back("plot 'contdep.dat' using 2:3 title 'log lhs', '' using 2:4 title 'log rhs'");
  }
  if (out.empty()) throw IoError("nothing to plot in " + run_dir + " (no ledger, sweep, limit or contdep table)");

  const fs::path plots = dir / "plots";
  fs::create_directories(plots);
  std::vector<std::string> written;
  for (const auto& p : out) {
    write_table((plots / p.name).string(), p.columns, p.rows, p.comment);
    written.push_back((plots / p.name).string());
  }
  std::ofstream gp(plots / "plots.gp");
  gp << "set terminal pngcairo size 900,600\nset key autotitle columnhead\n";
  for (std::size_t i = 0; i < script.size(); ++i) {
    gp << "set output 'plot" << i << ".png'\n" << script[i] << '\n';
  }
  written.push_back((plots / "plots.gp").string());
  return written;
}

}  // namespace nlch
