#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlch/io.hpp"
#include "nlch/kernels.hpp"
#include "nlch/scenarios.hpp"

using namespace nlch;
namespace fs = std::filesystem;

namespace {

RunConfig shipped(const std::string& name) { return load_config(NLCH_SOURCE_DIR "/configs/" + name); }

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "nlch_scenarios" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t data_rows(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  bool header = false;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++n;
  }
  return n;
}

RunOptions in_memory() {
  RunOptions o;
  o.write_files = false;
  return o;
}

// IMEX step with the coupling sign flipped in the order-parameter equation only.
StepperFactory wrong_sign_factory() {
  return [](const Kernel& k, const Potential& pot, const Params& p) -> Stepper {
    return [&k, &pot, p](const State& s) {
      const auto& sp = k.space();
      const auto& lam = sp.eigenvalues();
      const Field conv = k.convolve(s.phi);
      std::vector<double> w(s.phi.size());
      kernels::chemical_source(k.a_field().values(), s.phi.values(), conv.values(), pot.dF(), w);
      const auto w_hat = sp.transform(w);
      auto phi_hat = sp.transform(s.phi);
      const auto theta_hat = sp.transform(s.theta);
      std::vector<double> d(sp.size()), th(sp.size());
      kernels::imex_phi_increment(lam, w_hat, theta_hat, p.dt, p.stabilization, p.alpha, -p.delta, d);
      d[0] = 0.0;
      kernels::imex_theta_update(lam, theta_hat, d, p.epsilon, p.dt, p.delta, th);
      th[0] = theta_hat[0];
      for (std::size_t j = 0; j < d.size(); ++j) phi_hat[j] += d[j];
      State next;
      next.t = s.t + p.dt;
      next.M0 = s.M0;
      next.N0 = s.N0;
      next.phi = Field::from_coefficients(sp, std::move(phi_hat));
      next.theta = Field::from_coefficients(sp, std::move(th));
      return next;
    };
  };
}

}  // namespace

TEST(Scenarios, ConstantPresetIsFixedPoint) {
  auto cfg = shipped("constant.conf");
  cfg.params.t_end = 0.1;
  const auto r = run_simulate(cfg, in_memory());
  EXPECT_TRUE(r.fixed_point);
  EXPECT_EQ(r.drift_phi, 0.0);
  EXPECT_EQ(r.drift_theta, 0.0);
  EXPECT_EQ(r.max_abs_residual, 0.0);
  EXPECT_EQ(r.steps, 100u);
  EXPECT_EQ(r.final_state.phi[0], 0.3);
}

TEST(Scenarios, InitialMeansAreExact) {
  auto cfg = shipped("quench1d.conf");
  cfg.initial.mean = 0.2;
  cfg.initial.theta_mean = -0.4;
  for (const char* preset : {"quench1d", "roughtheta", "pair"}) {
    cfg.initial.preset = preset;
    const auto s = build_setup(cfg);
    const auto st = initial_state(cfg, s.space);
    EXPECT_NEAR(s.space.mean(st.phi), 0.2, 1e-15) << preset;
    EXPECT_NEAR(s.space.mean(st.theta), -0.4, 1e-15) << preset;
  }
  cfg.initial.preset = "quench2d";
  EXPECT_THROW(initial_state(cfg, build_setup(cfg).space), ConfigError);
}

TEST(Scenarios, SetupErrorsMapToTheirKinds) {
  auto cfg = shipped("quench1d.conf");
  cfg.kernel.width = 0.01;  // under-resolved on 33 nodes
  EXPECT_THROW(build_setup(cfg), ConfigError);
  cfg = shipped("quench1d.conf");
  cfg.potential.coefficients = {1, 0, -2, 0, 1};
  cfg.kernel.mass = 1.0;  // a0 below the double-well curvature
  EXPECT_THROW(build_setup(cfg), CertificationError);
  EXPECT_NO_THROW(build_setup(cfg, true));
}

TEST(Scenarios, SimulateIsDeterministic) {
  auto cfg = shipped("quench1d.conf");
  cfg.params.t_end = 0.3;
  cfg.outputs.snapshot_stride = 100;
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  cfg.outputs.directory = a.string();
  run_simulate(cfg);
  cfg.outputs.directory = b.string();
  run_simulate(cfg);
  const auto la = slurp(a / "ledger.csv");
  ASSERT_FALSE(la.empty());
  EXPECT_EQ(la, slurp(b / "ledger.csv"));
  EXPECT_EQ(slurp(a / "snapshots" / "phi_00000300.bin"), slurp(b / "snapshots" / "phi_00000300.bin"));
  EXPECT_TRUE(fs::exists(a / "summary.json"));
}

TEST(Scenarios, LedgerFileMatchesReport) {
  auto cfg = shipped("quench1d.conf");
  cfg.params.t_end = 0.05;
  cfg.outputs.directory = fresh_dir("ledger").string();
  const auto r = run_simulate(cfg);
  const auto l = read_ledger(cfg.outputs.directory + "/ledger.csv");
  ASSERT_EQ(l.rows.size(), r.ledger.size());
  for (std::size_t i = 0; i < l.rows.size(); ++i) EXPECT_EQ(l.rows[i], ledger_values(r.ledger[i]));
  EXPECT_EQ(l.meta.count("seed"), 1u);
}

TEST(Scenarios, OracleCheckPasses) {
  const auto r = run_oracle_check(shipped("oracle.conf"), in_memory());
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.fine_gap, 1e-4);
  for (double s : r.slopes) EXPECT_GE(s, 0.9);
}

TEST(Scenarios, OracleCheckCatchesWrongCouplingSign) {
  auto cfg = shipped("oracle.conf");
  cfg.initial.preset = "roughtheta";
  const auto r = run_oracle_check(cfg, in_memory(), wrong_sign_factory());
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.fine_gap, 1e-4);
  // The faithful scheme passes on the same data.
  EXPECT_TRUE(run_oracle_check(cfg, in_memory()).pass);
}

TEST(Scenarios, LimitStudyViscosity) {
  auto cfg = shipped("limit.conf");
  cfg.params.alpha = 0.5;
  cfg.limit.delta = 1.0;
  cfg.limit.epsilons = {1e-1, 1e-2};
  cfg.params.t_end = 0.05;
  const auto r = run_limit_study(cfg, in_memory());
  EXPECT_EQ(r.beta, 0.25);
  EXPECT_EQ(r.delta, 1.0);
  ASSERT_EQ(r.entries.size(), 2u);
}

TEST(Scenarios, LimitStudyWithoutCouplingHasNoGap) {
  auto cfg = shipped("limit.conf");
  cfg.limit.delta = 0.0;
  cfg.params.t_end = 0.2;
  const auto r = run_limit_study(cfg, in_memory());
  for (const auto& e : r.entries) EXPECT_EQ(e.gap, 0.0) << e.epsilon;
  EXPECT_TRUE(r.pass);
}

TEST(Scenarios, GapTrend) {
  std::size_t inv = 0;
  EXPECT_TRUE(gap_trend_ok({0.1, 0.05, 0.01}, &inv));
  EXPECT_EQ(inv, 0u);
  EXPECT_TRUE(gap_trend_ok({0.1, 0.05, 0.052, 0.01}, &inv));
  EXPECT_EQ(inv, 1u);
  EXPECT_FALSE(gap_trend_ok({0.1, 0.05, 0.06}));
  EXPECT_FALSE(gap_trend_ok({0.1, 0.05, 0.051, 0.03, 0.031}));
  EXPECT_TRUE(gap_trend_ok({0.0, 0.0, 0.0}));
}

TEST(Scenarios, CertifyShippedConfig) {
  auto cfg = shipped("certify.conf");
  const auto r = run_certify(cfg, in_memory());
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.sampling.total(), 0u);
  EXPECT_GT(r.sampling.samples, 1000000u - 1);
}

TEST(Scenarios, ContDepSmallStudy) {
  auto cfg = shipped("contdep.conf");
  cfg.contdep.pairs = 3;
  cfg.contdep.t_end = 0.02;
  const auto r = run_contdep(cfg, in_memory());
  ASSERT_EQ(r.pairs.size(), 3u);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_TRUE(r.pass);
  for (const auto& p : r.pairs) EXPECT_GT(p.log_margin_at_end, 0.0);
}

TEST(Scenarios, SweepProducesOneEntryPerValue) {
  auto cfg = shipped("sweep_epsilon.conf");
  cfg.params.t_end = 0.05;
  const auto r = run_sweep(cfg, in_memory());
  ASSERT_EQ(r.entries.size(), cfg.sweep.values.size());
  for (const auto& e : r.entries) EXPECT_TRUE(e.ok) << e.error;
  EXPECT_NEAR(r.tau, 0.005, 1e-15);
}

TEST(Plots, DecimatesLedger) {
  const auto dir = fresh_dir("plots");
  std::vector<LedgerRow> rows(100000);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].step = i;
    rows[i].t = 1e-4 * static_cast<double>(i);
    rows[i].E_eps = 1.0 / (1.0 + rows[i].t);
  }
  write_ledger((dir / "ledger.csv").string(), rows);
  const auto files = emit_plots(dir.string(), 100);
  EXPECT_EQ(files.size(), 4u);
  EXPECT_EQ(data_rows(dir / "plots" / "energy.dat"), 1000u);
  EXPECT_EQ(data_rows(dir / "plots" / "monitors.dat"), 1000u);
  EXPECT_TRUE(fs::exists(dir / "plots" / "plots.gp"));
}

TEST(Plots, EmptyDirectoryWritesNothing) {
  const auto dir = fresh_dir("plots_empty");
  EXPECT_THROW(emit_plots(dir.string(), 10), IoError);
  EXPECT_TRUE(fs::is_empty(dir));
  EXPECT_THROW(emit_plots((dir / "missing").string(), 10), IoError);
}
