#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "nlch/config.hpp"
#include "nlch/io.hpp"
#include "nlch/scenarios.hpp"

using namespace nlch;
using nlch::testing::Gen;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "nlch_config_io";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<double> random_list(Gen& g, double lo, double hi) {
  std::vector<double> v(g.index(1, 5));
  for (auto& x : v) x = g.log_uniform(lo, hi);
  return v;
}

RunConfig random_config(Gen& g) {
  RunConfig c;
  const char* scenarios[] = {"simulate", "sweep", "limit_study", "certify", "oracle_check", "contdep"};
  c.scenario = scenarios[g.index(0, 5)];
  c.spectral.dims = static_cast<int>(g.index(1, 2));
  c.spectral.lengths.assign(static_cast<std::size_t>(c.spectral.dims), 0.0);
  c.spectral.n_modes.assign(static_cast<std::size_t>(c.spectral.dims), 0);
  for (auto& l : c.spectral.lengths) l = g.uniform(0.1, 3.0);
  for (auto& n : c.spectral.n_modes) n = g.index(9, 200);
  c.kernel.family = g.uniform(0, 1) < 0.5 ? "gaussian" : "mollifier";
  c.kernel.width = g.uniform(1e-3, 1.0);
  c.kernel.amplitude = g.uniform(0.1, 5.0);
  c.kernel.mass = g.uniform(0.1, 50.0);
  c.potential.coefficients = random_list(g, 1e-3, 10.0);
  c.potential.amplitude = g.uniform(0.1, 3.0);
  c.potential.c1 = g.uniform(0.0, 20.0);
  c.params.alpha = g.log_uniform(1e-4, 1.0);
  c.params.epsilon = g.log_uniform(1e-6, 1.0);
  c.params.delta = g.uniform(0.0, 2.0);
  c.params.delta0 = g.uniform(0.0, 2.0);
  c.params.dt = g.log_uniform(1e-7, 1e-2);
  c.params.t_end = g.uniform(0.01, 10.0);
  c.params.stabilization = g.uniform(0.0, 10.0);
  c.params.auto_stabilization = g.uniform(0, 1) < 0.5;
  c.params.scheme = g.uniform(0, 1) < 0.5 ? Scheme::imex_stabilized : Scheme::oracle_rk4;
  c.params.mean_cap = g.uniform(0.1, 1.0);
  c.params.xi = g.uniform(0.01, 1.0);
  c.initial.preset = g.uniform(0, 1) < 0.5 ? "roughtheta" : "pair";
  c.initial.seed = g.engine()();
  c.initial.mean = g.uniform(-0.5, 0.5);
  c.initial.amplitude = g.log_uniform(1e-4, 1.0);
  c.initial.theta_mean = g.uniform(-1.0, 1.0);
  c.initial.theta_amplitude = g.uniform(0.0, 2.0);
  c.outputs.directory = "out/run_" + std::to_string(g.index(0, 999));
  c.outputs.snapshot_stride = g.index(1, 5000);
  c.outputs.ledger_stride = g.index(1, 50);
  c.outputs.plot_stride = g.index(1, 500);
  c.sweep.axis = g.uniform(0, 1) < 0.5 ? "epsilon" : "alpha";
  c.sweep.values = random_list(g, 1e-4, 1.0);
  c.sweep.tau = g.uniform(0.0, 1.0);
  c.limit.epsilons = random_list(g, 1e-5, 1.0);
  c.limit.delta = g.uniform(0.0, 2.0);
  c.oracle.modes = g.index(2, 16);
  c.oracle.dealias = g.uniform(1.0, 2.0);
  c.oracle.dts = random_list(g, 1e-6, 1e-3);
  c.oracle.fine_dt = g.log_uniform(1e-6, 1e-4);
  c.oracle.reference_dt = g.log_uniform(1e-7, 1e-5);
  c.oracle.t_end = g.uniform(0.01, 1.0);
  c.contdep.pairs = g.index(1, 100);
  c.contdep.perturbation = g.log_uniform(1e-6, 1e-1);
  c.contdep.t_end = g.uniform(0.01, 1.0);
  c.steady_tol = g.log_uniform(1e-10, 1e-3);
  return c;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c;
  EXPECT_EQ(parse_config(to_text(c)), c);
}

TEST(ConfigProperty, RandomConfigsRoundTrip) {
  for (int k = 0; k < 50; ++k) {
    Gen g(1900 + k);
    const auto c = random_config(g);
    const auto text = to_text(c);
    ASSERT_EQ(parse_config(text), c) << "seed " << 1900 + k << "\n" << text;
    ASSERT_EQ(to_text(parse_config(text)), text);
  }
}

TEST(Config, SectionsCommentsAndLists) {
  const auto c = parse_config(
      "scenario = sweep  # trailing comment\n"
      "\n"
      "[params]\n"
      "epsilon = 0.25\n"
      "auto_stabilization = false\n"
      "[sweep]\n"
      "values = 1, 0.5 ,0.25\n"
      "[kernel]\n"
      "width = 0.3\n");
  EXPECT_EQ(c.scenario, "sweep");
  EXPECT_EQ(c.params.epsilon, 0.25);
  EXPECT_FALSE(c.params.auto_stabilization);
  EXPECT_EQ(c.sweep.values, (std::vector<double>{1, 0.5, 0.25}));
  EXPECT_EQ(c.kernel.width, 0.3);
  EXPECT_THROW(parse_config("[sweep]\nkernel.width = 0.3\n"), ConfigError);
}

TEST(Config, ParseErrors) {
  EXPECT_THROW(parse_config("params.gamma = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("params.alpha = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("params.alpha = 1x\n"), ConfigError);
  EXPECT_THROW(parse_config("params.alpha\n"), ConfigError);
  EXPECT_THROW(parse_config("[params\nalpha = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("outputs.snapshot_stride = -3\n"), ConfigError);
  EXPECT_THROW(parse_config("params.auto_stabilization = maybe\n"), ConfigError);
}

TEST(Config, ValidateRejectsBadValues) {
  EXPECT_NO_THROW(validate(RunConfig{}));
  auto bad = [](auto edit) {
    RunConfig c;
    edit(c);
    return c;
  };
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.params.epsilon = 0.0; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.params.alpha = -1.0; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.scenario = "explode"; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.spectral.dims = 3; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.spectral.n_modes = {4}; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.initial.preset = "nope"; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) {
                 c.initial.preset = "file";
                 c.initial.phi_file = "/nonexistent/phi.bin";
               })),
               ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.outputs.snapshot_stride = 0; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.limit.epsilons = {1e-3, 1e-2}; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.oracle.modes = 17; })), ConfigError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.oracle.dts = {1e-4}; })), ConfigError);
}

TEST(Config, ShippedConfigsValidate) {
  for (const auto& e : fs::directory_iterator(NLCH_SOURCE_DIR "/configs")) {
    if (e.path().extension() != ".conf") continue;
    const auto c = load_config(e.path().string());
    EXPECT_NO_THROW(validate(c)) << e.path();
    EXPECT_NO_THROW(build_setup(c)) << e.path();
    EXPECT_EQ(parse_config(to_text(c)), c) << e.path();
  }
}

TEST(Io, SnapshotRoundTripIsBitExact) {
  for (int k = 0; k < 10; ++k) {
    Gen g(2000 + k);
    const auto sp = g.space();
    auto v = g.values(sp.size());
    v[0] = -0.0;
    v[1] = 1e-310;  // subnormal
    const Field f(v);
    const auto path = scratch("snap_" + std::to_string(k) + ".bin").string();
    write_snapshot(path, sp, f, 0.125 * k, "phi");
    const auto s = read_snapshot(path);
    EXPECT_EQ(s.dims, sp.dims());
    EXPECT_EQ(s.lengths, sp.lengths());
    EXPECT_EQ(s.n_modes, sp.n_modes());
    EXPECT_EQ(s.t, 0.125 * k);
    EXPECT_EQ(s.field, "phi");
    ASSERT_EQ(s.values.size(), v.size());
    EXPECT_EQ(std::memcmp(s.values.data(), v.data(), v.size() * sizeof(double)), 0);
  }
}

TEST(Io, TruncatedSnapshotRejected) {
  const auto sp = SpectralSpace::unit_interval(9);
  const auto path = scratch("trunc.bin");
  write_snapshot(path.string(), sp, Field::constant(sp, 1.0), 0.0, "theta");
  fs::resize_file(path, fs::file_size(path) - 3);
  EXPECT_THROW(read_snapshot(path.string()), IoError);
  {
    std::ofstream(path, std::ios::app) << "0123456789abcdef";
  }
  EXPECT_THROW(read_snapshot(path.string()), IoError);
  EXPECT_THROW(read_snapshot(scratch("missing.bin").string()), IoError);
}

TEST(Io, LedgerRoundTrip) {
  Gen g(2100);
  std::vector<LedgerRow> rows(40);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& r = rows[i];
    r.step = i * 3;
    r.t = 3e-3 * static_cast<double>(i);
    r.E_eps = g.uniform(-1, 1);
    r.E_lyap = g.uniform(0, 100);
    r.residual = g.uniform(-1e-12, 1e-12);
    r.theta_V = g.log_uniform(1e-300, 1e300);
    r.mean_mu = g.uniform(-5, 5);
    r.stabilization = 22.75;
  }
  const auto path = scratch("ledger.csv").string();
  write_ledger(path, rows, {{"seed", "7"}, {"scheme", "imex_stabilized"}});
  const auto l = read_ledger(path);
  EXPECT_EQ(l.meta.at("seed"), "7");
  EXPECT_EQ(l.meta.at("scheme"), "imex_stabilized");
  EXPECT_EQ(l.columns, ledger_columns());
  ASSERT_EQ(l.rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(l.rows[i], ledger_values(rows[i]));
  EXPECT_EQ(l.rows[5][l.column("step")], 15.0);
  EXPECT_THROW(l.column("nope"), IoError);
}

TEST(Io, FormatDoubleRoundTrips) {
  Gen g(2200);
  for (int k = 0; k < 1000; ++k) {
    const double v = g.log_uniform(1e-300, 1e300) * (g.uniform(0, 1) < 0.5 ? -1 : 1);
    ASSERT_EQ(std::stod(format_double(v)), v);
  }
}
