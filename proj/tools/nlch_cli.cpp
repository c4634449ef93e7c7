// Command-line driver. Exit codes: 0 ok, 2 config error, 3 certification
// failure, 4 blow-up, 5 study assertion failed.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nlch/config.hpp"
#include "nlch/io.hpp"
#include "nlch/scenarios.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
  int jobs = 1;
};

void add_common(CLI::App* sub, Common& c, bool needs_config = true) {
  auto* opt = sub->add_option("--config", c.config, "run configuration file");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory (overrides outputs.directory and NLCH_OUT_DIR)");
  sub->add_option("--seed", c.seed, "seed for the random initial data");
  sub->add_flag("--force", c.force, "run even if a hypothesis cannot be certified");
  sub->add_option("--jobs", c.jobs, "parallel jobs for sweeps and pair runs")->check(CLI::PositiveNumber);
}

nlch::RunConfig load(const Common& c) {
  auto cfg = nlch::load_config(c.config);
  if (!c.out.empty()) {
    cfg.outputs.directory = c.out;
  } else if (const char* env = std::getenv("NLCH_OUT_DIR"); env && *env) {
    cfg.outputs.directory = env;
  }
  if (c.seed) cfg.initial.seed = *c.seed;
  nlch::validate(cfg);
  return cfg;
}

nlch::RunOptions options(const Common& c) {
  nlch::RunOptions o;
  o.force = c.force;
  o.jobs = c.jobs;
  o.log = &std::cerr;
  return o;
}

int verdict(bool pass, const std::string& what) {
  std::cout << what << ": " << (pass ? "pass" : "FAIL") << '\n';
  return pass ? nlch::exit_ok : nlch::exit_study_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonlocal viscous Cahn-Hilliard solver with a thermal field"};
  app.require_subcommand(1);

  Common simulate_c, sweep_c, limit_c, certify_c, oracle_c, contdep_c;
  auto* simulate = app.add_subcommand("simulate", "integrate one trajectory");
  add_common(simulate, simulate_c);
  auto* sweep = app.add_subcommand("sweep", "simulate along one parameter axis");
  add_common(sweep, sweep_c);
  auto* limit = app.add_subcommand("limit-study", "coupled runs against the rescaled isothermal equation");
  add_common(limit, limit_c);
  auto* certify = app.add_subcommand("certify", "certify the kernel and potential hypotheses");
  add_common(certify, certify_c);
  auto* oracle = app.add_subcommand("oracle-check", "IMEX against the Galerkin oracle");
  add_common(oracle, oracle_c);
  auto* contdep = app.add_subcommand("contdep", "continuous-dependence check on random pairs");
  add_common(contdep, contdep_c);

  std::string plot_dir;
  std::size_t plot_stride = 100;
  auto* plots = app.add_subcommand("plots", "plot data from a run directory");
  plots->add_option("dir", plot_dir, "run directory")->required();
  plots->add_option("--stride", plot_stride, "keep every n-th ledger row")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nlch::exit_config;
  }

  try {
    if (*simulate) {
      const auto cfg = load(simulate_c);
      const auto r = nlch::run_simulate(cfg, options(simulate_c));
      std::cout << "steps " << r.steps << ", E_eps " << nlch::format_double(r.energies.front()) << " -> "
                << nlch::format_double(r.energies.back()) << ", drift " << r.drift_phi << " / " << r.drift_theta
                << (r.fixed_point ? ", fixed point" : "") << (r.steady ? ", steady" : "") << '\n';
      std::cout << "outputs in " << cfg.outputs.directory << '\n';
      return nlch::exit_ok;
    }
    if (*sweep) {
      const auto r = nlch::run_sweep(load(sweep_c), options(sweep_c));
      for (const auto& e : r.entries) {
        std::cout << e.value << ' ' << (e.ok ? nlch::format_double(e.sup_theta_V) : "error: " + e.error) << '\n';
      }
      std::cout << "sup |theta|_V slope " << r.theta_V_slope << '\n';
      return verdict(r.pass, "sweep");
    }
    if (*limit) {
      const auto r = nlch::run_limit_study(load(limit_c), options(limit_c));
      std::cout << "beta " << r.beta << '\n';
      for (const auto& e : r.entries) std::cout << e.epsilon << ' ' << nlch::format_double(e.gap) << '\n';
      return verdict(r.pass, "limit study");
    }
    if (*certify) {
      const auto r = nlch::run_certify(load(certify_c), options(certify_c));
      std::cout << "H1 " << (r.h1.pass ? "holds" : "fails") << " a0 " << r.h1.a0 << " c_J " << r.h1.c_J
                << " d_J " << r.h1.d_J << '\n';
      std::cout << "H2 c0 " << r.cert.h2.c0 << ", H3 (c1, c2) (" << r.cert.h3.c1 << ", " << r.cert.h3.c2
                << "), H4 p " << r.cert.h4.p << ", H5 q " << r.cert.h5.q << '\n';
      std::cout << "sampling violations " << r.sampling.total() << " of " << r.sampling.samples << '\n';
      std::cout << "certify: " << (r.pass ? "pass" : "FAIL") << '\n';
      return r.pass ? nlch::exit_ok : nlch::exit_certification;
    }
    if (*oracle) {
      const auto r = nlch::run_oracle_check(load(oracle_c), options(oracle_c));
      for (std::size_t i = 0; i < r.dts.size(); ++i) {
        std::cout << "dt " << r.dts[i] << " gap " << r.gaps[i];
        if (i) std::cout << " slope " << r.slopes[i - 1];
        std::cout << '\n';
      }
      std::cout << "fine gap " << r.fine_gap << ", oracle residual " << r.oracle_residual << '\n';
      return verdict(r.pass, "oracle check");
    }
    if (*contdep) {
      const auto r = nlch::run_contdep(load(contdep_c), options(contdep_c));
      std::cout << r.pairs.size() << " pairs, " << r.violations << " violations\n";
      return verdict(r.pass, "contdep");
    }
    if (*plots) {
      for (const auto& f : nlch::emit_plots(plot_dir, plot_stride)) std::cout << f << '\n';
      return nlch::exit_ok;
    }
  } catch (const nlch::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return nlch::exit_config;
  } catch (const nlch::CertificationError& e) {
    std::cerr << "certification failed: " << e.what() << '\n';
    return nlch::exit_certification;
  } catch (const nlch::BlowUpError& e) {
    std::cerr << "blow-up: " << e.what() << '\n';
    return nlch::exit_blow_up;
  } catch (const nlch::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nlch::exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return nlch::exit_ok;
}
