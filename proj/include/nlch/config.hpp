#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlch/dynamics.hpp"
#include "nlch/kernel.hpp"

namespace nlch {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SpectralConfig {
  int dims = 1;
  std::vector<double> lengths{1.0};
  std::vector<std::size_t> n_modes{33};
  bool operator==(const SpectralConfig&) const = default;
};

struct KernelConfig {
  std::string family = "gaussian";
  double width = 0.1;
  double amplitude = 1.0;
  double mass = 10.0;
  std::string table;  // CSV path for the table family
  bool operator==(const KernelConfig&) const = default;
};

struct PotentialConfig {
  std::vector<double> coefficients{1.0, 0.0, -2.0, 0.0, 1.0};
  double amplitude = 1.0;
  double c1 = 0.0;  // 0 selects the default witness
  bool operator==(const PotentialConfig&) const = default;
};

struct InitialConfig {
  std::string preset = "quench1d";
  std::string phi_file;
  std::string theta_file;
  std::uint64_t seed = 1;
  double mean = 0.0;
  double amplitude = 1e-2;
  double theta_mean = 0.0;
  double theta_amplitude = 1.0;  // roughness of theta in the roughtheta preset
  bool operator==(const InitialConfig&) const = default;
};

struct OutputConfig {
  std::string directory = "out";
  std::size_t snapshot_stride = 1000;
  std::size_t ledger_stride = 1;
  std::size_t plot_stride = 100;
  bool operator==(const OutputConfig&) const = default;
};

struct SweepConfig {
  std::string axis = "epsilon";
  std::vector<double> values{1.0, 0.1, 0.01};
  double tau = 0.0;  // sup of the monitors is taken over t >= tau (0: 0.1 t_end)
  bool operator==(const SweepConfig&) const = default;
};

struct LimitConfig {
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3, 1e-4};
  double delta = 0.5;
  bool operator==(const LimitConfig&) const = default;
};

struct OracleConfig {
  std::size_t modes = 8;
  double dealias = 1.0;
  std::vector<double> dts{4e-4, 2e-4, 1e-4};
  double fine_dt = 1e-5;
  double reference_dt = 1e-6;
  double t_end = 0.1;
  bool operator==(const OracleConfig&) const = default;
};

struct ContDepConfig {
  std::size_t pairs = 20;
  double perturbation = 1e-3;
  double t_end = 0.1;
  bool operator==(const ContDepConfig&) const = default;
};

struct RunConfig {
  std::string scenario = "simulate";
  SpectralConfig spectral;
  KernelConfig kernel;
  PotentialConfig potential;
  Params params;
  InitialConfig initial;
  OutputConfig outputs;
  SweepConfig sweep;
  LimitConfig limit;
  OracleConfig oracle;
  ContDepConfig contdep;
  double steady_tol = 1e-6;

  bool operator==(const RunConfig& o) const;
};

/// Parses `key = value` lines. Keys are dotted (`kernel.width`); a `[section]`
/// line prefixes the keys that follow. Lists are comma separated and `#`
/// starts a comment. Unknown keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Serializes every field; parse_config(to_text(c)) == c.
std::string to_text(const RunConfig& c);

/// Range and consistency checks; throws ConfigError.
void validate(const RunConfig& c);

KernelSpec kernel_spec(const RunConfig& c);

}  // namespace nlch
