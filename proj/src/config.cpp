#include "nlch/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace nlch {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (trim(v.substr(used)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const auto u = std::stoull(v, &used);
      if (trim(v.substr(used)).empty()) return u;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a nonnegative integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

// One table drives both parsing and serialization, so the two cannot drift.
struct Binding {
  std::function<void(const std::string& key, const std::string& value)> set;
  std::function<std::string()> get;
};

std::vector<std::pair<std::string, Binding>> bindings(RunConfig& c) {
  std::vector<std::pair<std::string, Binding>> b;
  const auto dbl = [&b](const std::string& k, double& ref) {
    b.push_back({k, {[&ref](auto& key, auto& v) { ref = to_double(key, v); }, [&ref] { return fmt(ref); }}});
  };
  const auto sz = [&b](const std::string& k, std::size_t& ref) {
    b.push_back({k, {[&ref](auto& key, auto& v) { ref = static_cast<std::size_t>(to_uint(key, v)); },
                     [&ref] { return std::to_string(ref); }}});
  };
  const auto str = [&b](const std::string& k, std::string& ref) {
    b.push_back({k, {[&ref](auto&, auto& v) { ref = v; }, [&ref] { return ref; }}});
  };
  const auto dlist = [&b](const std::string& k, std::vector<double>& ref) {
    b.push_back({k, {[&ref](auto& key, auto& v) {
                       ref.clear();
                       for (const auto& s : split_list(v)) ref.push_back(to_double(key, s));
                     },
                     [&ref] { return join(ref); }}});
  };

  str("scenario", c.scenario);
  b.push_back({"spectral.dims", {[&c](auto& key, auto& v) { c.spectral.dims = static_cast<int>(to_uint(key, v)); },
                                 [&c] { return std::to_string(c.spectral.dims); }}});
  dlist("spectral.lengths", c.spectral.lengths);
  b.push_back({"spectral.n_modes", {[&c](auto& key, auto& v) {
                                      c.spectral.n_modes.clear();
                                      for (const auto& s : split_list(v)) {
                                        c.spectral.n_modes.push_back(static_cast<std::size_t>(to_uint(key, s)));
                                      }
                                    },
                                    [&c] { return join(c.spectral.n_modes); }}});

  str("kernel.family", c.kernel.family);
  dbl("kernel.width", c.kernel.width);
  dbl("kernel.amplitude", c.kernel.amplitude);
  dbl("kernel.mass", c.kernel.mass);
  str("kernel.table", c.kernel.table);

  dlist("potential.coefficients", c.potential.coefficients);
  dbl("potential.amplitude", c.potential.amplitude);
  dbl("potential.c1", c.potential.c1);

  dbl("params.alpha", c.params.alpha);
  dbl("params.epsilon", c.params.epsilon);
  dbl("params.delta", c.params.delta);
  dbl("params.delta0", c.params.delta0);
  dbl("params.dt", c.params.dt);
  dbl("params.t_end", c.params.t_end);
  dbl("params.stabilization", c.params.stabilization);
  b.push_back({"params.auto_stabilization",
               {[&c](auto& key, auto& v) { c.params.auto_stabilization = to_bool(key, v); },
                [&c] { return std::string(c.params.auto_stabilization ? "true" : "false"); }}});
  b.push_back({"params.scheme", {[&c](auto&, auto& v) {
                                   try {
                                     c.params.scheme = parse_scheme(v);
                                   } catch (const ParamError& e) {
                                     throw ConfigError(e.what());
                                   }
                                 },
                                 [&c] { return to_string(c.params.scheme); }}});
  dbl("params.mean_cap", c.params.mean_cap);
  dbl("params.xi", c.params.xi);

  str("initial.preset", c.initial.preset);
  str("initial.phi_file", c.initial.phi_file);
  str("initial.theta_file", c.initial.theta_file);
  b.push_back({"initial.seed", {[&c](auto& key, auto& v) { c.initial.seed = to_uint(key, v); },
                                [&c] { return std::to_string(c.initial.seed); }}});
  dbl("initial.mean", c.initial.mean);
  dbl("initial.amplitude", c.initial.amplitude);
  dbl("initial.theta_mean", c.initial.theta_mean);
  dbl("initial.theta_amplitude", c.initial.theta_amplitude);

  str("outputs.directory", c.outputs.directory);
  sz("outputs.snapshot_stride", c.outputs.snapshot_stride);
  sz("outputs.ledger_stride", c.outputs.ledger_stride);
  sz("outputs.plot_stride", c.outputs.plot_stride);

  str("sweep.axis", c.sweep.axis);
  dlist("sweep.values", c.sweep.values);
  dbl("sweep.tau", c.sweep.tau);

  dlist("limit.epsilons", c.limit.epsilons);
  dbl("limit.delta", c.limit.delta);

  sz("oracle.modes", c.oracle.modes);
  dbl("oracle.dealias", c.oracle.dealias);
  dlist("oracle.dts", c.oracle.dts);
  dbl("oracle.fine_dt", c.oracle.fine_dt);
  dbl("oracle.reference_dt", c.oracle.reference_dt);
  dbl("oracle.t_end", c.oracle.t_end);

  sz("contdep.pairs", c.contdep.pairs);
  dbl("contdep.perturbation", c.contdep.perturbation);
  dbl("contdep.t_end", c.contdep.t_end);

  dbl("steady.tol", c.steady_tol);
  return b;
}

bool params_equal(const Params& a, const Params& b) {
  return a.alpha == b.alpha && a.epsilon == b.epsilon && a.delta == b.delta && a.delta0 == b.delta0 &&
         a.dt == b.dt && a.t_end == b.t_end && a.stabilization == b.stabilization &&
         a.auto_stabilization == b.auto_stabilization && a.scheme == b.scheme && a.mean_cap == b.mean_cap &&
         a.xi == b.xi;
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const {
  return scenario == o.scenario && spectral == o.spectral && kernel == o.kernel && potential == o.potential &&
         params_equal(params, o.params) && initial == o.initial && outputs == o.outputs && sweep == o.sweep &&
         limit == o.limit && oracle == o.oracle && contdep == o.contdep && steady_tol == o.steady_tol;
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  auto table = bindings(c);
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& kv) { return kv.first == key; });
    if (it == table.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second.set(key, value);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const RunConfig& c) {
  RunConfig copy = c;
  std::string out;
  for (const auto& [key, b] : bindings(copy)) out += key + " = " + b.get() + "\n";
  return out;
}

void validate(const RunConfig& c) {
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  static const std::vector<std::string> scenarios = {"simulate", "sweep",        "limit_study", "certify",
                                                     "oracle_check", "contdep"};
  require(std::find(scenarios.begin(), scenarios.end(), c.scenario) != scenarios.end(),
          "unknown scenario '" + c.scenario + "'");
  const auto& s = c.spectral;
  require(s.dims == 1 || s.dims == 2, "spectral.dims must be 1 or 2");
  require(s.lengths.size() == static_cast<std::size_t>(s.dims), "spectral.lengths needs one entry per axis");
  require(s.n_modes.size() == static_cast<std::size_t>(s.dims), "spectral.n_modes needs one entry per axis");
  for (double L : s.lengths) require(L > 0.0 && std::isfinite(L), "spectral.lengths must be positive");
  for (auto n : s.n_modes) require(n >= 9, "spectral.n_modes must be at least 9");

  try {
    parse_kernel_family(c.kernel.family);
  } catch (const KernelError& e) {
    throw ConfigError(e.what());
  }
  if (c.kernel.family == "table") {
    require(!c.kernel.table.empty(), "kernel.table is required for the table family");
    require(std::filesystem::exists(c.kernel.table), "kernel table not found: " + c.kernel.table);
  } else {
    require(c.kernel.width > 0.0, "kernel.width must be positive");
    require(c.kernel.mass > 0.0 || c.kernel.amplitude > 0.0, "kernel needs a positive mass or amplitude");
  }
  require(c.potential.amplitude > 0.0, "potential.amplitude must be positive");
  require(c.potential.c1 >= 0.0, "potential.c1 must be nonnegative");

  try {
    c.params.validate();
  } catch (const ParamError& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }

  static const std::vector<std::string> presets = {"constant", "quench1d", "quench2d", "roughtheta", "pair", "file"};
  require(std::find(presets.begin(), presets.end(), c.initial.preset) != presets.end(),
          "unknown initial.preset '" + c.initial.preset + "'");
  if (c.initial.preset == "file") {
    require(std::filesystem::exists(c.initial.phi_file), "initial.phi_file not found: " + c.initial.phi_file);
    require(std::filesystem::exists(c.initial.theta_file), "initial.theta_file not found: " + c.initial.theta_file);
  }
  require(c.outputs.snapshot_stride >= 1 && c.outputs.ledger_stride >= 1 && c.outputs.plot_stride >= 1,
          "output strides must be at least 1");

  require(c.sweep.axis == "alpha" || c.sweep.axis == "epsilon" || c.sweep.axis == "delta",
          "sweep.axis must be alpha, epsilon or delta");
  for (double v : c.sweep.values) {
    if (c.sweep.axis == "delta") {
      require(v >= 0.0 && v <= c.params.delta0, "sweep values for delta must lie in [0, delta0]");
    } else {
      require(v > 0.0 && v <= 1.0, "sweep values for " + c.sweep.axis + " must lie in (0, 1]");
    }
  }
  require(c.sweep.tau >= 0.0, "sweep.tau must be nonnegative");

  require(!c.limit.epsilons.empty(), "limit.epsilons must not be empty");
  for (std::size_t i = 0; i < c.limit.epsilons.size(); ++i) {
    require(c.limit.epsilons[i] > 0.0 && c.limit.epsilons[i] <= 1.0, "limit.epsilons must lie in (0, 1]");
    if (i) require(c.limit.epsilons[i] < c.limit.epsilons[i - 1], "limit.epsilons must be decreasing");
  }
  require(c.limit.delta >= 0.0, "limit.delta must be nonnegative");

  require(c.oracle.modes >= 2 && c.oracle.modes <= 16, "oracle.modes must lie in [2, 16]");
  require(c.oracle.dealias >= 1.0, "oracle.dealias must be at least 1");
  require(c.oracle.dts.size() >= 2, "oracle.dts needs at least two step sizes");
  for (double dt : c.oracle.dts) require(dt > 0.0, "oracle.dts must be positive");
  require(c.oracle.fine_dt > 0.0 && c.oracle.reference_dt > 0.0 && c.oracle.t_end > 0.0,
          "oracle step sizes and t_end must be positive");

  require(c.contdep.pairs >= 1, "contdep.pairs must be at least 1");
  require(c.contdep.perturbation > 0.0, "contdep.perturbation must be positive");
  require(c.contdep.t_end > 0.0, "contdep.t_end must be positive");
  require(c.steady_tol > 0.0, "steady.tol must be positive");
}

KernelSpec kernel_spec(const RunConfig& c) {
  KernelSpec k;
  k.family = parse_kernel_family(c.kernel.family);
  k.width = c.kernel.width;
  k.amplitude = c.kernel.amplitude;
  k.mass = c.kernel.mass;
  if (k.family == KernelFamily::table) k.table = read_kernel_table(c.kernel.table);
  return k;
}

}  // namespace nlch
