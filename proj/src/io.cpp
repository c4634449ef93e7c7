#include "nlch/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace nlch {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint64_t to_le(std::uint64_t u) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((u >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return u;
}

// Units of the ledger columns, in ledger_columns() order.
const std::map<std::string, std::string>& column_units() {
  static const std::map<std::string, std::string> u = {
      {"step", "count"},
      {"t", "time"},
      {"E_eps", "energy"},
      {"E_lyap", "energy"},
      {"residual", "energy"},
      {"grad_mu2", "energy/time"},
      {"alpha_phit2", "energy/time"},
      {"grad_theta2", "energy/time"},
      {"phit_Vdual", "norm/time"},
      {"theta_V", "norm"},
      {"mu_reg", "norm^2"},
      {"calV2", "norm^2"},
      {"int_grad_mu2", "energy"},
      {"int_alpha_phit2", "energy"},
      {"int_grad_theta2", "energy"},
      {"mean_phi", "field"},
      {"mean_theta", "field"},
      {"mean_mu", "field"},
      {"mean_mu_bound", "field"},
      {"stabilization", "1"},
  };
  return u;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_snapshot(const std::string& path, const SpectralSpace& sp, const Field& f, double t,
                    const std::string& name) {
  sp.require_compatible(f);
  nlohmann::json h;
  h["dims"] = sp.dims();
  h["lengths"] = sp.lengths();
  h["n_modes"] = sp.n_modes();
  h["t"] = t;
  h["field"] = name;
  h["format"] = "float64-le";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << h.dump() << '\n';
  for (double v : f.values()) {
    const auto u = to_le(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &u, 8);
    out.write(bytes, 8);
  }
  if (!out) throw IoError("short write to " + path);
}

SnapshotData read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError(path + ": missing header");
  SnapshotData s;
  try {
    const auto h = nlohmann::json::parse(header);
    s.dims = h.at("dims").get<int>();
    s.lengths = h.at("lengths").get<std::vector<double>>();
    s.n_modes = h.at("n_modes").get<std::vector<std::size_t>>();
    s.t = h.at("t").get<double>();
    s.field = h.at("field").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": bad header: " + e.what());
  }
  if (s.dims < 1 || s.dims > 2 || s.lengths.size() != static_cast<std::size_t>(s.dims) ||
      s.n_modes.size() != static_cast<std::size_t>(s.dims)) {
    throw IoError(path + ": inconsistent header");
  }
  std::size_t count = 1;
  for (auto n : s.n_modes) count *= n;
  s.values.resize(count);
  for (auto& v : s.values) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw IoError(path + ": truncated data");
    std::uint64_t u;
    std::memcpy(&u, bytes, 8);
    v = std::bit_cast<double>(to_le(u));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw IoError(path + ": trailing bytes");
  return s;
}

void write_ledger(const std::string& path, const std::vector<LedgerRow>& rows,
                  const std::map<std::string, std::string>& meta) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const auto& cols = ledger_columns();
  out << "# ledger: one row per recorded step\n";
  out << "# columns (unit):";
  for (const auto& c : cols) out << ' ' << c << " (" << column_units().at(c) << ')';
  out << '\n';
  for (const auto& [k, v] : meta) out << "# " << k << ": " << v << '\n';
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : rows) {
    const auto v = ledger_values(r);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ',';
      if (i == 0) {
        out << r.step;
      } else {
        out << format_double(v[i]);
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("short write to " + path);
}

std::size_t LedgerFile::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw IoError("ledger has no column '" + name + "'");
}

LedgerFile read_ledger(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  LedgerFile f;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(": ");
      if (colon != std::string::npos && line.compare(0, 10, "# columns ") != 0) {
        f.meta[line.substr(2, colon - 2)] = line.substr(colon + 2);
      }
      continue;
    }
    if (f.columns.empty()) {
      f.columns = split_csv(line);
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != f.columns.size()) throw IoError(path + ": ragged row");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw IoError(path + ": bad number '" + c + "'");
      }
    }
    f.rows.push_back(std::move(row));
  }
  if (f.columns.empty()) throw IoError(path + ": no header row");
  return f;
}

void write_table(const std::string& path, const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  if (!comment.empty()) out << "# " << comment << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? " " : "") << columns[i];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? " " : "") << format_double(r[i]);
    out << '\n';
  }
  if (!out) throw IoError("short write to " + path);
}

}  // namespace nlch
