#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlch/diagnostics.hpp"
#include "nlch/spectral.hpp"

namespace nlch {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Field dump: one JSON header line, then the values as little-endian
/// float64 in row-major order.
struct SnapshotData {
  int dims = 1;
  std::vector<double> lengths;
  std::vector<std::size_t> n_modes;
  double t = 0.0;
  std::string field;
  std::vector<double> values;
};

void write_snapshot(const std::string& path, const SpectralSpace& sp, const Field& f, double t,
                    const std::string& name);
SnapshotData read_snapshot(const std::string& path);

/// Ledger CSV. The leading '#' lines document the columns and carry the
/// run metadata as `# key: value`.
void write_ledger(const std::string& path, const std::vector<LedgerRow>& rows,
                  const std::map<std::string, std::string>& meta = {});

struct LedgerFile {
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Column index by name; throws IoError when absent.
  std::size_t column(const std::string& name) const;
};

LedgerFile read_ledger(const std::string& path);

/// Writes a plain numeric table with a header line of column names.
void write_table(const std::string& path, const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows, const std::string& comment = {});

std::string format_double(double v);

}  // namespace nlch
