#pragma once

#include <array>
#include <string>
#include <vector>

namespace stwobs::sim {

/// Time-indexed record of one run. Columns are fixed by header(); floats
/// are serialized with 17 significant digits so a write/read round trip is
/// bit exact.
struct Trace {
  static constexpr int kCols = 24;

  // column indices
  enum Col {
    kT = 0, kX1, kX2, kX3, kX4, kXi, kF, kY1, kY2,
    kZhatY1, kZhatY2, kZhat2_1, kZhat2_2, kThetaHat,
    kMuY1, kMuY2, kLY1, kLY2, kFhatRaw, kFhatSmooth,
    kE2_1, kE2_2, kThetaTilde, kV1
  };

  std::vector<std::array<double, kCols>> rows;

  static const std::vector<std::string>& header();
  static int column_index(const std::string& name);  // -1 when absent

  std::vector<double> column(int idx) const;
};

/// Writes the CSV (header + rows, 17 significant digits).
void write_trace(const Trace& tr, const std::string& path);

/// Strict reader: the header must match exactly; a malformed or truncated
/// row raises config_error with its line number.
Trace read_trace(const std::string& path);

}  // namespace stwobs::sim
