#include "stwobs/trace.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "stwobs/config.hpp"

namespace stwobs::sim {

const std::vector<std::string>& Trace::header() {
  static const std::vector<std::string> h = {
      "t",        "x1",      "x2",      "x3",        "x4",          "xi",
      "f",        "y1",      "y2",      "zhat_y1",   "zhat_y2",     "zhat2_1",
      "zhat2_2",  "theta_hat", "mu_y1", "mu_y2",     "L_y1",        "L_y2",
      "fhat_raw", "fhat_smooth", "e2_1", "e2_2",     "theta_tilde", "V1"};
  return h;
}

int Trace::column_index(const std::string& name) {
  const auto& h = header();
  for (size_t i = 0; i < h.size(); ++i)
    if (h[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> Trace::column(int idx) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[idx]);
  return out;
}

void write_trace(const Trace& tr, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("write_trace: cannot open '" + path + "'");
  const auto& h = Trace::header();
  for (size_t i = 0; i < h.size(); ++i)
    std::fprintf(f, "%s%s", h[i].c_str(), i + 1 < h.size() ? "," : "\n");
  for (const auto& row : tr.rows) {
    for (int i = 0; i < Trace::kCols; ++i)
      std::fprintf(f, "%.17g%s", row[i], i + 1 < Trace::kCols ? "," : "\n");
  }
  if (std::fclose(f) != 0) throw std::runtime_error("write_trace: close failed for '" + path + "'");
}

Trace read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("read_trace: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw config_error("read_trace: empty file '" + path + "'", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // header must match exactly; name the first missing column
  {
    std::vector<std::string> got;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) got.push_back(item);
    const auto& h = Trace::header();
    for (const auto& name : h) {
      if (std::find(got.begin(), got.end(), name) == got.end())
        throw config_error("read_trace: missing column '" + name + "' in '" + path + "'", 1);
    }
    std::ostringstream expect;
    for (size_t i = 0; i < h.size(); ++i) expect << h[i] << (i + 1 < h.size() ? "," : "");
    if (line != expect.str())
      throw config_error("read_trace: header column order mismatch in '" + path + "'", 1);
  }

  Trace tr;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, Trace::kCols> row{};
    const char* p = line.c_str();
    for (int i = 0; i < Trace::kCols; ++i) {
      char* end = nullptr;
      row[i] = std::strtod(p, &end);
      if (end == p) {
        std::ostringstream os;
        os << "read_trace: malformed value in column " << (i + 1) << " at line " << line_no;
        throw config_error(os.str(), line_no);
      }
      p = end;
      if (i + 1 < Trace::kCols) {
        if (*p != ',') {
          std::ostringstream os;
          os << "read_trace: truncated row (expected " << Trace::kCols
             << " columns) at line " << line_no;
          throw config_error(os.str(), line_no);
        }
        ++p;
      }
    }
    if (*p != '\0') {
      std::ostringstream os;
      os << "read_trace: trailing characters at line " << line_no;
      throw config_error(os.str(), line_no);
    }
    tr.rows.push_back(row);
  }
  return tr;
}

}  // namespace stwobs::sim
