#pragma once

#include <string>
#include <vector>

#include "stwobs/trace.hpp"

namespace stwobs::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

/// Self-contained SVG line plot (axes, ticks, legend).
void write_svg(const std::string& path, const std::string& title,
               const std::string& xlabel, const std::string& ylabel,
               const std::vector<Series>& series);

/// The seven standard figures for a trace (four state overlays, parameter
/// estimate, fault reconstruction, gain history) plus a gnuplot script.
/// Returns the paths written. Throws config_error when the trace has no
/// samples.
std::vector<std::string> write_standard_plots(const sim::Trace& tr,
                                              const std::string& trace_path,
                                              const std::string& out_dir);

}  // namespace stwobs::plot
