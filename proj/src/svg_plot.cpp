#include "stwobs/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stwobs/config.hpp"

namespace stwobs::plot {

namespace {

struct Rect {
  double x0, y0, x1, y1;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// round a span to a pleasant tick spacing
double tick_step(double span) {
  if (span <= 0.0 || !std::isfinite(span)) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0;
  if (norm <= 1.5) step = 1.0;
  else if (norm <= 3.5) step = 2.0;
  else if (norm <= 7.5) step = 5.0;
  return step * mag;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace

void write_svg(const std::string& path, const std::string& title,
               const std::string& xlabel, const std::string& ylabel,
               const std::vector<Series>& series) {
  const int W = 860, Hpx = 480;
  const Rect plot{70, 40, W - 20, Hpx - 50};

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) {
    ymax = ymin + (ymin == 0.0 ? 1.0 : std::abs(ymin) * 0.1);
    ymin = ymin - (ymax - ymin);
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto sx = [&](double x) { return plot.x0 + (x - xmin) / (xmax - xmin) * (plot.x1 - plot.x0); };
  auto sy = [&](double y) { return plot.y1 - (y - ymin) / (ymax - ymin) * (plot.y1 - plot.y0); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hpx
     << "\" viewBox=\"0 0 " << W << " " << Hpx << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << (W / 2) << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

  // frame
  os << "<rect x=\"" << plot.x0 << "\" y=\"" << plot.y0 << "\" width=\"" << (plot.x1 - plot.x0)
     << "\" height=\"" << (plot.y1 - plot.y0) << "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks
  const double tx = tick_step(xmax - xmin);
  for (double v = std::ceil(xmin / tx) * tx; v <= xmax + 1e-12 * tx; v += tx) {
    const double px = sx(v);
    os << "<line x1=\"" << px << "\" y1=\"" << plot.y1 << "\" x2=\"" << px << "\" y2=\""
       << (plot.y1 + 5) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << px << "\" y=\"" << (plot.y1 + 18)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(v)
       << "</text>\n";
  }
  const double ty = tick_step(ymax - ymin);
  for (double v = std::ceil(ymin / ty) * ty; v <= ymax + 1e-12 * ty; v += ty) {
    const double py = sy(v);
    os << "<line x1=\"" << (plot.x0 - 5) << "\" y1=\"" << py << "\" x2=\"" << plot.x0
       << "\" y2=\"" << py << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << (plot.x0 - 8) << "\" y=\"" << (py + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(v)
       << "</text>\n";
  }
  os << "<text x=\"" << (plot.x0 + plot.x1) / 2 << "\" y=\"" << (Hpx - 12)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlabel
     << "</text>\n"
     << "<text x=\"16\" y=\"" << (plot.y0 + plot.y1) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
     << "transform=\"rotate(-90 16 " << (plot.y0 + plot.y1) / 2 << ")\">" << ylabel
     << "</text>\n";

  // series (stride keeps files small on long traces)
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const size_t n = s.x.size();
    const size_t stride = std::max<size_t>(1, n / 4000);
    os << "<polyline fill=\"none\" stroke=\"" << kColors[si % 5] << "\" stroke-width=\"1.2\"";
    if (s.dashed) os << " stroke-dasharray=\"6,4\"";
    os << " points=\"";
    for (size_t i = 0; i < n; i += stride) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      os << num(sx(s.x[i])) << "," << num(sy(s.y[i])) << " ";
    }
    if (n > 0 && std::isfinite(s.x[n - 1]) && std::isfinite(s.y[n - 1]))
      os << num(sx(s.x[n - 1])) << "," << num(sy(s.y[n - 1]));
    os << "\"/>\n";
    // legend
    const double lx = plot.x0 + 12, ly = plot.y0 + 16 + 16.0 * static_cast<double>(si);
    os << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << (lx + 24) << "\" y2=\"" << ly
       << "\" stroke=\"" << kColors[si % 5] << "\" stroke-width=\"1.5\""
       << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n"
       << "<text x=\"" << (lx + 30) << "\" y=\"" << (ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_svg: cannot open '" + path + "'");
  out << os.str();
}

std::vector<std::string> write_standard_plots(const sim::Trace& tr,
                                              const std::string& trace_path,
                                              const std::string& out_dir) {
  if (tr.rows.empty())
    throw sim::config_error("plot: trace has no samples", 0);

  const std::vector<double> t = tr.column(sim::Trace::kT);
  auto overlay = [&](int truth_col, int est_col, const std::string& file,
                     const std::string& title, const std::string& ylab) {
    std::vector<Series> ss(2);
    ss[0] = {"measured/true", t, tr.column(truth_col), true};
    ss[1] = {"estimate", t, tr.column(est_col), false};
    const std::string path = out_dir + "/" + file;
    write_svg(path, title, "t [s]", ylab, ss);
    return path;
  };

  std::vector<std::string> paths;
  paths.push_back(overlay(sim::Trace::kX1, sim::Trace::kZhatY1, "x1_cathode_pressure.svg",
                          "Cathode pressure", "Pa"));
  paths.push_back(overlay(sim::Trace::kX2, sim::Trace::kZhat2_1, "x2_nitrogen_pressure.svg",
                          "Nitrogen partial pressure", "Pa"));
  paths.push_back(overlay(sim::Trace::kX3, sim::Trace::kZhat2_2, "x3_compressor_speed.svg",
                          "Compressor speed", "rad/s"));
  paths.push_back(overlay(sim::Trace::kX4, sim::Trace::kZhatY2, "x4_manifold_pressure.svg",
                          "Supply manifold pressure", "Pa"));
  paths.push_back(overlay(sim::Trace::kXi, sim::Trace::kThetaHat, "theta_stack_current.svg",
                          "Stack current estimate", "A"));
  {
    std::vector<Series> ss(2);
    ss[0] = {"fault", t, tr.column(sim::Trace::kF), true};
    ss[1] = {"reconstruction", t, tr.column(sim::Trace::kFhatSmooth), false};
    const std::string path = out_dir + "/fault_reconstruction.svg";
    write_svg(path, "Fault reconstruction", "t [s]", "kg/s", ss);
    paths.push_back(path);
  }
  {
    std::vector<Series> ss(2);
    ss[0] = {"L (output 1)", t, tr.column(sim::Trace::kLY1), false};
    ss[1] = {"L (output 2)", t, tr.column(sim::Trace::kLY2), false};
    const std::string path = out_dir + "/adaptive_gain.svg";
    write_svg(path, "Adaptive gain history", "t [s]", "L", ss);
    paths.push_back(path);
  }

  // gnuplot alternative
  const std::string gp = out_dir + "/plots.gp";
  std::ofstream out(gp, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + gp + "'");
  out << "set datafile separator ','\n"
      << "set key autotitle columnhead\n"
      << "set grid\n"
      << "trace = '" << trace_path << "'\n"
      << "set term svg size 860,480\n";
  auto gp_plot = [&](const std::string& outfile, const std::string& title, int c_truth,
                     int c_est) {
    out << "set output '" << outfile << "'\nset title '" << title << "'\n"
        << "plot trace using 1:" << c_truth + 1 << " with lines dt 2 lw 1.5, "
        << "trace using 1:" << c_est + 1 << " with lines lw 1.2\n";
  };
  gp_plot("x1_cathode_pressure.gp.svg", "Cathode pressure", sim::Trace::kX1, sim::Trace::kZhatY1);
  gp_plot("x2_nitrogen_pressure.gp.svg", "Nitrogen partial pressure", sim::Trace::kX2,
          sim::Trace::kZhat2_1);
  gp_plot("x3_compressor_speed.gp.svg", "Compressor speed", sim::Trace::kX3, sim::Trace::kZhat2_2);
  gp_plot("x4_manifold_pressure.gp.svg", "Supply manifold pressure", sim::Trace::kX4,
          sim::Trace::kZhatY2);
  gp_plot("theta_stack_current.gp.svg", "Stack current estimate", sim::Trace::kXi,
          sim::Trace::kThetaHat);
  gp_plot("fault_reconstruction.gp.svg", "Fault reconstruction", sim::Trace::kF,
          sim::Trace::kFhatSmooth);
  gp_plot("adaptive_gain.gp.svg", "Adaptive gains", sim::Trace::kLY1, sim::Trace::kLY2);
  paths.push_back(gp);
  return paths;
}

}  // namespace stwobs::plot
