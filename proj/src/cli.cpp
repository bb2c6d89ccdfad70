#include "stwobs/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>

#include "stwobs/config.hpp"
#include "stwobs/design.hpp"
#include "stwobs/runner.hpp"
#include "stwobs/sosm.hpp"
#include "stwobs/svg_plot.hpp"

namespace stwobs::cli {

namespace {

namespace fs = std::filesystem;

CommandOutcome guarded(const std::function<void(CommandOutcome&)>& body) {
  CommandOutcome out;
  try {
    body(out);
  } catch (const sim::config_error& e) {
    out.exit_code = 2;
    out.report = std::string("config error: ") + e.what() + "\n";
  } catch (const design::design_error& e) {
    out.exit_code = 1;
    out.report = std::string("design infeasible: ") + e.what() + "\n";
  } catch (const std::invalid_argument& e) {
    out.exit_code = 2;
    out.report = std::string("config error: ") + e.what() + "\n";
  } catch (const std::exception& e) {
    out.exit_code = 3;
    out.report = std::string("runtime abort: ") + e.what() + "\n";
  }
  return out;
}

}  // namespace

std::string find_config(const std::string& path_or_name) {
  if (fs::exists(path_or_name)) return path_or_name;
  if (const char* dir = std::getenv("STWOBS_CONFIG_DIR")) {
    const fs::path cand = fs::path(dir) / path_or_name;
    if (fs::exists(cand)) return cand.string();
  }
  return path_or_name;
}

CommandOutcome cmd_design(const std::string& config_path) {
  return guarded([&](CommandOutcome& out) {
    const sim::ScenarioConfig cfg = sim::load_config(find_config(config_path));
    const sim::Prepared prep = sim::prepare_scenario(cfg);
    std::ostringstream os;
    os << prep.cert.report();
    out.report = os.str();
    out.exit_code = prep.cert.accepted ? 0 : 1;
  });
}

CommandOutcome cmd_simulate(const std::string& config_path, const std::string& out_dir,
                            std::optional<unsigned long long> seed_override) {
  return guarded([&](CommandOutcome& out) {
    sim::ScenarioConfig cfg = sim::load_config(find_config(config_path));
    if (seed_override) cfg.seed = *seed_override;
    const sim::RunResult run = sim::run_scenario(cfg);

    fs::create_directories(out_dir);
    const std::string csv = (fs::path(out_dir) / "trace.csv").string();
    const std::string meta = sim::write_trace_with_meta(run, csv);
    out.artifacts = {csv, meta};

    const auto& s = run.summary;
    std::ostringstream os;
    os.precision(6);
    os << "simulated " << s.steps << " steps in " << s.wall_seconds << " s\n"
       << "final |e2|            = " << s.final_e2_norm << "\n"
       << "final theta rel. err  = " << s.final_theta_rel_err << "\n";
    if (s.fault_detect_time >= 0.0)
      os << "fault step detected at t = " << s.fault_detect_time << " s\n";
    else
      os << "no fault detected (reconstruction stayed near 0)\n";
    os << "mean |fhat - f| over the last second = " << s.fhat_steady_err << "\n"
       << "trace: " << csv << "\nmeta:  " << meta << "\n";
    out.report = os.str();
  });
}

CommandOutcome cmd_plot(const std::string& trace_path, const std::string& out_dir) {
  return guarded([&](CommandOutcome& out) {
    const sim::Trace tr = sim::read_trace(trace_path);
    fs::create_directories(out_dir);
    out.artifacts = plot::write_standard_plots(tr, trace_path, out_dir);
    std::ostringstream os;
    os << "wrote " << out.artifacts.size() << " artifacts:\n";
    for (const auto& p : out.artifacts) os << "  " << p << "\n";
    out.report = os.str();
  });
}

CommandOutcome cmd_diffbench(const std::string& signal, double l0, double dt,
                             double duration) {
  return guarded([&](CommandOutcome& out) {
    if (!(l0 > 0.0)) throw sim::config_error("diffbench: l0 must be positive", 0, "l0");
    if (!(dt > 0.0)) throw sim::config_error("diffbench: dt must be positive", 0, "dt");
    if (!(duration > 10.0 * dt))
      throw sim::config_error("diffbench: duration too short", 0, "duration");

    std::function<double(double)> f, fdot;
    double ddot_bound = 0.0;
    if (signal == "constant") {
      f = [](double) { return 1.0; };
      fdot = [](double) { return 0.0; };
      ddot_bound = 0.0;
    } else if (signal == "ramp") {
      f = [](double t) { return 2.0 * t; };
      fdot = [](double) { return 2.0; };
      ddot_bound = 0.0;
    } else if (signal == "sine") {
      f = [](double t) { return std::sin(t); };
      fdot = [](double t) { return std::cos(t); };
      ddot_bound = 1.0;
    } else if (signal == "chirp") {
      f = [](double t) { return std::sin(0.05 * t * t); };
      fdot = [](double t) { return 0.1 * t * std::cos(0.05 * t * t); };
      ddot_bound = 0.1 + 0.01 * duration * duration;
    } else {
      throw sim::config_error("diffbench: unknown signal '" + signal +
                                  "' (use constant|ramp|sine|chirp)",
                              0, "signal");
    }

    sosm::DifferentiatorState d;
    d.L0 = l0;
    d.z0 = f(0.0);
    d.z1 = 0.0;

    const long long n = std::llround(duration / dt);
    double max_err = 0.0, steady_err = 0.0;
    for (long long i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) * dt;
      const double err = std::abs(d.z1 - fdot(t));
      max_err = std::max(max_err, err);
      if (t >= 0.5 * duration) steady_err = std::max(steady_err, err);
      if (i < n) sosm::differentiator_step(d, f(t), dt);
    }

    std::ostringstream os;
    os.precision(6);
    os << "signal = " << signal << ", L0 = " << l0 << ", dt = " << dt
       << ", duration = " << duration << " s\n"
       << "max derivative error                          = " << max_err << "\n"
       << "steady derivative error (sup over last half)  = " << steady_err << "\n"
       << "steady error / dt                             = " << steady_err / dt << "\n";
    if (ddot_bound > l0)
      os << "WARNING: |second derivative| reaches " << ddot_bound
         << " > L0; tracking is not guaranteed and the estimate may diverge\n";
    out.report = os.str();
  });
}

}  // namespace stwobs::cli
