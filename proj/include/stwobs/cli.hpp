#pragma once

#include <optional>
#include <string>
#include <vector>

namespace stwobs::cli {

/// Exit taxonomy: 0 success, 1 infeasible design, 2 config error,
/// 3 runtime abort.
struct CommandOutcome {
  int exit_code = 0;
  std::string report;
  std::vector<std::string> artifacts;
};

/// Resolves a config argument: tried as given, then relative to
/// $STWOBS_CONFIG_DIR.
std::string find_config(const std::string& path_or_name);

/// Verifies the design conditions for a scenario and prints the
/// certificate report.
CommandOutcome cmd_design(const std::string& config_path);

/// Runs the scenario, writes trace + metadata into out_dir and prints
/// summary statistics.
CommandOutcome cmd_simulate(const std::string& config_path, const std::string& out_dir,
                            std::optional<unsigned long long> seed_override);

/// Emits one SVG per standard figure (states, parameter, fault, gains)
/// plus a gnuplot script for the same trace.
CommandOutcome cmd_plot(const std::string& trace_path, const std::string& out_dir);

/// Differentiator benchmark on an analytic signal
/// (constant | ramp | sine | chirp).
CommandOutcome cmd_diffbench(const std::string& signal, double l0, double dt,
                             double duration);

}  // namespace stwobs::cli
