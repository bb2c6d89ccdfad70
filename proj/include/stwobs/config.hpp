#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>

#include "stwobs/pemfc.hpp"

namespace stwobs::sim {

/// Configuration/parse failure. Carries the offending location (1-based
/// line, 0 when not applicable) and the key involved, both also baked into
/// what().
class config_error : public std::runtime_error {
 public:
  config_error(const std::string& what, int line = 0, std::string key = "")
      : std::runtime_error(what), line(line), key(std::move(key)) {}
  int line;
  std::string key;
};

enum class FaultMode { none, step };

/// One scenario: plant physics, schedules, design margins and observer
/// settings. Fields marked optional resolve at run preparation: x0 from the
/// equilibrium probe, the input schedule to the constant holding input for
/// x1_target, theta0 to the mid-range of the current schedule, H from the
/// feasibility search.
struct ScenarioConfig {
  // [sim]
  double duration = 120.0;
  double dt = 1e-4;
  int decimation = 10;
  unsigned long long seed = 1;
  double noise_amplitude = 0.0;

  // [plant]
  pemfc::PhysicalParams phys;
  std::optional<Eigen::Vector4d> x0;
  pemfc::Schedule current_schedule;
  std::optional<pemfc::Schedule> input_schedule;
  double x1_target = 1.25e5;
  FaultMode fault_mode = FaultMode::step;
  double fault_time = 50.0;
  double fault_magnitude = 3e-3;

  // [design]
  double eps_riccati = 0.1;
  double eps_gain = 0.01;
  std::optional<double> H;
  pemfc::OperatingBox box;
  int grid_pts = 9;
  double phi2_inv_bound = 1e9;

  // [observer]
  std::optional<double> L0_y1;   // defaults to phys.L_init
  std::optional<double> L0_y2;   // defaults to phys.L_init
  std::optional<double> k_rate;  // defaults to phys.k_gain
  double L_max = 1e6;
  double dead_zone = 1e-3;
  double diff_L0 = 1e6;
  double warmup = 0.1;
  Eigen::Vector2d zhat2_0{0.0, 1.0};
  std::optional<double> theta0;

  ScenarioConfig();  // installs the default current schedule

  /// Range checks; throws config_error naming the violated key.
  void validate() const;

  bool operator==(const ScenarioConfig& o) const;
};

/// Parses the documented key/value grammar. Unknown keys are errors and
/// come with a nearest-key suggestion; all errors carry line numbers.
ScenarioConfig parse_config(const std::string& text, const std::string& source_name);

/// Loads and parses a config file.
ScenarioConfig load_config(const std::string& path);

/// Serializes with every optional field written out explicitly (pass the
/// resolved config to get a self-contained, reparseable echo).
std::string serialize_config(const ScenarioConfig& cfg);

}  // namespace stwobs::sim
