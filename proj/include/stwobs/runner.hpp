#pragma once

#include <string>

#include "stwobs/config.hpp"
#include "stwobs/design.hpp"
#include "stwobs/observer.hpp"
#include "stwobs/pemfc.hpp"
#include "stwobs/trace.hpp"

namespace stwobs::sim {

/// Everything needed before stepping: resolved config, plant constants,
/// Lipschitz estimates, system description and the design certificate.
struct Prepared {
  ScenarioConfig resolved;
  pemfc::PemfcConstants constants;
  pemfc::LipschitzEstimates lip;
  observer::SystemDescription sys;
  design::DesignCertificate cert;
};

/// Resolves every optional config field (equilibrium probe, holding input,
/// mid-range theta0, H search) and runs the design certification. Throws
/// config_error for invalid configs and design::design_error when the
/// certificate is rejected.
Prepared prepare_scenario(const ScenarioConfig& cfg);

struct RunSummary {
  double wall_seconds = 0.0;
  double final_e2_norm = 0.0;
  double final_theta_rel_err = 0.0;
  double fault_detect_time = -1.0;  // < 0 when never detected
  double fhat_steady_err = 0.0;     // mean |fhat - f| over the last second
  long long steps = 0;
};

struct RunResult {
  Trace trace;
  Prepared prep;
  RunSummary summary;
};

/// Fixed-step co-simulation: plant by RK4, observer by the semi-implicit
/// Euler scheme of observer_step, both at cfg.dt, inputs held over each
/// step. Deterministic: identical config and seed give a bit-identical
/// trace. Numeric blowup aborts with the failing sample index in the
/// message.
RunResult run_scenario(const ScenarioConfig& cfg);

/// Writes trace CSV plus the .meta sidecar (resolved config echo, derived
/// constants, certificate and summary). Returns the sidecar path.
std::string write_trace_with_meta(const RunResult& run, const std::string& csv_path);

}  // namespace stwobs::sim
