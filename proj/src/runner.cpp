#include "stwobs/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

namespace stwobs::sim {

namespace {

// closed-form equilibrium for a given cathode pressure: the cathode and
// nitrogen balances fix (delta, x2), the manifold balance fixes x3, the
// compressor balance yields the holding input
struct PressureEq {
  Eigen::Vector4d x;
  double u;
};

PressureEq equilibrium_for_pressure(double xi, double x1, const pemfc::PemfcConstants& c) {
  const double m = c.c3 * pemfc::psi(x1, c) / (c.kappa * x1);
  if (!(m > 0.0))
    throw config_error("x1_target admits no cathode outflow; raise it above atmospheric", 0,
                       "x1_target");
  const double delta = (m * (x1 - c.c2) + c.c4 * xi) / (c.c1 + c.c8);
  PressureEq eq;
  eq.x[0] = x1;
  eq.x[1] = c.c8 * delta / m;
  eq.x[2] = c.c16 * delta / c.A_comp;
  eq.x[3] = x1 + delta;
  eq.u = (c.c9 * eq.x[2] + c.c10 * c.A_comp * (std::pow(eq.x[3] / c.c11, c.c12) - 1.0)) / c.c13;
  return eq;
}

}  // namespace

Prepared prepare_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Prepared prep;
  prep.resolved = cfg;
  prep.constants = pemfc::derive_constants(cfg.phys);
  const auto& c = prep.constants;

  if (!prep.resolved.H) {
    auto gamma2_of_H = [&](double H) {
      return pemfc::estimate_lipschitz(c, H, cfg.box, cfg.grid_pts).gamma2;
    };
    prep.resolved.H =
        design::smallest_feasible_H(gamma2_of_H, cfg.eps_riccati, 0.1, 50.0, 0.1);
  }
  const double H = *prep.resolved.H;

  prep.lip = pemfc::estimate_lipschitz(c, H, cfg.box, cfg.grid_pts);
  prep.sys = pemfc::as_system_description(c, H, prep.lip);
  prep.sys.validate();

  // holding input from the probe when no schedule is configured
  try {
    if (!prep.resolved.input_schedule) {
      const double xi0 = cfg.current_schedule.at(0.0);
      const PressureEq eq = equilibrium_for_pressure(xi0, cfg.x1_target, c);
      pemfc::Schedule s;
      s.points = {{0.0, eq.u}};
      prep.resolved.input_schedule = s;
    }

    // initial plant state from the damped-Newton probe when not configured
    if (!prep.resolved.x0) {
      const double xi0 = cfg.current_schedule.at(0.0);
      const double u0 = prep.resolved.input_schedule->at(0.0);
      const Eigen::Vector4d seed = equilibrium_for_pressure(xi0, cfg.x1_target, c).x;
      prep.resolved.x0 = pemfc::find_equilibrium(u0, xi0, c, seed);
    }
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(std::string("equilibrium probe failed: ") + e.what(), 0, "x0");
  }

  if (!prep.resolved.theta0) {
    double lo = cfg.current_schedule.points.front().second;
    double hi = lo;
    for (const auto& [t, v] : cfg.current_schedule.points) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    prep.resolved.theta0 = 0.5 * (lo + hi);
  }

  // phi2 samples over the measurement box (identically zero for this plant,
  // but the certificate does not assume that)
  std::vector<Eigen::MatrixXd> phi2_samples;
  Eigen::VectorXd y(2), u(1);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        y[0] = cfg.box.p_min + (cfg.box.p_max - cfg.box.p_min) * (i + 0.5) / 3.0;
        y[1] = cfg.box.p_min + (cfg.box.p_max - cfg.box.p_min) * (j + 0.5) / 3.0;
        u[0] = cfg.box.u_min + (cfg.box.u_max - cfg.box.u_min) * (k + 0.5) / 3.0;
        phi2_samples.push_back(prep.sys.phi2(y, u));
      }
  const Eigen::MatrixXd Phi1_nom = prep.sys.Phi1(y, u);

  prep.cert = design::certify(prep.sys.A22, Phi1_nom, phi2_samples, prep.sys.A21b,
                              prep.lip.gamma2, prep.lip.gamma_g1, prep.lip.gamma_g2,
                              cfg.eps_riccati, cfg.eps_gain, H);
  return prep;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  RunResult run;
  run.prep = prepare_scenario(cfg);
  const Prepared& prep = run.prep;
  if (!prep.cert.accepted)
    throw design::design_error("design certificate rejected\n" + prep.cert.report());

  const ScenarioConfig& rc = prep.resolved;
  const auto& c = prep.constants;
  const auto& sys = prep.sys;

  observer::ChannelParams cp1, cp2;
  cp1.L0 = rc.L0_y1.value_or(rc.phys.L_init);
  cp2.L0 = rc.L0_y2.value_or(rc.phys.L_init);
  cp1.k_rate = cp2.k_rate = rc.k_rate.value_or(rc.phys.k_gain);
  cp1.dead_zone = cp2.dead_zone = rc.dead_zone;
  cp1.L_max = cp2.L_max = rc.L_max;

  Eigen::Vector4d x = *rc.x0;
  Eigen::VectorXd y0(2);
  y0 << x[0], x[3];
  Eigen::VectorXd theta0(1);
  theta0 << *rc.theta0;

  observer::ObserverState st = observer::make_observer_state(
      sys, y0, rc.zhat2_0, theta0, prep.cert.K, cp1, cp2, rc.diff_L0);
  st.eps_k = rc.eps_gain;

  observer::FaultFilter filter;
  filter.time_constant = rc.phys.mu_f;
  filter.inv_norm_bound = rc.phi2_inv_bound;

  std::mt19937_64 rng(rc.seed);
  auto noise = [&]() {
    // top 53 bits -> [0,1), then center; avoids distribution
    // implementation differences
    const double u01 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return rc.noise_amplitude * (2.0 * u01 - 1.0);
  };

  const long long n_steps = std::llround(rc.duration / rc.dt);
  run.trace.rows.reserve(static_cast<size_t>(n_steps / rc.decimation + 2));

  Eigen::VectorXd y(2), u(1), zy1_dot(1);
  for (long long i = 0; i <= n_steps; ++i) {
    const double t = static_cast<double>(i) * rc.dt;
    const double xi = rc.current_schedule.at(t);
    const double uv = rc.input_schedule->at(t);
    const double f = (rc.fault_mode == FaultMode::step)
                         ? pemfc::fault_step(t, rc.fault_time, rc.fault_magnitude)
                         : 0.0;

    y << x[0], x[3];
    if (rc.noise_amplitude > 0.0) {
      y[0] += noise();
      y[1] += noise();
    }
    u << uv;

    auto [zy1, zy2] = observer::split_outputs(y, sys);
    for (int k = 0; k < sys.q; ++k)
      sosm::differentiator_step(st.diff[k], zy1[k], rc.dt);

    // values at time t, before the state advances
    const Eigen::VectorXd zhat_y1 = st.zhat_y1;
    const Eigen::VectorXd zhat_y2 = st.zhat_y2;
    const Eigen::VectorXd zhat2 = st.zhat2;
    const Eigen::VectorXd theta_hat = st.theta_hat;

    observer::Injections inj;
    try {
      inj = observer_step(st, y, u, rc.dt, sys);
      if (t >= rc.warmup) {
        for (int k = 0; k < sys.q; ++k) zy1_dot[k] = st.diff[k].z1;
        observer::adaptive_param_step(st, y, u, zy1_dot, rc.dt, sys);
      }
    } catch (const observer::numeric_error& e) {
      std::ostringstream os;
      os << e.what() << " (sample " << i << ", t = " << t << ")";
      throw observer::numeric_error(os.str());
    }
    const observer::FaultEstimate fe =
        observer::reconstruct_fault(inj.mu_y2, y, u, sys, filter, rc.dt);

    if (i % rc.decimation == 0) {
      Eigen::VectorXd theta_truth(1);
      theta_truth << xi;
      observer::ObserverState snap = st;
      snap.zhat_y1 = zhat_y1;
      snap.zhat_y2 = zhat_y2;
      snap.zhat2 = zhat2;
      snap.theta_hat = theta_hat;
      const observer::Diagnostics diag =
          observer::error_diagnostics(x, theta_truth, snap, sys, prep.cert.P1);

      std::array<double, Trace::kCols> row{};
      row[Trace::kT] = t;
      row[Trace::kX1] = x[0];
      row[Trace::kX2] = x[1];
      row[Trace::kX3] = x[2];
      row[Trace::kX4] = x[3];
      row[Trace::kXi] = xi;
      row[Trace::kF] = f;
      row[Trace::kY1] = y[0];
      row[Trace::kY2] = y[1];
      row[Trace::kZhatY1] = zhat_y1[0];
      row[Trace::kZhatY2] = zhat_y2[0];
      row[Trace::kZhat2_1] = zhat2[0];
      row[Trace::kZhat2_2] = zhat2[1];
      row[Trace::kThetaHat] = theta_hat[0];
      row[Trace::kMuY1] = inj.mu_y1[0];
      row[Trace::kMuY2] = inj.mu_y2[0];
      row[Trace::kLY1] = st.ch_y1[0].L;
      row[Trace::kLY2] = st.ch_y2[0].L;
      row[Trace::kFhatRaw] = fe.valid ? fe.f_hat[0] : std::numeric_limits<double>::quiet_NaN();
      row[Trace::kFhatSmooth] = fe.smoothed[0];
      row[Trace::kE2_1] = diag.e2[0];
      row[Trace::kE2_2] = diag.e2[1];
      row[Trace::kThetaTilde] = diag.theta_tilde[0];
      row[Trace::kV1] = diag.V1;
      run.trace.rows.push_back(row);
    }

    if (i < n_steps) {
      x = pemfc::rk4_step(x, uv, xi, f, rc.dt, c);
      if (!x.allFinite() || !(x[0] > 0.0) || !(x[1] > 0.0) || !(x[3] > 0.0)) {
        std::ostringstream os;
        os << "plant state left the admissible region (sample " << i + 1 << ", t = "
           << t + rc.dt << ")";
        throw observer::numeric_error(os.str());
      }
    }
  }

  // summary statistics
  RunSummary& s = run.summary;
  s.steps = n_steps;
  const auto& rows = run.trace.rows;
  if (!rows.empty()) {
    const auto& last = rows.back();
    s.final_e2_norm = std::hypot(last[Trace::kE2_1], last[Trace::kE2_2]);
    const double xi_end = last[Trace::kXi];
    s.final_theta_rel_err =
        xi_end != 0.0 ? std::abs(last[Trace::kThetaTilde]) / std::abs(xi_end) : 0.0;
    const double mag = rc.fault_magnitude;
    if (rc.fault_mode == FaultMode::step && mag != 0.0) {
      for (const auto& r : rows) {
        if (std::abs(r[Trace::kFhatSmooth]) >= 0.5 * std::abs(mag)) {
          s.fault_detect_time = r[Trace::kT];
          break;
        }
      }
    }
    double acc = 0.0;
    int cnt = 0;
    const double t_end = last[Trace::kT];
    for (const auto& r : rows) {
      if (r[Trace::kT] >= t_end - 1.0) {
        acc += std::abs(r[Trace::kFhatSmooth] - r[Trace::kF]);
        ++cnt;
      }
    }
    s.fhat_steady_err = cnt ? acc / cnt : 0.0;
  }
  s.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return run;
}

std::string write_trace_with_meta(const RunResult& run, const std::string& csv_path) {
  write_trace(run.trace, csv_path);

  std::string meta_path = csv_path;
  const size_t dot = meta_path.find_last_of('.');
  const size_t slash = meta_path.find_last_of("/\\");
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    meta_path.resize(dot);
  meta_path += ".meta";

  const auto& prep = run.prep;
  const auto& c = prep.constants;
  nlohmann::json meta;
  meta["config"] = serialize_config(prep.resolved);
  meta["constants"] = {
      {"c1", c.c1},   {"c2", c.c2},   {"c3", c.c3},   {"c4", c.c4},   {"c8", c.c8},
      {"c9", c.c9},   {"c10", c.c10}, {"c11", c.c11}, {"c12", c.c12}, {"c13", c.c13},
      {"c14", c.c14}, {"c15", c.c15}, {"c16", c.c16}, {"c17", c.c17}, {"c18", c.c18},
      {"c19", c.c19}, {"c20", c.c20}, {"A_comp", c.A_comp}, {"kappa", c.kappa},
      {"mu_f", c.mu_f}, {"L_init", c.L_init}, {"k_gain", c.k_gain}};
  meta["lipschitz"] = {{"gamma2", prep.lip.gamma2},
                       {"gamma_g1", prep.lip.gamma_g1},
                       {"gamma_g2", prep.lip.gamma_g2}};
  meta["certificate"] = {{"H", prep.cert.H},
                         {"eps_riccati", prep.cert.eps_r},
                         {"eps_gain", prep.cert.eps_k},
                         {"residual_riccati", prep.cert.residual_riccati},
                         {"residual_gain", prep.cert.residual_gain},
                         {"p1_min_eig", prep.cert.p1_min_eig},
                         {"q_min_eig", prep.cert.q_min_eig},
                         {"K", prep.cert.K(0, 0)},
                         {"P1", {prep.cert.P1(0, 0), prep.cert.P1(0, 1), prep.cert.P1(1, 0),
                                 prep.cert.P1(1, 1)}},
                         {"accepted", prep.cert.accepted}};
  meta["summary"] = {{"steps", run.summary.steps},
                     {"final_e2_norm", run.summary.final_e2_norm},
                     {"final_theta_rel_err", run.summary.final_theta_rel_err},
                     {"fault_detect_time", run.summary.fault_detect_time},
                     {"fhat_steady_err", run.summary.fhat_steady_err}};

  std::ofstream out(meta_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + meta_path + "'");
  out << meta.dump(2) << "\n";
  return meta_path;
}

}  // namespace stwobs::sim
