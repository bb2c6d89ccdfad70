#pragma once

#include <Eigen/Dense>

#include "stwobs/observer.hpp"

namespace stwobs::pemfc {

/// Physical parameters of the air-supply loop. Values default to the
/// reference stack (90 cells, twin-screw compressor); the last block are
/// gap fillers not fixed by the stack datasheet and kept configurable.
struct PhysicalParams {
  double n_cells = 90.0;
  double R = 8.314;             // J/(mol K), universal gas constant
  double R_a = 286.9;           // J/(kg K), air gas constant
  double p_atm = 1.01325e5;     // Pa
  double T_atm = 298.15;        // K
  double T_fc = 353.15;         // K, stack temperature
  double F = 96485.0;           // C/mol
  double M_a = 28.9644e-3;      // kg/mol, air
  double M_O2 = 32e-3;          // kg/mol
  double M_N2 = 28e-3;          // kg/mol
  double M_v = 18.02e-3;        // kg/mol, vapor
  double C_D = 0.0038;          // nozzle discharge coefficient
  double A_T = 0.00138;         // m^2, nozzle area
  double gamma = 1.4;           // ratio of specific heats
  double J_cp = 671.9e-5;       // kg m^2, compressor inertia
  double motor_friction = 0.00136;  // V/(rad/s)
  double k_t = 0.31;            // N m/A, motor constant
  double C_p = 1004.0;          // J/(kg K)
  double eta_cp = 0.8;          // compressor efficiency
  double eta_cm = 0.98;         // motor mechanical efficiency
  double V_ca = 0.0015;         // m^3, cathode volume
  double V_sm = 0.003;          // m^3, supply manifold volume
  double V_cpr_tr = 5e-4;       // m^3 per compressor turn
  double k_ca_in = 0.3629e-5;   // kg/(Pa s), cathode inlet orifice
  double k_ca_out = 0.76e-4;    // kg/(Pa s), cathode outlet orifice
  double rho_a = 1.23;          // kg/m^3
  double x_O2 = 0.23;           // oxygen mass fraction of intake air
  double mu_f = 0.01;           // s, reconstruction smoothing constant
  double L_init = 5000.0;       // initial adaptive gain
  double k_gain = 500.0;        // adaptive-gain growth rate

  // gap fillers
  double P_sat = 3.14e3;        // Pa, water saturation pressure
  double omega_atm = 0.0;       // intake humidity ratio (dry air)
  double eta_vc = 1.0;          // volumetric efficiency of the compressor
  double kappa = 28.9644e-3;    // kg/mol, cathode-exit flow molar weighting

  void validate() const;
};

/// Lumped plant constants assembled from the physics. c5 depends on the
/// supply-manifold pressure and is exposed as a function.
struct PemfcConstants {
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0, c8 = 0, c9 = 0, c10 = 0, c11 = 0,
         c12 = 0, c13 = 0, c14 = 0, c15 = 0, c16 = 0, c17 = 0, c18 = 0,
         c19 = 0, c20 = 0;
  double A_comp = 0;  // compressor map slope, h3(w) = A_comp * w
  double kappa = 1.0;
  double mu_f = 0.01;
  double L_init = 5000.0;
  double k_gain = 500.0;

  /// Fault weighting c5(z_y2) = -c14 * (1 + c15 * ((z_y2/c11)^c12 - 1)).
  double c5(double z_y2) const;

  /// Compressor mass-flow map h3(w) = A_comp * w.
  double h3(double w) const { return A_comp * w; }

  void validate() const;
};

/// Computes every c_i from the physics, with T_st = T_fc throughout and
/// A_comp = eta_vc * V_cpr_tr * rho_a / (2 pi). Pure: equal inputs give
/// bit-identical outputs.
PemfcConstants derive_constants(const PhysicalParams& pp);

/// Cathode-exit flow (kg/s). Sub-critical branch for c11/x1 > c19, choked
/// (linear, slope c20) otherwise. Throws std::domain_error when x1 is at or
/// below atmospheric pressure (negative radicand), naming x1.
double psi(double x1, const PemfcConstants& c);

/// Plant state: cathode pressure, nitrogen partial pressure, compressor
/// speed, supply-manifold pressure.
struct PlantState {
  double x1 = 0;  // Pa
  double x2 = 0;  // Pa
  double x3 = 0;  // rad/s
  double x4 = 0;  // Pa

  Eigen::Vector4d vec() const { return {x1, x2, x3, x4}; }
  static PlantState from_vec(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

  /// x1, x2, x4 > 0; x3 >= 0; x2 < x1. Checked where states enter the
  /// system (config load, probe results); large load down-steps may cross
  /// x2 < x1 transiently mid-run, so the integrator enforces only
  /// positivity and finiteness.
  void validate() const;
};

/// Right-hand side F(x) + g_u u + g_xi xi + g_f f. u is the motor quadratic
/// current, xi the stack current (uncertain parameter), f the air-circuit
/// fault in kg/s entering through c5.
Eigen::Vector4d plant_deriv(const Eigen::Vector4d& x, double u, double xi,
                            double f, const PemfcConstants& c);

/// One classical RK4 step with inputs held over the step.
Eigen::Vector4d rk4_step(const Eigen::Vector4d& x, double u, double xi,
                         double f, double dt, const PemfcConstants& c);

/// Step fault profile: 0 before t_on, magnitude from t_on (inclusive) on.
double fault_step(double t, double t_on, double magnitude);

/// Piecewise-constant schedule (t_i, v_i) with strictly increasing t_i,
/// first point at t = 0. at(t) returns the value of the last point with
/// t_i <= t.
struct Schedule {
  std::vector<std::pair<double, double>> points;

  double at(double t) const;
  bool empty() const { return points.empty(); }
  void validate(const std::string& name) const;
  void validate_range(const std::string& name, double lo, double hi) const;
};

/// Sampling box used for Lipschitz estimation and Q grids.
struct OperatingBox {
  double p_min = 1.05e5, p_max = 4.5e5;  // Pa, both measured pressures
  double x2_min = 0.5e5, x2_max = 3.5e5; // Pa, nitrogen partial pressure
  double w_min = 30.0, w_max = 1257.0;   // rad/s, compressor speed
  double u_min = 50.0, u_max = 450.0;    // A, motor quadratic current
};

/// Finite-difference Lipschitz estimates (w.r.t. z2) of the g2, W_g1 and
/// W_g2 slots over the box, times a 1.2 safety factor.
struct LipschitzEstimates {
  double gamma2 = 0;
  double gamma_g1 = 0;
  double gamma_g2 = 0;
};
LipschitzEstimates estimate_lipschitz(const PemfcConstants& c, double H,
                                      const OperatingBox& box, int grid_pts = 9);

/// Builds the observer system description for the air-supply plant:
/// n = 4, p = 2, q = r = 1, outputs (x1, x4), z2 = (x2, x4-row companion
/// states), A22 = diag(-H, -c9), Tbar identity, T the state reordering.
/// The Lipschitz constants must be supplied (see estimate_lipschitz).
observer::SystemDescription as_system_description(const PemfcConstants& c, double H,
                                                  const LipschitzEstimates& lip);

/// Damped-Newton equilibrium of the no-fault plant for fixed (u, xi).
/// Throws std::runtime_error when the iteration fails to reach
/// ||xdot|| <= tol from the given guess.
Eigen::Vector4d find_equilibrium(double u, double xi, const PemfcConstants& c,
                                 Eigen::Vector4d guess, double tol = 1e-9);

/// Equilibrium parameterized by oxygen excess ratio instead of u: delta is
/// fixed by c1 * (x4 - x1) = lambda_O2 * c4 * xi, x1 solves the cathode
/// balance, and u falls out of the compressor equation. Returns the state
/// and the holding input.
struct Equilibrium {
  Eigen::Vector4d x;
  double u = 0;
};
Equilibrium equilibrium_for_load(double xi, double lambda_O2, const PemfcConstants& c);

}  // namespace stwobs::pemfc
