#include "stwobs/pemfc.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "stwobs/design.hpp"

namespace stwobs::pemfc {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void PhysicalParams::validate() const {
  require(n_cells > 0 && R > 0 && R_a > 0 && p_atm > 0 && T_atm > 0 && T_fc > 0 &&
              F > 0 && M_a > 0 && M_O2 > 0 && M_N2 > 0 && M_v > 0 && C_D > 0 &&
              A_T > 0 && J_cp > 0 && motor_friction > 0 && k_t > 0 && C_p > 0 &&
              V_ca > 0 && V_sm > 0 && V_cpr_tr > 0 && k_ca_in > 0 && k_ca_out > 0 &&
              rho_a > 0 && mu_f > 0 && L_init > 0 && k_gain > 0 && P_sat > 0 &&
              eta_vc > 0 && kappa > 0,
          "PhysicalParams: all physical values must be strictly positive");
  require(gamma > 1.0, "PhysicalParams: gamma must exceed 1");
  require(eta_cp > 0.0 && eta_cp <= 1.0, "PhysicalParams: eta_cp must be in (0, 1]");
  require(eta_cm > 0.0 && eta_cm <= 1.0, "PhysicalParams: eta_cm must be in (0, 1]");
  require(x_O2 > 0.0 && x_O2 < 1.0, "PhysicalParams: x_O2 must be in (0, 1)");
  require(omega_atm >= 0.0, "PhysicalParams: omega_atm must be nonnegative");
}

double PemfcConstants::c5(double z_y2) const {
  return -c14 * (1.0 + c15 * (std::pow(z_y2 / c11, c12) - 1.0));
}

void PemfcConstants::validate() const {
  require(c1 > 0 && c3 > 0 && c4 > 0 && c8 > 0 && c9 > 0 && c10 > 0 && c11 > 0 &&
              c12 > 0 && c13 > 0 && c14 > 0 && c15 > 0 && c16 > 0 && c17 > 0 &&
              c18 > 0 && c20 > 0 && A_comp > 0,
          "PemfcConstants: derived constants must be strictly positive");
  require(c19 > 0.0 && c19 < 1.0, "PemfcConstants: c19 must be in (0, 1)");
  require(c2 > 0.0, "PemfcConstants: c2 (saturation pressure) must be positive");
  require(kappa > 0.0, "PemfcConstants: kappa must be positive");
}

PemfcConstants derive_constants(const PhysicalParams& pp) {
  pp.validate();
  PemfcConstants c;
  const double T_st = pp.T_fc;
  const double RT = pp.R * T_st;

  c.c1 = RT * pp.k_ca_in / (pp.M_O2 * pp.V_ca) * (pp.x_O2 / (1.0 + pp.omega_atm));
  c.c2 = pp.P_sat;
  c.c3 = RT / pp.V_ca;
  c.c4 = RT * pp.n_cells / (4.0 * pp.V_ca * pp.F);
  c.c8 = RT * pp.k_ca_in / (pp.M_N2 * pp.V_ca) * ((1.0 - pp.x_O2) / (1.0 + pp.omega_atm));
  c.c9 = pp.eta_cm * pp.k_t / pp.J_cp;
  c.c10 = pp.C_p * pp.T_atm / (pp.J_cp * pp.eta_cp);
  c.c11 = pp.p_atm;
  c.c12 = (pp.gamma - 1.0) / pp.gamma;
  c.c13 = pp.eta_cm * pp.k_t / pp.J_cp;
  c.c14 = pp.gamma * pp.R * pp.T_atm / (pp.M_a * pp.V_sm);
  c.c15 = 1.0 / pp.eta_cp;
  c.c16 = pp.k_ca_in;
  c.c17 = pp.C_D * pp.A_T / std::sqrt(RT) * std::sqrt(2.0 * pp.gamma / (pp.gamma - 1.0));
  c.c18 = 1.0 / pp.gamma;
  c.c19 = std::pow(2.0 / (pp.gamma + 1.0), pp.gamma / (pp.gamma - 1.0));
  c.c20 = pp.C_D * pp.A_T / std::sqrt(RT) * std::sqrt(pp.gamma) *
          std::pow(2.0 / (pp.gamma + 1.0), (pp.gamma + 1.0) / (2.0 * (pp.gamma - 1.0)));
  c.A_comp = pp.eta_vc * pp.V_cpr_tr * pp.rho_a / (2.0 * std::numbers::pi);
  c.kappa = pp.kappa;
  c.mu_f = pp.mu_f;
  c.L_init = pp.L_init;
  c.k_gain = pp.k_gain;
  c.validate();
  return c;
}

double psi(double x1, const PemfcConstants& c) {
  if (!(x1 > 0.0)) throw std::domain_error("psi: x1 must be positive");
  const double ratio = c.c11 / x1;
  if (ratio > c.c19) {
    const double rad = 1.0 - std::pow(ratio, c.c12);
    if (rad < 0.0) {
      std::ostringstream os;
      os << "psi: cathode pressure x1 = " << x1
         << " Pa is below atmospheric; exit flow undefined";
      throw std::domain_error(os.str());
    }
    return c.c17 * x1 * std::pow(ratio, c.c18) * std::sqrt(rad);
  }
  return c.c20 * x1;
}

void PlantState::validate() const {
  require(x1 > 0.0 && x2 > 0.0 && x4 > 0.0, "PlantState: pressures must be positive");
  require(x3 >= 0.0, "PlantState: compressor speed must be nonnegative");
  require(x2 < x1, "PlantState: nitrogen partial pressure must stay below total pressure");
}

Eigen::Vector4d plant_deriv(const Eigen::Vector4d& x, double u, double xi,
                            double f, const PemfcConstants& c) {
  if (!x.allFinite() || !std::isfinite(u) || !std::isfinite(xi) || !std::isfinite(f))
    throw std::invalid_argument("plant_deriv: non-finite argument");
  if (xi < 0.0) throw std::invalid_argument("plant_deriv: stack current must be nonnegative");
  const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3];
  const double ps = psi(x1, c);
  const double br = std::pow(x4 / c.c11, c.c12) - 1.0;
  Eigen::Vector4d xdot;
  xdot[0] = -(c.c1 + c.c8) * (x1 - x4) - c.c3 * (x1 - c.c2) * ps / (c.kappa * x1);
  xdot[1] = -c.c8 * (x1 - x4) - c.c3 * x2 * ps / (c.kappa * x1);
  xdot[2] = -c.c9 * x3 - (c.c10 / x3) * br * c.h3(x3);
  xdot[3] = c.c14 * (1.0 + c.c15 * br) * (c.h3(x3) + c.c16 * (x1 - x4));
  xdot[2] += c.c13 * u;
  xdot[0] += -c.c4 * xi;
  xdot[3] += c.c5(x4) * f;
  return xdot;
}

Eigen::Vector4d rk4_step(const Eigen::Vector4d& x, double u, double xi,
                         double f, double dt, const PemfcConstants& c) {
  const Eigen::Vector4d k1 = plant_deriv(x, u, xi, f, c);
  const Eigen::Vector4d k2 = plant_deriv(x + 0.5 * dt * k1, u, xi, f, c);
  const Eigen::Vector4d k3 = plant_deriv(x + 0.5 * dt * k2, u, xi, f, c);
  const Eigen::Vector4d k4 = plant_deriv(x + dt * k3, u, xi, f, c);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double fault_step(double t, double t_on, double magnitude) {
  if (t < 0.0) throw std::invalid_argument("fault_step: t must be nonnegative");
  return t >= t_on ? magnitude : 0.0;
}

double Schedule::at(double t) const {
  if (points.empty()) throw std::logic_error("Schedule::at on empty schedule");
  double v = points.front().second;
  for (const auto& [ti, vi] : points) {
    if (ti <= t) v = vi;
    else break;
  }
  return v;
}

void Schedule::validate(const std::string& name) const {
  if (points.empty())
    throw std::invalid_argument("schedule '" + name + "' must not be empty");
  if (points.front().first != 0.0)
    throw std::invalid_argument("schedule '" + name + "' must start at t = 0");
  for (size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].first > points[i - 1].first))
      throw std::invalid_argument("schedule '" + name + "' times must be strictly increasing");
  }
}

void Schedule::validate_range(const std::string& name, double lo, double hi) const {
  for (const auto& [ti, vi] : points) {
    if (vi < lo || vi > hi) {
      std::ostringstream os;
      os << "schedule '" << name << "' value " << vi << " at t = " << ti
         << " outside [" << lo << ", " << hi << "]";
      throw std::invalid_argument(os.str());
    }
  }
}

LipschitzEstimates estimate_lipschitz(const PemfcConstants& c, double H,
                                      const OperatingBox& box, int grid_pts) {
  if (grid_pts < 2) throw std::invalid_argument("estimate_lipschitz: grid too small");
  observer::SystemDescription sys = as_system_description(c, H, {});

  auto lin = [](double lo, double hi, int i, int n) {
    return lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  };

  const int ny = grid_pts;       // per measured pressure
  const int nz = 5;              // per unmeasured state and input
  const double dx2 = 1e-4 * (box.x2_max - box.x2_min);
  const double dx3 = 1e-4 * (box.w_max - box.w_min);

  double g2max = 0.0, wg1max = 0.0, wg2max = 0.0;

  auto jac_norm = [&](const observer::VectorSlot& slot, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& z2, const Eigen::VectorXd& u) {
    const int rows = static_cast<int>(slot(y, z2, u).size());
    Eigen::MatrixXd J(rows, 2);
    const double steps[2] = {dx2, dx3};
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd zp = z2, zm = z2;
      zp[j] += steps[j];
      zm[j] -= steps[j];
      J.col(j) = (slot(y, zp, u) - slot(y, zm, u)) / (2.0 * steps[j]);
    }
    if (rows == 1) return J.row(0).norm();
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const double me = design::symmetric_eigenvalues(0.5 * (JtJ + JtJ.transpose())).maxCoeff();
    return std::sqrt(std::max(0.0, me));
  };

  Eigen::VectorXd y(2), z2(2), u(1);
  for (int i1 = 0; i1 < ny; ++i1) {
    y[0] = lin(box.p_min, box.p_max, i1, ny);
    for (int i2 = 0; i2 < ny; ++i2) {
      y[1] = lin(box.p_min, box.p_max, i2, ny);
      for (int j1 = 0; j1 < nz; ++j1) {
        z2[0] = lin(box.x2_min, box.x2_max, j1, nz);
        for (int j2 = 0; j2 < nz; ++j2) {
          z2[1] = lin(box.w_min, box.w_max, j2, nz);
          for (int k = 0; k < nz; ++k) {
            u[0] = lin(box.u_min, box.u_max, k, nz);
            g2max = std::max(g2max, jac_norm(sys.g2, y, z2, u));
            wg1max = std::max(wg1max, jac_norm(sys.W_g1, y, z2, u));
            wg2max = std::max(wg2max, jac_norm(sys.W_g2, y, z2, u));
          }
        }
      }
    }
  }

  constexpr double safety = 1.2;
  return {safety * g2max, safety * wg1max, safety * wg2max};
}

observer::SystemDescription as_system_description(const PemfcConstants& c, double H,
                                                  const LipschitzEstimates& lip) {
  if (!(H > 0.0)) throw std::invalid_argument("as_system_description: H must be positive");
  observer::SystemDescription sys;
  sys.n = 4;
  sys.p = 2;
  sys.q = 1;
  sys.r = 1;

  const double cs = c.c1 + c.c8;
  const double b0 = c.c14 * (1.0 - c.c15);  // pressure-independent share of the
                                            // manifold filling dynamics

  sys.A11b.resize(1, 2);
  sys.A11b << -cs, cs;
  sys.A12b.resize(1, 2);
  sys.A12b << b0 * c.c16, -b0 * c.c16;
  sys.A21b = Eigen::MatrixXd::Zero(1, 2);
  sys.A22b.resize(1, 2);
  sys.A22b << 0.0, b0 * c.A_comp;
  sys.A21.resize(2, 2);
  sys.A21 << -c.c8, c.c8, 0.0, 0.0;
  sys.A22.resize(2, 2);
  sys.A22 << -H, 0.0, 0.0, -c.c9;
  sys.Tbar = Eigen::MatrixXd::Identity(2, 2);
  sys.T = Eigen::MatrixXd::Zero(4, 4);
  sys.T(0, 0) = 1.0;  // z_y1 = x1
  sys.T(1, 3) = 1.0;  // z_y2 = x4
  sys.T(2, 1) = 1.0;  // z2_1 = x2
  sys.T(3, 2) = 1.0;  // z2_2 = x3

  sys.W_g1 = [c](const Eigen::VectorXd& y, const Eigen::VectorXd&,
                 const Eigen::VectorXd&) {
    Eigen::VectorXd v(1);
    v[0] = -c.c3 * (y[0] - c.c2) * psi(y[0], c) / (c.kappa * y[0]);
    return v;
  };
  sys.W_g2 = [c](const Eigen::VectorXd& y, const Eigen::VectorXd& z2,
                 const Eigen::VectorXd&) {
    Eigen::VectorXd v(1);
    v[0] = c.c14 * c.c15 * std::pow(y[1] / c.c11, c.c12) *
           (c.h3(z2[1]) + c.c16 * (y[0] - y[1]));
    return v;
  };
  sys.g2 = [c, H](const Eigen::VectorXd& y, const Eigen::VectorXd& z2,
                  const Eigen::VectorXd& u) {
    Eigen::VectorXd v(2);
    v[0] = z2[0] * (H - c.c3 * psi(y[0], c) / (c.kappa * y[0]));
    v[1] = -(c.c10 / z2[1]) * (std::pow(y[1] / c.c11, c.c12) - 1.0) * c.h3(z2[1]) +
           c.c13 * u[0];
    return v;
  };
  sys.Phi1 = [c](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, -c.c4);
  };
  sys.Phi2 = [c](const Eigen::VectorXd& y, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, c.c5(y[1]));
  };
  sys.phi2 = [](const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(2, 1);
  };
  sys.phi1_constant = true;
  sys.gamma2 = lip.gamma2;
  sys.gamma_g1 = lip.gamma_g1;
  sys.gamma_g2 = lip.gamma_g2;
  return sys;
}

Eigen::Vector4d find_equilibrium(double u, double xi, const PemfcConstants& c,
                                 Eigen::Vector4d guess, double tol) {
  auto residual = [&](const Eigen::Vector4d& x) {
    return plant_deriv(x, u, xi, 0.0, c);
  };
  // scale residual rows so pressures and speed weigh comparably
  const Eigen::Vector4d scale{1e4, 1e4, 1e2, 1e4};
  auto cost = [&](const Eigen::Vector4d& x) {
    return (residual(x).cwiseQuotient(scale)).norm();
  };

  Eigen::Vector4d x = guess;
  for (int it = 0; it < 200; ++it) {
    Eigen::Vector4d r;
    try {
      r = residual(x);
    } catch (const std::domain_error&) {
      throw std::runtime_error("find_equilibrium: iterate left the model domain");
    }
    if (r.norm() <= tol * 1e4) break;
    Eigen::Matrix4d J;
    for (int j = 0; j < 4; ++j) {
      const double h = std::max(1e-6 * std::abs(x[j]), 1e-6);
      Eigen::Vector4d xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      J.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
    }
    const Eigen::Vector4d step = J.fullPivLu().solve(-r);
    double alpha = 1.0;
    const double c0 = cost(x);
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::Vector4d xn = x + alpha * step;
      if (xn[0] > c.c11 * (1.0 + 1e-9) && xn[1] > 0.0 && xn[2] > 1e-3 && xn[3] > 0.0) {
        double cn;
        try {
          cn = cost(xn);
          if (cn < c0) {
            x = xn;
            moved = true;
            break;
          }
        } catch (const std::domain_error&) {
          // shrink and retry
        }
      }
      alpha *= 0.5;
    }
    if (!moved)
      throw std::runtime_error("find_equilibrium: damped Newton stalled");
  }
  if (residual(x).norm() > tol * 1e4)
    throw std::runtime_error("find_equilibrium: no convergence in 200 iterations");
  PlantState::from_vec(x).validate();
  return x;
}

Equilibrium equilibrium_for_load(double xi, double lambda_O2, const PemfcConstants& c) {
  if (!(xi > 0.0) || !(lambda_O2 > 1.0))
    throw std::invalid_argument("equilibrium_for_load: need xi > 0 and lambda_O2 > 1");
  const double delta = lambda_O2 * c.c4 * xi / c.c1;
  const double target = (c.c1 + c.c8) * delta - c.c4 * xi;  // cathode outflow at balance
  if (!(target > 0.0))
    throw std::runtime_error("equilibrium_for_load: no positive-outflow equilibrium");

  auto outflow = [&](double x1) {
    return c.c3 * (x1 - c.c2) * psi(x1, c) / (c.kappa * x1);
  };
  double lo = c.c11 * (1.0 + 1e-9), hi = 1e8;
  if (outflow(hi) < target)
    throw std::runtime_error("equilibrium_for_load: cathode balance out of range");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (outflow(mid) < target ? lo : hi) = mid;
  }
  const double x1 = 0.5 * (lo + hi);
  const double mval = c.c3 * psi(x1, c) / (c.kappa * x1);
  const double x2 = c.c8 * delta / mval;
  const double x3 = c.c16 * delta / c.A_comp;
  const double x4 = x1 + delta;
  const double u = (c.c9 * x3 + c.c10 * c.A_comp * (std::pow(x4 / c.c11, c.c12) - 1.0)) / c.c13;

  Equilibrium eq;
  eq.x = {x1, x2, x3, x4};
  eq.u = u;
  PlantState::from_vec(eq.x).validate();
  return eq;
}

}  // namespace stwobs::pemfc
