#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "stwobs/sosm.hpp"

namespace stwobs::observer {

/// Thrown when an integration step produces a non-finite value. The runner
/// annotates it with the failing sample index.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

using VectorSlot = std::function<Eigen::VectorXd(
    const Eigen::VectorXd& y, const Eigen::VectorXd& z2, const Eigen::VectorXd& u)>;
using MatrixSlot = std::function<Eigen::MatrixXd(
    const Eigen::VectorXd& y, const Eigen::VectorXd& u)>;

/// Structured system in partitioned output coordinates:
///
///   d/dt z_y1 = A11b y + A21b z2 + W_g1(y, z2, u) + Phi1(y, u) theta
///   d/dt z_y2 = A12b y + A22b z2 + W_g2(y, z2, u) + Phi2(y, u) f(t)
///   d/dt z2   = A21 y + A22 z2 + g2(y, z2, u) + phi2(y, u) theta
///
/// with z_y = Tbar * y split into the first q and last r components, and
/// T mapping the plant state onto [z_y1; z_y2; z2].
struct SystemDescription {
  int n = 0, p = 0, q = 0, r = 0;

  Eigen::MatrixXd A11b;  // q x p
  Eigen::MatrixXd A12b;  // r x p
  Eigen::MatrixXd A21b;  // q x (n-p)
  Eigen::MatrixXd A22b;  // r x (n-p)
  Eigen::MatrixXd A21;   // (n-p) x p
  Eigen::MatrixXd A22;   // (n-p) x (n-p), Hurwitz
  Eigen::MatrixXd Tbar;  // p x p, invertible
  Eigen::MatrixXd T;     // n x n, invertible

  VectorSlot W_g1;  // -> q
  VectorSlot W_g2;  // -> r
  VectorSlot g2;    // -> (n-p)
  MatrixSlot Phi1;  // q x q, invertible
  MatrixSlot Phi2;  // r x r, invertible
  MatrixSlot phi2;  // (n-p) x q

  bool phi1_constant = true;  // when false, K is re-solved every step

  double gamma2 = 0.0;
  double gamma_g1 = 0.0;
  double gamma_g2 = 0.0;

  double cond_bound = 1e8;  // ceiling on cond(T), cond(Tbar)

  /// Checks p = q + r, matrix dimensions, A22 Hurwitz, T/Tbar condition
  /// numbers and slot presence. Throws std::invalid_argument on violation.
  void validate() const;
};

/// Full observer state: output-coordinate estimates, the unmeasured-state
/// estimate, the parameter estimate, one STW channel per output component
/// and one differentiator per z_y1 component.
struct ObserverState {
  Eigen::VectorXd zhat_y1;  // q
  Eigen::VectorXd zhat_y2;  // r
  Eigen::VectorXd zhat2;    // n-p
  Eigen::VectorXd theta_hat;  // q
  std::vector<sosm::StwChannel> ch_y1;  // q channels
  std::vector<sosm::StwChannel> ch_y2;  // r channels
  std::vector<sosm::DifferentiatorState> diff;  // q differentiators
  Eigen::MatrixXd K;  // q x q adaptive-law gain
  double eps_k = 0.01;  // margin used when K must be re-solved per step

  void validate(const SystemDescription& sys) const;
};

struct ChannelParams {
  double L0 = 5000.0;
  double dead_zone = 1e-3;
  double k_rate = 500.0;
  double L_max = 1e6;
};

/// Builds an observer state with zhat_y set to the first measurement (zero
/// output error at start), differentiators locked onto z_y1(0), and the
/// given zhat2/theta seeds and adaptive-law gain.
ObserverState make_observer_state(const SystemDescription& sys,
                                  const Eigen::VectorXd& y0,
                                  const Eigen::VectorXd& zhat2_0,
                                  const Eigen::VectorXd& theta0,
                                  const Eigen::MatrixXd& K,
                                  const ChannelParams& cp_y1,
                                  const ChannelParams& cp_y2,
                                  double diff_L0);

/// Partition of Tbar * y into (z_y1, z_y2).
std::pair<Eigen::VectorXd, Eigen::VectorXd> split_outputs(
    const Eigen::VectorXd& y, const SystemDescription& sys);

struct Injections {
  Eigen::VectorXd mu_y1;  // q
  Eigen::VectorXd mu_y2;  // r
};

/// One observer step. Computes the output errors, obtains the STW
/// injections and advances the channels (stw_step then adapt_gain per
/// component), then advances zhat_y1, zhat_y2 by explicit Euler and zhat2 by
/// a linearly implicit Euler step in A22 — injections and nonlinear slots
/// are all evaluated at step start. Returns the injections for logging and
/// fault reconstruction. Throws numeric_error if the new state is not
/// finite.
Injections observer_step(ObserverState& st, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& u, double dt,
                         const SystemDescription& sys);

/// Parameter-estimate update
///   theta' = theta - dt * K * (A11b y + A21b zhat2 + W_g1(y, zhat2, u)
///                              + Phi1(y, u) theta - zy1_dot_est)
/// with zy1_dot_est supplied by the differentiators, never by the plant.
void adaptive_param_step(ObserverState& st, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& u,
                         const Eigen::VectorXd& zy1_dot_est, double dt,
                         const SystemDescription& sys);

struct FaultEstimate {
  Eigen::VectorXd f_hat;          // Phi2^{-1} * mu_y2
  Eigen::VectorXd raw_injection;  // mu_y2 as received
  Eigen::VectorXd smoothed;       // low-pass of f_hat
  bool valid = true;              // false when Phi2 was near singular
};

/// First-order smoothing filter state for the reconstruction.
struct FaultFilter {
  Eigen::VectorXd smoothed;
  double time_constant = 0.01;
  double inv_norm_bound = 1e9;  // ceiling on ||Phi2^{-1}||
  bool primed = false;
};

/// Fault reconstruction from the equivalent output injection:
/// f_hat = Phi2(y,u)^{-1} mu_y2, low-passed into `smoothed`. When
/// ||Phi2^{-1}|| exceeds the filter's bound the sample is flagged invalid
/// and the previous smoothed value is held.
FaultEstimate reconstruct_fault(const Eigen::VectorXd& mu_y2,
                                const Eigen::VectorXd& y,
                                const Eigen::VectorXd& u,
                                const SystemDescription& sys,
                                FaultFilter& filter, double dt);

/// Simulation-only error coordinates against plant truth.
struct Diagnostics {
  Eigen::VectorXd e_y1;
  Eigen::VectorXd e_y2;
  Eigen::VectorXd e2;
  Eigen::VectorXd theta_tilde;
  double V1 = 0.0;  // e2^T P1 e2 + theta_tilde^T theta_tilde
};

Diagnostics error_diagnostics(const Eigen::VectorXd& x_truth,
                              const Eigen::VectorXd& theta_truth,
                              const ObserverState& st,
                              const SystemDescription& sys,
                              const Eigen::MatrixXd& P1);

}  // namespace stwobs::observer
