#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stwobs::design {

/// Thrown when a design equation has no admissible solution for the given
/// margins. The message names the violated condition.
class design_error : public std::runtime_error {
 public:
  explicit design_error(const std::string& what) : std::runtime_error(what) {}
};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
/// A matrix whose off-diagonal entries are exactly zero triggers no rotation,
/// so its diagonal is returned bit-exactly.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& S);

/// Jacobi eigendecomposition S = V * diag(evals) * V^T (evals ascending).
void symmetric_eigen(const Eigen::MatrixXd& S, Eigen::VectorXd& evals,
                     Eigen::MatrixXd& evecs);

/// All eigenvalues strictly in the open left half plane.
bool is_hurwitz(const Eigen::MatrixXd& A);

/// Solves A^T P + P A + C = 0 by vectorization (small dense systems only).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

/// Solves A22^T P + P A22 + gamma2^2 P P + (2 + eps_r) I = 0 for the
/// stabilizing (smaller) symmetric positive-definite root.
///
/// gamma2 = 0 reduces to a Lyapunov solve; a diagonal A22 is handled per
/// entry by the scalar quadratic formula; the general case runs a Newton
/// iteration seeded by the Lyapunov solution. Throws design_error when no
/// positive-definite solution exists (scalar discriminant negative, or the
/// iteration fails to converge in 100 steps).
Eigen::MatrixXd solve_riccati(const Eigen::MatrixXd& A22, double gamma2, double eps_r);

/// Frobenius norm of the Riccati defect of P.
double riccati_residual(const Eigen::MatrixXd& A22, double gamma2, double eps_r,
                        const Eigen::MatrixXd& P);

/// Solves K Phi1 + Phi1^T K^T - gamma_g1^2 K K^T - eps_k I = 0 for the
/// smaller-magnitude root with sign matching Phi1 (scalar case), or a
/// symmetric K by Newton iteration for q > 1. The returned K satisfies
/// K Phi1 + Phi1^T K^T > 0.
Eigen::MatrixXd solve_gain_K(const Eigen::MatrixXd& Phi1, double gamma_g1, double eps_k);

/// Frobenius norm of the gain-equation defect of K.
double gain_residual(const Eigen::MatrixXd& Phi1, double gamma_g1, double eps_k,
                     const Eigen::MatrixXd& K);

struct QReport {
  Eigen::MatrixXd Q;
  double min_eig = 0.0;
  bool positive_definite = false;
};

/// Assembles Q = [[eps_r I, P1 phi2 - A21bar^T K^T],
///                [phi2^T P1 - K A21bar, eps_k I]]
/// and reports its smallest eigenvalue. A non-positive-definite Q is a valid
/// negative result, reported rather than thrown.
QReport build_Q(const Eigen::MatrixXd& P1, const Eigen::MatrixXd& phi2,
                const Eigen::MatrixXd& A21bar, const Eigen::MatrixXd& K,
                double eps_r, double eps_k);

/// Worst case of build_Q over a set of phi2 samples (for output-dependent
/// phi2 evaluated on a grid).
QReport build_Q_grid(const Eigen::MatrixXd& P1,
                     const std::vector<Eigen::MatrixXd>& phi2_samples,
                     const Eigen::MatrixXd& A21bar, const Eigen::MatrixXd& K,
                     double eps_r, double eps_k);

/// e2^T P1 e2 + theta_tilde^T theta_tilde.
double lyapunov_value(const Eigen::VectorXd& e2, const Eigen::VectorXd& theta_tilde,
                      const Eigen::MatrixXd& P1);

/// Everything the design conditions produce, with the residual norms that
/// certify them. `accepted` is true iff P1 is positive definite, both
/// residuals are below 1e-8 (relative), K Phi1 + Phi1^T K^T > 0 and Q > 0.
struct DesignCertificate {
  Eigen::MatrixXd P1;
  Eigen::MatrixXd K;
  Eigen::MatrixXd Q;
  double H = 0.0;
  double eps_r = 0.1;
  double eps_k = 0.01;
  double gamma2 = 0.0;
  double gamma_g1 = 0.0;
  double gamma_g2 = 0.0;
  double residual_riccati = 0.0;
  double residual_gain = 0.0;
  double q_min_eig = 0.0;
  double p1_min_eig = 0.0;
  bool accepted = false;
  std::vector<std::string> failures;

  std::string report() const;
};

/// Runs the full certification: Riccati solve, gain solve, Q assembly and
/// all acceptance checks. Infeasible margins surface as a certificate with
/// accepted = false and the reasons in `failures` (solver-level
/// infeasibility is caught and recorded, not rethrown).
DesignCertificate certify(const Eigen::MatrixXd& A22, const Eigen::MatrixXd& Phi1,
                          const std::vector<Eigen::MatrixXd>& phi2_samples,
                          const Eigen::MatrixXd& A21bar, double gamma2,
                          double gamma_g1, double gamma_g2, double eps_r,
                          double eps_k, double H);

/// Smallest H on the grid [h_min, h_max] (spacing h_step) satisfying the
/// scalar feasibility H^2 >= gamma2(H)^2 * (2 + eps_r), where gamma2 may
/// itself depend on H. Throws design_error when the whole grid is
/// infeasible.
double smallest_feasible_H(const std::function<double(double)>& gamma2_of_H,
                           double eps_r, double h_min, double h_max, double h_step);

}  // namespace stwobs::design
