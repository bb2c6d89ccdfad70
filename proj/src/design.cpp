#include "stwobs/design.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace stwobs::design {

namespace {

// One cyclic-Jacobi sweep set. Rotations are applied only to entries above
// the absolute threshold, so an exactly diagonal input is returned as is.
void jacobi(Eigen::MatrixXd& A, Eigen::MatrixXd* V) {
  const int n = static_cast<int>(A.rows());
  if (V) V->setIdentity(n, n);
  if (n == 1) return;

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
    if (off == 0.0) return;
    if (std::sqrt(off) <= 1e-15 * std::max(1.0, A.norm())) return;
    for (int pp = 0; pp < n; ++pp) {
      for (int qq = pp + 1; qq < n; ++qq) {
        const double apq = A(pp, qq);
        if (apq == 0.0) continue;
        const double app = A(pp, pp);
        const double aqq = A(qq, qq);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                      : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = A(k, pp);
          const double akq = A(k, qq);
          A(k, pp) = c * akp - s * akq;
          A(k, qq) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = A(pp, k);
          const double aqk = A(qq, k);
          A(pp, k) = c * apk - s * aqk;
          A(qq, k) = s * apk + c * aqk;
        }
        A(pp, qq) = 0.0;
        A(qq, pp) = 0.0;
        if (V) {
          for (int k = 0; k < n; ++k) {
            const double vkp = (*V)(k, pp);
            const double vkq = (*V)(k, qq);
            (*V)(k, pp) = c * vkp - s * vkq;
            (*V)(k, qq) = s * vkp + c * vkq;
          }
        }
      }
    }
  }
}

void check_symmetric(const Eigen::MatrixXd& S, const char* who) {
  if (S.rows() != S.cols()) throw std::invalid_argument(std::string(who) + ": matrix not square");
  const double scale = 1.0 + S.cwiseAbs().maxCoeff();
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument(std::string(who) + ": matrix not symmetric");
}

bool numerically_diagonal(const Eigen::MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && A(i, j) != 0.0) return false;
  return true;
}

}  // namespace

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& S) {
  check_symmetric(S, "symmetric_eigenvalues");
  Eigen::MatrixXd A = S;
  jacobi(A, nullptr);
  Eigen::VectorXd ev = A.diagonal();
  std::sort(ev.data(), ev.data() + ev.size());
  return ev;
}

void symmetric_eigen(const Eigen::MatrixXd& S, Eigen::VectorXd& evals,
                     Eigen::MatrixXd& evecs) {
  check_symmetric(S, "symmetric_eigen");
  Eigen::MatrixXd A = S;
  Eigen::MatrixXd V;
  jacobi(A, &V);
  const int n = static_cast<int>(S.rows());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return A(a, a) < A(b, b); });
  evals.resize(n);
  evecs.resize(n, n);
  for (int i = 0; i < n; ++i) {
    evals[i] = A(idx[i], idx[i]);
    evecs.col(i) = V.col(idx[i]);
  }
}

bool is_hurwitz(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) return false;
  if (A.rows() == 0) return true;  // empty block, vacuously stable
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  return (es.eigenvalues().real().array() < 0.0).all();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
  const int n = static_cast<int>(A.rows());
  if (C.rows() != n || C.cols() != n)
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P) = -vec(C)
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * n, n * n);
  const Eigen::MatrixXd At = A.transpose();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        M(i + n * j, k + n * j) += At(i, k);   // A^T P term
        M(i + n * j, i + n * k) += A(k, j);    // P A term
      }
  Eigen::VectorXd rhs(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) rhs(i + n * j) = -C(i, j);
  const Eigen::VectorXd v = M.fullPivLu().solve(rhs);
  Eigen::MatrixXd P(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) P(i, j) = v(i + n * j);
  return 0.5 * (P + P.transpose());
}

double riccati_residual(const Eigen::MatrixXd& A22, double gamma2, double eps_r,
                        const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(A22.rows());
  const Eigen::MatrixXd R = A22.transpose() * P + P * A22 +
                            gamma2 * gamma2 * P * P +
                            (2.0 + eps_r) * Eigen::MatrixXd::Identity(n, n);
  return R.norm();
}

Eigen::MatrixXd solve_riccati(const Eigen::MatrixXd& A22, double gamma2, double eps_r) {
  const int n = static_cast<int>(A22.rows());
  if (n == 0 || A22.cols() != n) throw std::invalid_argument("solve_riccati: A22 not square");
  if (gamma2 < 0.0) throw std::invalid_argument("solve_riccati: gamma2 must be nonnegative");
  if (eps_r < 0.0) throw std::invalid_argument("solve_riccati: eps_r must be nonnegative");
  if (!is_hurwitz(A22)) throw design_error("solve_riccati: A22 is not Hurwitz");

  const double cq = 2.0 + eps_r;
  Eigen::MatrixXd P;

  if (gamma2 == 0.0) {
    P = solve_lyapunov(A22, cq * Eigen::MatrixXd::Identity(n, n));
  } else if (numerically_diagonal(A22)) {
    // per-entry scalar quadratic g^2 p^2 + 2 a p + cq = 0, stabilizing root
    P = Eigen::MatrixXd::Zero(n, n);
    const double g2 = gamma2 * gamma2;
    for (int i = 0; i < n; ++i) {
      const double a = A22(i, i);
      const double disc = 4.0 * a * a - 4.0 * g2 * cq;
      if (disc < 0.0) {
        std::ostringstream os;
        os << "solve_riccati: infeasible margin on diagonal entry " << i
           << ": need A22(i,i)^2 >= gamma2^2*(2+eps), have " << (a * a) << " < "
           << (g2 * cq);
        throw design_error(os.str());
      }
      P(i, i) = (-2.0 * a - std::sqrt(disc)) / (2.0 * g2);
    }
  } else {
    // Newton on R(P) = A^T P + P A + g^2 P^2 + cq I, seeded by the Lyapunov
    // solution; each step solves the Sylvester-type linearization.
    P = solve_lyapunov(A22, cq * Eigen::MatrixXd::Identity(n, n));
    const double g2 = gamma2 * gamma2;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const Eigen::MatrixXd R = A22.transpose() * P + P * A22 + g2 * P * P +
                                cq * Eigen::MatrixXd::Identity(n, n);
      if (R.norm() <= 1e-12 * std::max(1.0, P.norm())) {
        converged = true;
        break;
      }
      const Eigen::MatrixXd M = A22 + g2 * P;
      const Eigen::MatrixXd dP = solve_lyapunov(M, R);
      P = 0.5 * ((P + dP) + (P + dP).transpose());
    }
    if (!converged &&
        riccati_residual(A22, gamma2, eps_r, P) > 1e-10 * std::max(1.0, P.norm()))
      throw design_error("solve_riccati: Newton iteration failed to converge in 100 steps");
  }

  const Eigen::VectorXd ev = symmetric_eigenvalues(P);
  if (!(ev.minCoeff() > 0.0))
    throw design_error("solve_riccati: solution is not positive definite");
  const double res = riccati_residual(A22, gamma2, eps_r, P);
  if (res > 1e-8 * std::max(1.0, P.norm())) {
    std::ostringstream os;
    os << "solve_riccati: residual " << res << " exceeds tolerance";
    throw design_error(os.str());
  }
  return P;
}

double gain_residual(const Eigen::MatrixXd& Phi1, double gamma_g1, double eps_k,
                     const Eigen::MatrixXd& K) {
  const int q = static_cast<int>(Phi1.rows());
  const Eigen::MatrixXd R = K * Phi1 + Phi1.transpose() * K.transpose() -
                            gamma_g1 * gamma_g1 * K * K.transpose() -
                            eps_k * Eigen::MatrixXd::Identity(q, q);
  return R.norm();
}

Eigen::MatrixXd solve_gain_K(const Eigen::MatrixXd& Phi1, double gamma_g1, double eps_k) {
  const int q = static_cast<int>(Phi1.rows());
  if (q == 0 || Phi1.cols() != q) throw std::invalid_argument("solve_gain_K: Phi1 not square");
  if (gamma_g1 < 0.0) throw std::invalid_argument("solve_gain_K: gamma_g1 must be nonnegative");
  if (!(eps_k > 0.0)) throw std::invalid_argument("solve_gain_K: eps_k must be positive");
  if (std::abs(Phi1.determinant()) == 0.0)
    throw std::invalid_argument("solve_gain_K: Phi1 is singular");

  Eigen::MatrixXd K;
  if (q == 1) {
    const double phi = Phi1(0, 0);
    if (gamma_g1 == 0.0) {
      K = Eigen::MatrixXd::Constant(1, 1, eps_k / (2.0 * phi));
    } else {
      const double g2 = gamma_g1 * gamma_g1;
      const double disc = phi * phi - g2 * eps_k;
      if (disc < 0.0) {
        std::ostringstream os;
        os << "solve_gain_K: infeasible margin: need Phi1^2 >= gamma_g1^2*eps, have "
           << (phi * phi) << " < " << (g2 * eps_k);
        throw design_error(os.str());
      }
      const double sign = (phi >= 0.0) ? 1.0 : -1.0;
      K = Eigen::MatrixXd::Constant(1, 1, (phi - sign * std::sqrt(disc)) / g2);
    }
  } else {
    // symmetric-K Newton, seeded by the gamma = 0 solve of
    // K Phi1 + Phi1^T K = eps_k I
    K = solve_lyapunov(Phi1, -eps_k * Eigen::MatrixXd::Identity(q, q));
    const double g2 = gamma_g1 * gamma_g1;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const Eigen::MatrixXd R = K * Phi1 + Phi1.transpose() * K -
                                g2 * K * K -
                                eps_k * Eigen::MatrixXd::Identity(q, q);
      if (R.norm() <= 1e-12 * std::max(1.0, K.norm())) {
        converged = true;
        break;
      }
      // linearization: dK (Phi1 - g2 K) + (Phi1 - g2 K)^T dK = -R
      const Eigen::MatrixXd M = Phi1 - g2 * K;
      const Eigen::MatrixXd dK = solve_lyapunov(M, R);
      K = 0.5 * ((K + dK) + (K + dK).transpose());
    }
    if (!converged && gain_residual(Phi1, gamma_g1, eps_k, K) > 1e-10 * std::max(1.0, K.norm()))
      throw design_error("solve_gain_K: Newton iteration failed to converge in 100 steps");
  }

  const double res = gain_residual(Phi1, gamma_g1, eps_k, K);
  if (res > 1e-8 * std::max(1.0, K.norm())) {
    std::ostringstream os;
    os << "solve_gain_K: residual " << res << " exceeds tolerance";
    throw design_error(os.str());
  }
  const Eigen::MatrixXd S = K * Phi1 + Phi1.transpose() * K.transpose();
  if (!(symmetric_eigenvalues(0.5 * (S + S.transpose())).minCoeff() > 0.0))
    throw design_error("solve_gain_K: K*Phi1 + Phi1^T*K^T is not positive definite");
  return K;
}

QReport build_Q(const Eigen::MatrixXd& P1, const Eigen::MatrixXd& phi2,
                const Eigen::MatrixXd& A21bar, const Eigen::MatrixXd& K,
                double eps_r, double eps_k) {
  const int m = static_cast<int>(P1.rows());   // n - p
  const int q = static_cast<int>(K.rows());
  if (phi2.rows() != m || phi2.cols() != q || A21bar.rows() != q || A21bar.cols() != m)
    throw std::invalid_argument("build_Q: dimension mismatch");
  QReport rep;
  rep.Q = Eigen::MatrixXd::Zero(m + q, m + q);
  rep.Q.topLeftCorner(m, m) = eps_r * Eigen::MatrixXd::Identity(m, m);
  rep.Q.bottomRightCorner(q, q) = eps_k * Eigen::MatrixXd::Identity(q, q);
  const Eigen::MatrixXd B = P1 * phi2 - A21bar.transpose() * K.transpose();
  rep.Q.topRightCorner(m, q) = B;
  rep.Q.bottomLeftCorner(q, m) = B.transpose();
  rep.min_eig = symmetric_eigenvalues(rep.Q).minCoeff();
  rep.positive_definite = rep.min_eig > 0.0;
  return rep;
}

QReport build_Q_grid(const Eigen::MatrixXd& P1,
                     const std::vector<Eigen::MatrixXd>& phi2_samples,
                     const Eigen::MatrixXd& A21bar, const Eigen::MatrixXd& K,
                     double eps_r, double eps_k) {
  if (phi2_samples.empty()) throw std::invalid_argument("build_Q_grid: no phi2 samples");
  QReport worst;
  bool first = true;
  for (const auto& phi2 : phi2_samples) {
    QReport rep = build_Q(P1, phi2, A21bar, K, eps_r, eps_k);
    if (first || rep.min_eig < worst.min_eig) worst = rep;
    first = false;
  }
  return worst;
}

double lyapunov_value(const Eigen::VectorXd& e2, const Eigen::VectorXd& theta_tilde,
                      const Eigen::MatrixXd& P1) {
  if (P1.rows() != e2.size() || P1.cols() != e2.size())
    throw std::invalid_argument("lyapunov_value: dimension mismatch");
  return e2.dot(P1 * e2) + theta_tilde.squaredNorm();
}

std::string DesignCertificate::report() const {
  std::ostringstream os;
  os.precision(12);
  os << "design certificate\n"
     << "  H                = " << H << "\n"
     << "  eps (riccati)    = " << eps_r << "\n"
     << "  eps (gain)       = " << eps_k << "\n"
     << "  gamma2           = " << gamma2 << "\n"
     << "  gamma_g1         = " << gamma_g1 << "\n"
     << "  gamma_g2         = " << gamma_g2 << "\n"
     << "  riccati residual = " << residual_riccati << "\n"
     << "  gain residual    = " << residual_gain << "\n"
     << "  min eig P1       = " << p1_min_eig << "\n"
     << "  min eig Q        = " << q_min_eig
     << (q_min_eig > 0.0 ? "  (positive definite)\n" : "  (NOT positive definite)\n")
     << "  K                = " << K << "\n"
     << "  P1               =\n" << P1 << "\n"
     << "  verdict          = " << (accepted ? "accepted" : "REJECTED") << "\n";
  for (const auto& f : failures) os << "  violated: " << f << "\n";
  return os.str();
}

DesignCertificate certify(const Eigen::MatrixXd& A22, const Eigen::MatrixXd& Phi1,
                          const std::vector<Eigen::MatrixXd>& phi2_samples,
                          const Eigen::MatrixXd& A21bar, double gamma2,
                          double gamma_g1, double gamma_g2, double eps_r,
                          double eps_k, double H) {
  DesignCertificate cert;
  cert.H = H;
  cert.eps_r = eps_r;
  cert.eps_k = eps_k;
  cert.gamma2 = gamma2;
  cert.gamma_g1 = gamma_g1;
  cert.gamma_g2 = gamma_g2;
  cert.accepted = true;

  try {
    cert.P1 = solve_riccati(A22, gamma2, eps_r);
    cert.residual_riccati = riccati_residual(A22, gamma2, eps_r, cert.P1);
    cert.p1_min_eig = symmetric_eigenvalues(cert.P1).minCoeff();
    if (cert.residual_riccati > 1e-8 * std::max(1.0, cert.P1.norm())) {
      cert.accepted = false;
      cert.failures.push_back("riccati residual above 1e-8 (relative)");
    }
    if (!(cert.p1_min_eig > 0.0)) {
      cert.accepted = false;
      cert.failures.push_back("P1 not positive definite");
    }
  } catch (const design_error& e) {
    cert.accepted = false;
    cert.failures.push_back(e.what());
    return cert;
  }

  try {
    cert.K = solve_gain_K(Phi1, gamma_g1, eps_k);
    cert.residual_gain = gain_residual(Phi1, gamma_g1, eps_k, cert.K);
    if (cert.residual_gain > 1e-8 * std::max(1.0, cert.K.norm())) {
      cert.accepted = false;
      cert.failures.push_back("gain residual above 1e-8 (relative)");
    }
  } catch (const design_error& e) {
    cert.accepted = false;
    cert.failures.push_back(e.what());
    return cert;
  }

  const QReport qr = build_Q_grid(cert.P1, phi2_samples, A21bar, cert.K, eps_r, eps_k);
  cert.Q = qr.Q;
  cert.q_min_eig = qr.min_eig;
  if (!qr.positive_definite) {
    cert.accepted = false;
    cert.failures.push_back("Q not positive definite");
  }
  return cert;
}

double smallest_feasible_H(const std::function<double(double)>& gamma2_of_H,
                           double eps_r, double h_min, double h_max, double h_step) {
  if (!(h_min > 0.0) || !(h_max >= h_min) || !(h_step > 0.0))
    throw std::invalid_argument("smallest_feasible_H: bad grid");
  for (double H = h_min; H <= h_max + 0.5 * h_step; H += h_step) {
    const double g = gamma2_of_H(H);
    if (H * H >= g * g * (2.0 + eps_r)) return H;
  }
  std::ostringstream os;
  os << "smallest_feasible_H: no H in [" << h_min << ", " << h_max
     << "] satisfies H^2 >= gamma2(H)^2*(2+eps)";
  throw design_error(os.str());
}

}  // namespace stwobs::design
