#include "stwobs/observer.hpp"

#include <cmath>
#include <sstream>

#include "stwobs/design.hpp"

namespace stwobs::observer {

namespace {

double condition_1norm(const Eigen::MatrixXd& M) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd inv = lu.inverse();
  double nm = 0.0, ni = 0.0;
  for (int j = 0; j < M.cols(); ++j) {
    nm = std::max(nm, M.col(j).cwiseAbs().sum());
    ni = std::max(ni, inv.col(j).cwiseAbs().sum());
  }
  return nm * ni;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("SystemDescription: " + msg);
}

}  // namespace

void SystemDescription::validate() const {
  require(n > 0 && p > 0 && q > 0 && r > 0, "dimensions must be positive");
  require(p == q + r, "p must equal q + r");
  require(n >= p, "n must be at least p");
  const int m = n - p;
  require(A11b.rows() == q && A11b.cols() == p, "A11b must be q x p");
  require(A12b.rows() == r && A12b.cols() == p, "A12b must be r x p");
  require(A21b.rows() == q && A21b.cols() == m, "A21b must be q x (n-p)");
  require(A22b.rows() == r && A22b.cols() == m, "A22b must be r x (n-p)");
  require(A21.rows() == m && A21.cols() == p, "A21 must be (n-p) x p");
  require(A22.rows() == m && A22.cols() == m, "A22 must be (n-p) x (n-p)");
  require(Tbar.rows() == p && Tbar.cols() == p, "Tbar must be p x p");
  require(T.rows() == n && T.cols() == n, "T must be n x n");
  require(static_cast<bool>(W_g1) && static_cast<bool>(W_g2) && static_cast<bool>(g2) &&
              static_cast<bool>(Phi1) && static_cast<bool>(Phi2) && static_cast<bool>(phi2),
          "all function slots must be bound");
  require(gamma2 >= 0.0 && gamma_g1 >= 0.0 && gamma_g2 >= 0.0,
          "Lipschitz constants must be nonnegative");
  if (!design::is_hurwitz(A22))
    throw std::invalid_argument("SystemDescription: A22 is not Hurwitz");
  if (condition_1norm(Tbar) > cond_bound)
    throw std::invalid_argument("SystemDescription: Tbar condition number above bound");
  if (condition_1norm(T) > cond_bound)
    throw std::invalid_argument("SystemDescription: T condition number above bound");
}

void ObserverState::validate(const SystemDescription& sys) const {
  const int m = sys.n - sys.p;
  if (zhat_y1.size() != sys.q || zhat_y2.size() != sys.r || zhat2.size() != m ||
      theta_hat.size() != sys.q)
    throw std::invalid_argument("ObserverState: dimension mismatch");
  if (static_cast<int>(ch_y1.size()) != sys.q || static_cast<int>(ch_y2.size()) != sys.r ||
      static_cast<int>(diff.size()) != sys.q)
    throw std::invalid_argument("ObserverState: channel count mismatch");
  for (const auto& c : ch_y1) c.validate();
  for (const auto& c : ch_y2) c.validate();
  for (const auto& d : diff) d.validate();
  if (K.rows() != sys.q || K.cols() != sys.q)
    throw std::invalid_argument("ObserverState: K must be q x q");
}

ObserverState make_observer_state(const SystemDescription& sys,
                                  const Eigen::VectorXd& y0,
                                  const Eigen::VectorXd& zhat2_0,
                                  const Eigen::VectorXd& theta0,
                                  const Eigen::MatrixXd& K,
                                  const ChannelParams& cp_y1,
                                  const ChannelParams& cp_y2,
                                  double diff_L0) {
  ObserverState st;
  auto [zy1, zy2] = split_outputs(y0, sys);
  st.zhat_y1 = zy1;
  st.zhat_y2 = zy2;
  st.zhat2 = zhat2_0;
  st.theta_hat = theta0;
  st.K = K;
  auto mk = [](const ChannelParams& cp) {
    sosm::StwChannel ch;
    ch.phi = 0.0;
    ch.L = cp.L0;
    ch.dead_zone = cp.dead_zone;
    ch.k_rate = cp.k_rate;
    ch.L_max = cp.L_max;
    return ch;
  };
  st.ch_y1.assign(sys.q, mk(cp_y1));
  st.ch_y2.assign(sys.r, mk(cp_y2));
  sosm::DifferentiatorState d;
  d.L0 = diff_L0;
  st.diff.assign(sys.q, d);
  for (int i = 0; i < sys.q; ++i) st.diff[i].z0 = zy1[i];
  st.validate(sys);
  return st;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> split_outputs(
    const Eigen::VectorXd& y, const SystemDescription& sys) {
  if (y.size() != sys.p)
    throw std::invalid_argument("split_outputs: y must have p entries");
  if (!y.allFinite()) throw std::invalid_argument("split_outputs: y must be finite");
  const Eigen::VectorXd zy = sys.Tbar * y;
  return {zy.head(sys.q), zy.tail(sys.r)};
}

Injections observer_step(ObserverState& st, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& u, double dt,
                         const SystemDescription& sys) {
  if (!(dt > 0.0)) throw std::invalid_argument("observer_step: dt must be positive");
  auto [zy1, zy2] = split_outputs(y, sys);

  Injections inj;
  inj.mu_y1.resize(sys.q);
  inj.mu_y2.resize(sys.r);
  for (int i = 0; i < sys.q; ++i) {
    const double e = zy1[i] - st.zhat_y1[i];
    inj.mu_y1[i] = sosm::stw_step(st.ch_y1[i], e, dt);
    sosm::adapt_gain(st.ch_y1[i], e, dt);
  }
  for (int i = 0; i < sys.r; ++i) {
    const double e = zy2[i] - st.zhat_y2[i];
    inj.mu_y2[i] = sosm::stw_step(st.ch_y2[i], e, dt);
    sosm::adapt_gain(st.ch_y2[i], e, dt);
  }

  // slots and injections at step start
  const Eigen::VectorXd wg1 = sys.W_g1(y, st.zhat2, u);
  const Eigen::VectorXd wg2 = sys.W_g2(y, st.zhat2, u);
  const Eigen::VectorXd g2v = sys.g2(y, st.zhat2, u);
  const Eigen::MatrixXd phi1 = sys.Phi1(y, u);
  const Eigen::MatrixXd phi2 = sys.phi2(y, u);

  st.zhat_y1 += dt * (sys.A11b * y + sys.A21b * st.zhat2 + wg1 +
                      phi1 * st.theta_hat + inj.mu_y1);
  st.zhat_y2 += dt * (sys.A12b * y + sys.A22b * st.zhat2 + wg2 + inj.mu_y2);

  // linearly implicit in A22: (I - dt A22) zhat2' = zhat2 + dt * (rest)
  const int m = sys.n - sys.p;
  if (m > 0) {
    const Eigen::VectorXd rest = sys.A21 * y + g2v + phi2 * st.theta_hat;
    const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(m, m) - dt * sys.A22;
    st.zhat2 = lhs.partialPivLu().solve(st.zhat2 + dt * rest);
  }

  if (!st.zhat_y1.allFinite() || !st.zhat_y2.allFinite() || !st.zhat2.allFinite()) {
    throw numeric_error("observer_step: non-finite state after update");
  }
  return inj;
}

void adaptive_param_step(ObserverState& st, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& u,
                         const Eigen::VectorXd& zy1_dot_est, double dt,
                         const SystemDescription& sys) {
  if (!(dt > 0.0)) throw std::invalid_argument("adaptive_param_step: dt must be positive");
  if (zy1_dot_est.size() != sys.q)
    throw std::invalid_argument("adaptive_param_step: estimate must have q entries");
  const Eigen::MatrixXd phi1 = sys.Phi1(y, u);
  const Eigen::MatrixXd K = sys.phi1_constant
                                ? st.K
                                : design::solve_gain_K(phi1, sys.gamma_g1, st.eps_k);
  const Eigen::VectorXd residual = sys.A11b * y + sys.A21b * st.zhat2 +
                                   sys.W_g1(y, st.zhat2, u) + phi1 * st.theta_hat -
                                   zy1_dot_est;
  st.theta_hat -= dt * (K * residual);
  if (!st.theta_hat.allFinite())
    throw numeric_error("adaptive_param_step: non-finite parameter estimate");
}

FaultEstimate reconstruct_fault(const Eigen::VectorXd& mu_y2,
                                const Eigen::VectorXd& y,
                                const Eigen::VectorXd& u,
                                const SystemDescription& sys,
                                FaultFilter& filter, double dt) {
  if (mu_y2.size() != sys.r)
    throw std::invalid_argument("reconstruct_fault: mu_y2 must have r entries");
  if (!filter.primed) {
    filter.smoothed = Eigen::VectorXd::Zero(sys.r);
    filter.primed = true;
  }
  FaultEstimate est;
  est.raw_injection = mu_y2;

  const Eigen::MatrixXd phi2 = sys.Phi2(y, u);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(phi2);
  bool ok = lu.isInvertible();
  Eigen::MatrixXd inv;
  if (ok) {
    inv = lu.inverse();
    ok = inv.norm() <= filter.inv_norm_bound;
  }
  if (!ok) {
    est.valid = false;
    est.f_hat = Eigen::VectorXd::Constant(sys.r, std::numeric_limits<double>::quiet_NaN());
    est.smoothed = filter.smoothed;  // hold
    return est;
  }
  est.valid = true;
  est.f_hat = inv * mu_y2;
  filter.smoothed += (dt / filter.time_constant) * (est.f_hat - filter.smoothed);
  est.smoothed = filter.smoothed;
  return est;
}

Diagnostics error_diagnostics(const Eigen::VectorXd& x_truth,
                              const Eigen::VectorXd& theta_truth,
                              const ObserverState& st,
                              const SystemDescription& sys,
                              const Eigen::MatrixXd& P1) {
  if (x_truth.size() != sys.n)
    throw std::invalid_argument("error_diagnostics: x_truth must have n entries");
  const Eigen::VectorXd z = sys.T * x_truth;
  const Eigen::VectorXd zy = sys.Tbar * z.head(sys.p);
  Diagnostics d;
  d.e_y1 = zy.head(sys.q) - st.zhat_y1;
  d.e_y2 = zy.tail(sys.r) - st.zhat_y2;
  d.e2 = z.tail(sys.n - sys.p) - st.zhat2;
  d.theta_tilde = theta_truth - st.theta_hat;
  d.V1 = design::lyapunov_value(d.e2, d.theta_tilde, P1);
  return d;
}

}  // namespace stwobs::observer
