#include "stwobs/sosm.hpp"

#include <cmath>
#include <stdexcept>

namespace stwobs::sosm {

void StwChannel::validate() const {
  if (!(L > 0.0)) throw std::invalid_argument("StwChannel: L must be positive");
  if (!(L <= L_max)) throw std::invalid_argument("StwChannel: L exceeds L_max");
  if (dead_zone < 0.0) throw std::invalid_argument("StwChannel: dead_zone must be nonnegative");
  if (!(k_rate > 0.0)) throw std::invalid_argument("StwChannel: k_rate must be positive");
}

std::pair<double, double> gains_from_L(double L) {
  if (!(L > 0.0)) throw std::domain_error("gains_from_L: L must be positive");
  return {2.0 * std::sqrt(L), 4.0 * L};
}

double stw_step(StwChannel& ch, double e, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("stw_step: dt must be positive");
  const auto [lambda, alpha] = gains_from_L(ch.L);
  const double s = sgn(e);
  const double mu = lambda * std::sqrt(std::abs(e)) * s + ch.phi;
  ch.phi += alpha * s * dt;
  return mu;
}

void adapt_gain(StwChannel& ch, double e, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("adapt_gain: dt must be positive");
  if (std::abs(e) > ch.dead_zone) {
    ch.L = std::min(ch.L + ch.k_rate * dt, ch.L_max);
  }
}

void DifferentiatorState::validate() const {
  if (!(L0 > 0.0)) throw std::invalid_argument("DifferentiatorState: L0 must be positive");
}

void differentiator_step(DifferentiatorState& d, double input, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("differentiator_step: dt must be positive");
  if (!(d.L0 > 0.0)) throw std::invalid_argument("differentiator_step: L0 must be positive");
  constexpr double lambda0 = 1.0;
  constexpr double alpha0 = 1.1;
  const double e = d.z0 - input;
  const double s = sgn(e);
  const double z0dot = -lambda0 * std::sqrt(d.L0) * std::sqrt(std::abs(e)) * s + d.z1;
  const double z1dot = -alpha0 * d.L0 * s;
  d.z0 += dt * z0dot;
  d.z1 += dt * z1dot;
}

}  // namespace stwobs::sosm
