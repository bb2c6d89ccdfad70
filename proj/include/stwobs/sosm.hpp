#pragma once

#include <utility>

namespace stwobs::sosm {

/// Scalar super-twisting injection channel with a dead-zone adaptive gain.
///
/// The injection is mu(e) = lambda(L) * sqrt(|e|) * sign(e) + phi, where phi
/// integrates alpha(L) * sign(e). Both gains are slaved to the single
/// adaptive parameter L through gains_from_L(); L grows at k_rate while the
/// sliding variable sits outside the dead zone and is frozen inside it.
struct StwChannel {
  double phi = 0.0;         ///< integral state of the injection
  double L = 1.0;           ///< adaptive gain, strictly positive
  double dead_zone = 1e-3;  ///< gain-freeze band, in the channel's units
  double k_rate = 500.0;    ///< gain growth rate per second
  double L_max = 1e6;       ///< saturation cap for L

  void validate() const;
};

/// Gain pair (lambda, alpha) = (2*sqrt(L), 4*L).
/// Throws std::domain_error for L <= 0.
std::pair<double, double> gains_from_L(double L);

/// One explicit-Euler step of the injection. Returns mu evaluated with the
/// incoming phi, then advances phi by alpha(L)*sign(e)*dt. sign(0) is 0, so
/// e = 0 leaves the channel untouched and mu equal to phi.
double stw_step(StwChannel& ch, double e, double dt);

/// Dead-zone adaptation: L grows at k_rate while |e| > dead_zone and
/// saturates at L_max; inside the band L is frozen.
void adapt_gain(StwChannel& ch, double e, double dt);

/// Two-state robust exact differentiator. Internal gains are fixed at
/// lambda0 = 1, alpha0 = 1.1; L0 must bound the magnitude of the input's
/// second derivative for exact tracking.
struct DifferentiatorState {
  double z0 = 0.0;  ///< signal estimate
  double z1 = 0.0;  ///< derivative estimate
  double L0 = 1.0;  ///< second-derivative bound, strictly positive

  void validate() const;
};

/// One explicit-Euler step of the differentiator driven by the sampled
/// input. Start with z0 equal to the first sample (and z1 = 0) so that a
/// constant signal is differentiated exactly, with zero steady error.
void differentiator_step(DifferentiatorState& d, double input, double dt);

/// sign with sign(0) defined as 0.
inline double sgn(double v) { return static_cast<double>(v > 0.0) - static_cast<double>(v < 0.0); }

}  // namespace stwobs::sosm
