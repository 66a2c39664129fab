#pragma once

#include "klein_pilot/error.hpp"
#include "klein_pilot/spinor.hpp"
#include "klein_pilot/wavepacket.hpp"

namespace klein_pilot {

/// Densities below this are nodes of the field.
inline constexpr double node_density = 1e-30;

struct CurrentSample {
  double density = 0.0;    ///< J0
  double current = 0.0;    ///< J1
  double velocity = 0.0;   ///< lab-frame dx/dt
  double direction = 1.0;  ///< +1 forward, -1 time-reversed region
};

/// J0, J1 and v = direction * J1 / J0. A time-reversed region carries the
/// conserved current -J1, hence the sign.
inline CurrentSample current(const Spinor2& psi, double direction = 1.0) {
  CurrentSample c;
  c.density = psi.density();
  c.current = psi.current();
  c.direction = direction;
  if (!(c.density >= node_density)) throw error(errc::node_point, "density below the node threshold");
  c.velocity = direction * c.current / c.density;
  return c;
}

struct Acceleration {
  double a_L = 0.0;  ///< transport of the density and current profile
  double a_S = 0.0;  ///< mass coupling through psi^dagger sigma_y psi

  double total() const { return a_L + a_S; }
};

/// dv/dt along the flow split into a_L + a_S:
///   a_L = [-(1 + v^2) dJ0/dx + 2 s v dJ1/dx] / J0
///   a_S = -2 s m (psi^dagger sigma_y psi) / J0
/// with s the time direction at x.
inline Acceleration acceleration_decomposition(const Wavefield& wf, double x, double t) {
  const SpinorJet j = wf.jet(x, t);
  const double s = wf.time_direction(x);
  const CurrentSample c = current(j.value, s);
  const complex& u = j.value.upper;
  const complex& l = j.value.lower;
  const complex& du = j.dx.upper;
  const complex& dl = j.dx.lower;
  const double dJ0 = 2.0 * (std::conj(u) * du + std::conj(l) * dl).real();
  const double dJ1 = 2.0 * (std::conj(du) * l + std::conj(u) * dl).real();
  const double v = c.velocity;
  Acceleration a;
  a.a_L = (-(1.0 + v * v) * dJ0 + 2.0 * s * v * dJ1) / c.density;
  a.a_S = -2.0 * s * wf.scenario().mass * j.value.spin_y() / c.density;
  return a;
}

inline Acceleration acceleration_decomposition(const Scenario& s, double x, double t) {
  return acceleration_decomposition(Wavefield(s), x, t);
}

}  // namespace klein_pilot
