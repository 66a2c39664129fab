#pragma once

/// @file dirac_modes.hpp
/// Stationary solutions of the one-dimensional Dirac equation
///   E psi = -i sigma_x d/dx psi + m sigma_z psi + V(x) psi     (hbar = c = 1)
/// for free space, a potential step at x = 0 and a rectangular barrier on [0, L].
///
/// Region I (x < 0):  A (1,  beta) e^{+ipx} + R (1, -beta) e^{-ipx},  beta  = p / (E + m)
/// Region II:         B (1, alpha) e^{+i eta k x} + D (1, -alpha) e^{-i eta k x},
///                    alpha = k / (E - V + m); the step keeps only the B term, named T.
/// Region III (x > L): T (1, beta) e^{+ipx}
///
/// eta = -1 selects the time-reversed interior (Klein regime), whose spatial phase is
/// conjugated relative to the forward solution. Matching both components at each
/// interface gives the closed forms below with kappa = alpha / beta.

#include <cmath>
#include <complex>
#include <string>

#include "klein_pilot/error.hpp"
#include "klein_pilot/spinor.hpp"

namespace klein_pilot {

enum class Geometry { step, barrier };

/// Energy regime relative to the potential: Free (V = 0), Case1 (E > V + m),
/// Case2 (V - m < E < V + m, evanescent), Case3 (m < E < V - m, Klein).
enum class Regime { free, case1, case2, case3 };

struct CaseLabel {
  Regime regime = Regime::free;
  Geometry geometry = Geometry::step;

  friend bool operator==(const CaseLabel&, const CaseLabel&) = default;
};

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::free: return "free";
    case Regime::case1: return "case1";
    case Regime::case2: return "case2";
    case Regime::case3: return "case3";
  }
  return "?";
}

inline std::string to_string(Geometry g) { return g == Geometry::step ? "step" : "barrier"; }

/// Natural units: mass, potential height and energy share one unit; width is a length.
struct PhysicalParams {
  double mass = 1.0;
  double potential = 0.0;
  double width = 0.0;  ///< 0 selects the step geometry
  double energy = 0.0;
};

inline constexpr double band_edge_tolerance = 1e-12;
inline constexpr double kappa_singular_tolerance = 1e-14;
inline constexpr double barrier_overflow_exponent = 700.0;

inline void validate(const PhysicalParams& pp) {
  if (!(pp.mass > 0.0)) throw error(errc::invalid_argument, "mass must be positive");
  if (!(pp.potential >= 0.0)) throw error(errc::invalid_argument, "potential must be >= 0");
  if (!(pp.width >= 0.0)) throw error(errc::invalid_argument, "width must be >= 0");
  if (!(pp.energy > pp.mass))
    throw error(errc::invalid_argument, "energy must exceed the mass (propagating incident wave)");
}

inline CaseLabel classify_case(const PhysicalParams& pp) {
  validate(pp);
  const Geometry g = pp.width > 0.0 ? Geometry::barrier : Geometry::step;
  if (pp.potential == 0.0) return {Regime::free, g};
  const double E = pp.energy, V = pp.potential, m = pp.mass;
  if (std::abs(E - (V + m)) < band_edge_tolerance || std::abs(E - (V - m)) < band_edge_tolerance)
    throw error(errc::degenerate_energy, "energy sits on a band edge V +/- m");
  if (E > V + m) return {Regime::case1, g};
  if (E > V - m) return {Regime::case2, g};
  return {Regime::case3, g};
}

enum class MomentumBranch { propagating, evanescent };

struct Momentum {
  complex value{};
  MomentumBranch branch = MomentumBranch::propagating;
};

/// p = +sqrt(E^2 - m^2)
inline Momentum incident_momentum(double energy, double mass) {
  return {complex(std::sqrt(energy * energy - mass * mass), 0.0), MomentumBranch::propagating};
}

/// k = +sqrt((E - V)^2 - m^2); inside the gap the root is i sqrt(m^2 - (E - V)^2),
/// which decays toward +infinity.
inline Momentum interior_momentum(double energy, double potential, double mass) {
  const double kinetic = energy - potential;
  const double disc = kinetic * kinetic - mass * mass;
  if (disc >= 0.0) return {complex(std::sqrt(disc), 0.0), MomentumBranch::propagating};
  return {complex(0.0, std::sqrt(-disc)), MomentumBranch::evanescent};
}

/// Plane-wave piece amplitude * (upper, lower) * e^{i wavenumber x}.
struct PlaneWaveMode {
  complex amplitude{1.0};
  complex upper{1.0};
  complex lower{};
  complex wavenumber{};

  Spinor2 at(double x) const {
    const complex phase = amplitude * std::exp(complex(0.0, 1.0) * wavenumber * x);
    return {phase * upper, phase * lower};
  }
};

/// Conjugates the spatial phase of a negative-energy region mode. The spinor column is
/// untouched, so the value at x = 0 is preserved and applying it twice is the identity.
inline PlaneWaveMode time_reverse_mode(PlaneWaveMode mode) {
  mode.wavenumber = -std::conj(mode.wavenumber);
  return mode;
}

struct ScatteringSolution {
  PhysicalParams params;
  CaseLabel label;
  complex kappa{};
  complex A{1.0}, R{}, T{}, B{}, D{};
  Momentum p, k;
  bool time_reversed = false;
  /// Barrier only: evanescent decay exceeded the overflow guard and the
  /// total-reflection limit was returned.
  bool overflow = false;

  double beta() const { return p.value.real() / (params.energy + params.mass); }
  complex alpha() const { return k.value / (params.energy - params.potential + params.mass); }
  /// Sign of the interior spatial phase: +1 forward, -1 time-reversed.
  double eta() const { return time_reversed ? -1.0 : 1.0; }

  PlaneWaveMode incident() const { return {A, 1.0, beta(), p.value}; }
  PlaneWaveMode reflected() const { return {R, 1.0, -beta(), -p.value}; }
  PlaneWaveMode interior_forward() const {
    const complex amp = label.geometry == Geometry::step ? T : B;
    return {amp, 1.0, alpha(), eta() * k.value};
  }
  PlaneWaveMode interior_backward() const { return {D, 1.0, -alpha(), -eta() * k.value}; }
  PlaneWaveMode transmitted() const { return {T, 1.0, beta(), p.value}; }

  /// phi_E(x) stitched across regions (psi_II replaced by its time-reversed form when flagged).
  Spinor2 at(double x) const {
    if (x < 0.0) return incident().at(x) + reflected().at(x);
    if (label.geometry == Geometry::step) return interior_forward().at(x);
    if (x <= params.width) return interior_forward().at(x) + interior_backward().at(x);
    return transmitted().at(x);
  }
};

namespace detail {

inline complex matching_ratio(const PhysicalParams& pp, const Momentum& p, const Momentum& k) {
  return (k.value / p.value) * ((pp.energy + pp.mass) / (pp.energy - pp.potential + pp.mass));
}

inline ScatteringSolution prepare(const PhysicalParams& pp, complex amplitude) {
  ScatteringSolution sol;
  sol.params = pp;
  sol.label = classify_case(pp);
  sol.p = incident_momentum(pp.energy, pp.mass);
  sol.k = interior_momentum(pp.energy, pp.potential, pp.mass);
  sol.kappa = matching_ratio(pp, sol.p, sol.k);
  sol.A = amplitude;
  sol.time_reversed = sol.label.regime == Regime::case3;
  if (std::abs(1.0 + sol.kappa) < kappa_singular_tolerance)
    throw error(errc::kappa_singular, "kappa = -1");
  return sol;
}

}  // namespace detail

/// R = A (1 - kappa) / (1 + kappa), T = 2A / (1 + kappa).
inline ScatteringSolution step_solution(PhysicalParams pp, complex amplitude = 1.0) {
  pp.width = 0.0;
  ScatteringSolution sol = detail::prepare(pp, amplitude);
  sol.R = amplitude * (1.0 - sol.kappa) / (1.0 + sol.kappa);
  sol.T = amplitude * 2.0 / (1.0 + sol.kappa);
  return sol;
}

inline ScatteringSolution barrier_solution(const PhysicalParams& pp, complex amplitude = 1.0) {
  if (!(pp.width > 0.0)) throw error(errc::invalid_argument, "barrier width must be positive");
  ScatteringSolution sol = detail::prepare(pp, amplitude);
  const complex kappa = sol.kappa;
  const double L = pp.width;
  const complex i(0.0, 1.0);

  if (sol.k.branch == MomentumBranch::evanescent &&
      sol.k.value.imag() * L > barrier_overflow_exponent) {
    sol.overflow = true;
    sol.R = amplitude * (1.0 - kappa) / (1.0 + kappa);
    sol.T = 0.0;
    sol.B = amplitude * 2.0 / (1.0 + kappa);
    sol.D = 0.0;
    return sol;
  }

  const double eta = sol.eta();
  const complex ep = std::exp(i * eta * sol.k.value * L);   // e^{+i eta k L}
  const complex em = std::exp(-i * eta * sol.k.value * L);  // e^{-i eta k L}
  const complex den = em * (1.0 + kappa) * (1.0 + kappa) - ep * (1.0 - kappa) * (1.0 - kappa);
  const complex exit_phase = std::exp(i * sol.p.value * L);

  sol.T = amplitude * 4.0 * kappa / (exit_phase * den);
  sol.R = amplitude * (1.0 - kappa * kappa) * (em - ep) / den;
  sol.B = sol.T * exit_phase * em * (kappa + 1.0) / (2.0 * kappa);
  sol.D = sol.T * exit_phase * ep * (kappa - 1.0) / (2.0 * kappa);
  return sol;
}

/// Convenience dispatcher on params.width.
inline ScatteringSolution scattering_solution(const PhysicalParams& pp, complex amplitude = 1.0) {
  return pp.width > 0.0 ? barrier_solution(pp, amplitude) : step_solution(pp, amplitude);
}

/// Mean number of pairs created at a Klein step: -4 kappa / (1 - kappa)^2 |R|^2.
inline double pair_production_count(const ScatteringSolution& sol) {
  if (sol.label.geometry != Geometry::step || sol.label.regime != Regime::case3)
    throw error(errc::wrong_case, "pair production count needs a Klein-regime step");
  const double kappa = sol.kappa.real();
  return -4.0 * kappa / ((1.0 - kappa) * (1.0 - kappa)) * std::norm(sol.R);
}

}  // namespace klein_pilot
