#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <string>
#include <vector>

#include "klein_pilot/dirac_modes.hpp"
#include "klein_pilot/error.hpp"

namespace klein_pilot {

/// Gaussian packet: mean momentum K0, mean position X0, position spread lambda.
struct PacketParams {
  double k0 = 0.0;
  double x0 = 0.0;
  double spread = 1.0;
  /// Overall complex factor on G.
  complex amplitude{1.0};
};

/// Open energy interval and Gauss-Legendre order used for the packet integral.
struct EnergyDomain {
  double lower = 0.0;
  double upper = 0.0;
  int order = 2;
};

enum class SamplingMode { gaussian, born };

/// Mode content of a packet without potential.
///  travelling: the V = 0 step solution (R = 0, T = 1), one right-moving packet.
///  standing:   A = R = 1 standing waves of both energy signs; the negative-energy
///              branch enters with relative phase i so the spinor at the packet
///              centre is (1, i) and the packet is initially at rest.
enum class FreePacket { travelling, standing };

inline std::string to_string(SamplingMode s) { return s == SamplingMode::gaussian ? "gaussian" : "born"; }
inline std::string to_string(FreePacket f) { return f == FreePacket::travelling ? "travelling" : "standing"; }

struct Scenario {
  std::string name = "custom";
  Geometry geometry = Geometry::step;
  double mass = 1.0;
  double potential = 0.0;
  double width = 0.0;
  PacketParams packet;
  int quadrature_order = 256;
  /// Energy nodes are restricted to where |G(p)| exceeds this value.
  double gaussian_cutoff = 1e-16;
  double box_half_width = 1500.0;
  double dx = 2.0;
  double final_time = 1600.0;
  /// Base trajectory step.
  double dt = 0.1;
  double plot_dx = 10.0;
  double plot_dt = 20.0;
  int ensemble_size = 50;
  SamplingMode sampling = SamplingMode::gaussian;
  std::uint64_t rng_seed = 1;
  FreePacket free_packet = FreePacket::travelling;
  double quadrature_tolerance = 1e-4;
  double ledger_tolerance = 5e-3;
};

inline double mean_energy(const Scenario& s) {
  return std::sqrt(s.packet.k0 * s.packet.k0 + s.mass * s.mass);
}

inline double mean_velocity(const Scenario& s) { return s.packet.k0 / mean_energy(s); }

inline PhysicalParams physical_params(const Scenario& s) {
  return {s.mass, s.potential, s.geometry == Geometry::barrier ? s.width : 0.0, mean_energy(s)};
}

inline void validate(const Scenario& s) {
  auto fail = [](const std::string& what) { throw error(errc::invalid_argument, what); };
  if (!(s.mass > 0.0)) fail("mass must be positive");
  if (!(s.potential >= 0.0)) fail("potential must be >= 0");
  if (s.geometry == Geometry::barrier && !(s.width > 0.0)) fail("barrier width must be positive");
  if (!(s.packet.spread > 0.0)) fail("packet spread must be positive");
  if (s.quadrature_order < 2) fail("quadrature order must be >= 2");
  if (!(s.gaussian_cutoff > 0.0 && s.gaussian_cutoff < 1.0)) fail("gaussian cutoff must lie in (0, 1)");
  if (!(s.box_half_width > 0.0)) fail("box half-width must be positive");
  if (!(s.dx > 0.0) || !(s.plot_dx > 0.0) || !(s.plot_dt > 0.0)) fail("grid spacings must be positive");
  if (!(s.final_time > 0.0)) fail("final time must be positive");
  if (!(s.dt > 0.0)) fail("time step must be positive");
  if (s.ensemble_size < 1) fail("ensemble size must be >= 1");
  if (s.geometry == Geometry::barrier && s.width >= s.box_half_width) fail("barrier does not fit in the box");
  if (std::abs(s.packet.x0) >= s.box_half_width) fail("packet centre outside the box");
}

/// Case label of the packet's mean energy. A zero potential is Free regardless of K0.
inline CaseLabel case_label(const Scenario& s) {
  validate(s);
  if (s.potential == 0.0) return {Regime::free, s.geometry};
  return classify_case(physical_params(s));
}

/// Open energy band of the regime: D1 = (V+m, V+2m), D2 = (V-m, V+m), D3 = (m, V-m).
inline std::pair<double, double> regime_band(const Scenario& s) {
  const double m = s.mass, V = s.potential;
  switch (case_label(s).regime) {
    case Regime::free: return {m, std::numeric_limits<double>::infinity()};
    case Regime::case1: return {V + m, V + 2.0 * m};
    case Regime::case2: return {std::max(m, V - m), V + m};
    case Regime::case3: return {m, V - m};
  }
  return {m, m};
}

/// The regime band intersected with the support of G, kept strictly inside the band.
inline EnergyDomain energy_domain(const Scenario& s) {
  const auto [band_lo, band_hi] = regime_band(s);
  const double reach = std::sqrt(2.0 * std::log(1.0 / s.gaussian_cutoff)) / s.packet.spread;
  const double p_lo = std::max(0.0, s.packet.k0 - reach);
  const double p_hi = s.packet.k0 + reach;
  const double m = s.mass;
  const double margin = 16.0 * band_edge_tolerance;
  const double lo = std::max(std::sqrt(p_lo * p_lo + m * m), band_lo + margin);
  const double hi = std::min(std::sqrt(p_hi * p_hi + m * m), band_hi - margin);
  if (!(hi > lo)) throw error(errc::invalid_argument, "packet has no support inside the regime band");
  return {lo, hi, s.quadrature_order};
}

/// Lab-time orientation of the guidance law at x: -1 inside the Klein-regime
/// potential region (time-reversed interior), +1 elsewhere.
inline double time_direction(const Scenario& s, double x) {
  if (s.potential == 0.0 || case_label(s).regime != Regime::case3) return 1.0;
  if (x < 0.0) return 1.0;
  if (s.geometry == Geometry::barrier && x > s.width) return 1.0;
  return -1.0;
}

/// Potential interfaces inside the box.
inline std::vector<double> interfaces(const Scenario& s) {
  if (s.potential == 0.0) return {};
  if (s.geometry == Geometry::step) return {0.0};
  return {0.0, s.width};
}

/// Doubles the quadrature order and halves the spatial spacing `levels` times.
inline Scenario refined(Scenario s, int levels) {
  for (int i = 0; i < levels; ++i) {
    s.quadrature_order *= 2;
    s.dx *= 0.5;
  }
  return s;
}

}  // namespace klein_pilot
