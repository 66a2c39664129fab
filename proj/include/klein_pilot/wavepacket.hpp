#pragma once

/// @file wavepacket.hpp
/// Gaussian packets synthesized from stationary modes,
///   Psi(x, t) = sum_j w_j G(p_j) phi_{E_j}(x) e^{-i E_j t},
/// with Gauss-Legendre nodes E_j on the case's open energy window.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "klein_pilot/dirac_modes.hpp"
#include "klein_pilot/error.hpp"
#include "klein_pilot/parallel.hpp"
#include "klein_pilot/quadrature.hpp"
#include "klein_pilot/scenario.hpp"
#include "klein_pilot/spinor.hpp"

namespace klein_pilot {

/// G(p) = exp(-lambda^2 (p - K0)^2 / 2 - i p X0)
inline complex gaussian_weight(double p, const PacketParams& packet) {
  const double d = p - packet.k0;
  return std::exp(complex(-0.5 * packet.spread * packet.spread * d * d, -p * packet.x0));
}

namespace detail {

// Plain complex arithmetic for the mode sums; avoids the NaN-recovery path of
// std::complex multiplication in the hot loops.
struct cx {
  double re = 0.0, im = 0.0;
  constexpr cx operator+(cx o) const { return {re + o.re, im + o.im}; }
  constexpr cx operator-(cx o) const { return {re - o.re, im - o.im}; }
  constexpr cx operator*(cx o) const { return {re * o.re - im * o.im, re * o.im + im * o.re}; }
  constexpr cx operator*(double s) const { return {re * s, im * s}; }
  constexpr cx& operator+=(cx o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  constexpr cx conj() const { return {re, -im}; }
  /// multiply by i
  constexpr cx rot() const { return {-im, re}; }
  complex std() const { return {re, im}; }
};

inline cx to_cx(complex z) { return {z.real(), z.imag()}; }
inline cx unit_phase(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// e^{i a b} with the product formed and reduced mod 2 pi in extended precision,
/// so phases of thousands of radians keep full double accuracy.
inline cx unit_phase(double a, double b) {
  constexpr long double two_pi = 6.283185307179586476925286766559005768L;
  const long double theta = static_cast<long double>(a) * b;
  return unit_phase(static_cast<double>(theta - two_pi * std::round(theta / two_pi)));
}

}  // namespace detail

/// Mode table of one scenario. Immutable after construction and safe to share.
class Wavefield {
 public:
  explicit Wavefield(const Scenario& s) : scenario_(s), label_(case_label(s)), domain_(energy_domain(s)) {
    const QuadratureRule rule = gauss_legendre(domain_.order, domain_.lower, domain_.upper);
    const double m = s.mass;
    standing_ = label_.regime == Regime::free && s.free_packet == FreePacket::standing;
    reversed_ = label_.regime == Regime::case3;
    const std::size_t n = rule.size();
    modes_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      Mode& md = modes_[j];
      const double E = rule.nodes[j];
      md.energy = E;
      md.p = std::sqrt(E * E - m * m);
      md.beta = md.p / (E + m);
      md.weight = detail::to_cx(s.packet.amplitude * (rule.weights[j] * gaussian_weight(md.p, s.packet)));
      if (label_.regime == Regime::free) {
        md.R = {standing_ ? 1.0 : 0.0, 0.0};
        md.T = {1.0, 0.0};
        md.k = {md.p, 0.0};
        md.alpha = {md.beta, 0.0};
        continue;
      }
      const PhysicalParams pp{m, s.potential, s.geometry == Geometry::barrier ? s.width : 0.0, E};
      const ScatteringSolution sol = scattering_solution(pp);
      md.R = detail::to_cx(sol.R);
      md.T = detail::to_cx(sol.T);
      md.B = detail::to_cx(sol.B);
      md.D = detail::to_cx(sol.D);
      md.k = detail::to_cx(sol.k.value);
      md.alpha = detail::to_cx(sol.alpha());
    }
  }

  const Scenario& scenario() const { return scenario_; }
  const CaseLabel& label() const { return label_; }
  const EnergyDomain& domain() const { return domain_; }
  std::size_t modes() const { return modes_.size(); }

  /// -1 inside a time-reversed interior, +1 elsewhere.
  double time_direction(double x) const {
    if (!reversed_ || x < 0.0) return 1.0;
    if (label_.geometry == Geometry::barrier && x > scenario_.width) return 1.0;
    return -1.0;
  }

  Spinor2 operator()(double x, double t) const { return evaluate<false>(x, t, nullptr).value; }
  /// Value and analytic x-derivative.
  SpinorJet jet(double x, double t) const { return evaluate<true>(x, t, nullptr); }

  /// e^{-i E_j t} for every node; lets callers share one table between points
  /// on the same time slice.
  void time_phases(double t, std::vector<detail::cx>& out) const {
    out.resize(modes_.size());
    for (std::size_t j = 0; j < modes_.size(); ++j) out[j] = detail::unit_phase(-modes_[j].energy, t);
  }

  /// Same value as operator() with a table from time_phases(t).
  Spinor2 at(double x, const std::vector<detail::cx>& phases) const {
    return evaluate<false>(x, 0.0, phases.data()).value;
  }

  /// Per-mode spatial factors at x, split by time dependence:
  /// Psi(x, t) = sum_j pos_j e^{-i E_j t} + neg_j e^{+i E_j t}. neg is only filled
  /// for the standing free packet.
  void spatial_factors(double x, std::vector<Spinor2>& pos, std::vector<Spinor2>& neg) const {
    const std::size_t n = modes_.size();
    pos.resize(n);
    neg.assign(standing_ ? n : 0, Spinor2{});
    const Region r = region(x);
    for (std::size_t j = 0; j < n; ++j) {
      Terms tm;
      if (standing_)
        tm = mode_terms<false, Region::left, true>(modes_[j], x);
      else if (r == Region::left)
        tm = mode_terms<false, Region::left, false>(modes_[j], x);
      else if (r == Region::interior)
        tm = mode_terms<false, Region::interior, false>(modes_[j], x);
      else
        tm = mode_terms<false, Region::right, false>(modes_[j], x);
      pos[j] = {(modes_[j].weight * tm.u).std(), (modes_[j].weight * tm.l).std()};
      if (standing_) neg[j] = {(modes_[j].weight * tm.nu).std(), (modes_[j].weight * tm.nl).std()};
    }
  }

  /// Energies of the quadrature nodes.
  std::vector<double> energies() const {
    std::vector<double> e;
    e.reserve(modes_.size());
    for (const auto& md : modes_) e.push_back(md.energy);
    return e;
  }

 private:
  enum class Region { left, interior, right };

  struct Mode {
    double energy = 0.0, p = 0.0, beta = 0.0;
    detail::cx weight, R, T, B, D, k, alpha;
  };

  // Spatial spinor of one mode, without the weight; nu/nl carry the
  // negative-energy part of the standing packet.
  struct Terms {
    detail::cx u, l, du, dl, nu, nl, dnu, dnl;
  };

  Region region(double x) const {
    if (label_.regime == Regime::free || x < 0.0) return Region::left;
    if (label_.geometry == Geometry::step || x <= scenario_.width) return Region::interior;
    return Region::right;
  }

  template <bool Deriv, Region r, bool Standing>
  Terms mode_terms(const Mode& md, double x) const {
    using detail::cx;
    Terms tm;
    if constexpr (Standing) {
      // (1, beta) e^{ipx} + (1, -beta) e^{-ipx}, and i (-beta, 1) e^{ipx} + i (beta, 1) e^{-ipx}
      const cx e = detail::unit_phase(md.p, x), ei = e.conj();
      const cx sum = e + ei, diff = e - ei;
      tm.u = sum;
      tm.l = diff * md.beta;
      tm.nu = (diff * (-md.beta)).rot();
      tm.nl = sum.rot();
      if constexpr (Deriv) {
        const cx dsum = diff.rot() * md.p, ddiff = sum.rot() * md.p;
        tm.du = dsum;
        tm.dl = ddiff * md.beta;
        tm.dnu = (ddiff * (-md.beta)).rot();
        tm.dnl = dsum.rot();
      }
    } else if constexpr (r == Region::left) {
      const cx e = detail::unit_phase(md.p, x), ei = e.conj();
      const cx re = md.R * ei;
      tm.u = e + re;
      tm.l = (e - re) * md.beta;
      if constexpr (Deriv) {
        tm.du = (e - re).rot() * md.p;
        tm.dl = (e + re).rot() * (md.p * md.beta);
      }
    } else if constexpr (r == Region::interior) {
      // e^{i eta k x} with complex k
      const double eta = reversed_ ? -1.0 : 1.0;
      const cx ik = md.k.rot() * eta;
      const double mag = std::exp(ik.re * x);
      const cx f = detail::unit_phase(ik.im, x) * mag;
      if (label_.geometry == Geometry::step) {
        const cx a = md.T * f;
        tm.u = a;
        tm.l = md.alpha * a;
        if constexpr (Deriv) {
          tm.du = ik * a;
          tm.dl = md.alpha * ik * a;
        }
        return tm;
      }
      const cx b = md.B * f;
      // D vanishes in the overflow limit, where 1 / mag is not finite
      const cx d = md.D.re == 0.0 && md.D.im == 0.0 ? cx{} : md.D * ((f.conj() * (1.0 / mag)) * (1.0 / mag));
      tm.u = b + d;
      tm.l = md.alpha * (b - d);
      if constexpr (Deriv) {
        tm.du = ik * (b - d);
        tm.dl = md.alpha * ik * (b + d);
      }
    } else {
      const cx a = md.T * detail::unit_phase(md.p, x);
      tm.u = a;
      tm.l = a * md.beta;
      if constexpr (Deriv) {
        tm.du = a.rot() * md.p;
        tm.dl = a.rot() * (md.p * md.beta);
      }
    }
    return tm;
  }

  template <bool Deriv>
  SpinorJet evaluate(double x, double t, const detail::cx* phases) const {
    if (standing_) return evaluate_in<Deriv, Region::left, true>(x, t, phases);
    switch (region(x)) {
      case Region::left: return evaluate_in<Deriv, Region::left, false>(x, t, phases);
      case Region::interior: return evaluate_in<Deriv, Region::interior, false>(x, t, phases);
      case Region::right: return evaluate_in<Deriv, Region::right, false>(x, t, phases);
    }
    return {};
  }

  template <bool Deriv, Region r, bool Standing>
  SpinorJet evaluate_in(double x, double t, const detail::cx* phases) const {
    using detail::cx;
    cx u, l, du, dl;
    for (std::size_t j = 0; j < modes_.size(); ++j) {
      const Mode& md = modes_[j];
      const Terms tm = mode_terms<Deriv, r, Standing>(md, x);
      const cx ph = phases ? phases[j] : detail::unit_phase(-md.energy, t);
      const cx tp = ph * md.weight;
      u += tp * tm.u;
      l += tp * tm.l;
      if constexpr (Deriv) {
        du += tp * tm.du;
        dl += tp * tm.dl;
      }
      if constexpr (Standing) {
        const cx tn = ph.conj() * md.weight;
        u += tn * tm.nu;
        l += tn * tm.nl;
        if constexpr (Deriv) {
          du += tn * tm.dnu;
          dl += tn * tm.dnl;
        }
      }
    }
    return {{u.std(), l.std()}, {du.std(), dl.std()}};
  }

  Scenario scenario_;
  CaseLabel label_;
  EnergyDomain domain_;
  bool standing_ = false;
  bool reversed_ = false;
  std::vector<Mode> modes_;
};

/// Uniform nodes lo, lo + h, ..., hi. The span must be a whole number of steps.
inline std::vector<double> uniform_nodes(double lo, double hi, double h) {
  const double count = (hi - lo) / h;
  const auto n = static_cast<std::size_t>(std::llround(count));
  if (std::abs(count - static_cast<double>(n)) > 1e-9 * std::max(1.0, count))
    throw error(errc::invalid_argument, "interval is not a whole number of grid steps");
  std::vector<double> v(n + 1);
  for (std::size_t i = 0; i <= n; ++i) v[i] = lo + static_cast<double>(i) * h;
  v[n] = hi;
  return v;
}

/// Sampled Psi on a rectangular (t, x) lattice, row-major in t then x.
struct FieldGrid {
  std::vector<double> x;
  std::vector<double> t;
  std::vector<Spinor2> psi;
  std::vector<double> density;
  std::vector<double> current;

  std::size_t index(std::size_t it, std::size_t ix) const { return it * x.size() + ix; }

  std::span<const double> density_slice(std::size_t it) const {
    return {density.data() + it * x.size(), x.size()};
  }

  /// Index of the node equal to value within a relative 1e-9 of the spacing.
  static std::optional<std::size_t> node_index(const std::vector<double>& nodes, double value) {
    if (nodes.empty()) return std::nullopt;
    if (nodes.size() == 1) return nodes[0] == value ? std::optional<std::size_t>(0) : std::nullopt;
    const double h = nodes[1] - nodes[0];
    const double pos = (value - nodes[0]) / h;
    const long long i = std::llround(pos);
    if (i < 0 || i >= static_cast<long long>(nodes.size())) return std::nullopt;
    if (std::abs(nodes[static_cast<std::size_t>(i)] - value) > 1e-9 * std::abs(h)) return std::nullopt;
    return static_cast<std::size_t>(i);
  }

  std::optional<std::size_t> time_index(double time) const { return node_index(t, time); }
  std::optional<std::size_t> space_index(double pos) const { return node_index(x, pos); }
};

/// Separable synthesis: per x the mode spatial factors, then one phase sum per t.
inline FieldGrid synthesize_field(const Wavefield& wf, std::vector<double> xs, std::vector<double> ts) {
  FieldGrid g;
  g.x = std::move(xs);
  g.t = std::move(ts);
  const std::size_t nx = g.x.size(), nt = g.t.size();
  g.psi.assign(nx * nt, Spinor2{});
  g.density.assign(nx * nt, 0.0);
  g.current.assign(nx * nt, 0.0);

  const std::vector<double> E = wf.energies();
  const std::size_t n = E.size();
  std::vector<detail::cx> phase(nt * n);
  for (std::size_t it = 0; it < nt; ++it)
    for (std::size_t j = 0; j < n; ++j) phase[it * n + j] = detail::unit_phase(-E[j], g.t[it]);

  parallel_for(nx, [&](std::size_t ix) {
    thread_local std::vector<Spinor2> pos, neg;
    wf.spatial_factors(g.x[ix], pos, neg);
    for (std::size_t it = 0; it < nt; ++it) {
      detail::cx u, l;
      const detail::cx* ph = phase.data() + it * n;
      for (std::size_t j = 0; j < n; ++j) {
        u += ph[j] * detail::to_cx(pos[j].upper);
        l += ph[j] * detail::to_cx(pos[j].lower);
      }
      for (std::size_t j = 0; j < neg.size(); ++j) {
        u += ph[j].conj() * detail::to_cx(neg[j].upper);
        l += ph[j].conj() * detail::to_cx(neg[j].lower);
      }
      const std::size_t k = g.index(it, ix);
      g.psi[k] = {u.std(), l.std()};
      g.density[k] = g.psi[k].density();
      g.current[k] = g.psi[k].current();
    }
  });
  return g;
}

/// Box nodes at spacing dx; the box and, for a barrier, the width must be whole
/// multiples of dx so the interfaces are grid nodes.
inline std::vector<double> spatial_nodes(const Scenario& s, double spacing) {
  if (s.geometry == Geometry::barrier) {
    const double r = s.width / spacing;
    if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
      throw error(errc::invalid_argument, "barrier width is not a whole number of grid steps");
  }
  const double r = s.box_half_width / spacing;
  if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
    throw error(errc::invalid_argument, "box half-width is not a whole number of grid steps");
  return uniform_nodes(-s.box_half_width, s.box_half_width, spacing);
}

/// Total probability in the box at time t on the scenario's dx grid.
inline double total_probability(const Wavefield& wf, double t) {
  const Scenario& s = wf.scenario();
  const FieldGrid g = synthesize_field(wf, spatial_nodes(s, s.dx), {t});
  return simpson(g.density_slice(0), s.dx);
}

struct QuadratureCheck {
  double probability = 0.0;          ///< order N
  double probability_doubled = 0.0;  ///< order 2N
  double relative_change = 0.0;
};

/// Compares the t = 0 total probability at orders N and 2N.
inline QuadratureCheck check_quadrature(const Scenario& s) {
  Scenario doubled = s;
  doubled.quadrature_order *= 2;
  QuadratureCheck c;
  c.probability = total_probability(Wavefield(s), 0.0);
  c.probability_doubled = total_probability(Wavefield(doubled), 0.0);
  c.relative_change = std::abs(c.probability - c.probability_doubled) /
                      std::max(std::abs(c.probability_doubled), std::numeric_limits<double>::min());
  return c;
}

/// Field on the scenario's dx grid at t = 0 and t = final_time, after the
/// quadrature-doubling check.
inline FieldGrid synthesize_field(const Scenario& s) {
  const QuadratureCheck c = check_quadrature(s);
  if (c.relative_change > s.quadrature_tolerance)
    throw error(errc::quadrature_under_resolved,
                "doubling the quadrature order changes the total probability by " +
                    std::to_string(c.relative_change));
  return synthesize_field(Wavefield(s), spatial_nodes(s, s.dx), {0.0, s.final_time});
}

inline Spinor2 evaluate_field(const Scenario& s, double x, double t) { return Wavefield(s)(x, t); }

}  // namespace klein_pilot
