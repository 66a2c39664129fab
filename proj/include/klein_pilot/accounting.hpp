#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "klein_pilot/error.hpp"
#include "klein_pilot/quadrature.hpp"
#include "klein_pilot/scenario.hpp"
#include "klein_pilot/wavepacket.hpp"

namespace klein_pilot {

/// step3:   P_A + P_T = P_R        (Klein step)
/// barrier: P_R + P_T + P_B = P_A  (Klein barrier)
/// plain:   P_R + P_T = P_A
enum class Identity { step3, barrier, plain };

inline std::string to_string(Identity id) {
  switch (id) {
    case Identity::step3: return "step3";
    case Identity::barrier: return "barrier";
    case Identity::plain: return "plain";
  }
  return "?";
}

struct GridMeta {
  double x_min = 0.0, x_max = 0.0, dx = 0.0;
  std::size_t nx = 0;
  double t_initial = 0.0, t_final = 0.0;
  int quadrature_order = 0;
  /// Largest edge density over both slices, divided by the total probability at t = 0.
  double edge_density = 0.0;
};

struct ProbabilityLedger {
  std::string scenario;
  double P_A = 0.0, P_R = 0.0, P_T = 0.0, P_B = 0.0;
  Identity identity = Identity::plain;
  double lhs = 0.0, rhs = 0.0;
  double residual = 0.0;  ///< |lhs - rhs| / max(lhs, rhs)
  GridMeta grid;
};

/// Integral over nodes [ia, ib] of the piecewise quadratic through the Simpson
/// panels (0,1,2), (2,3,4), ... of the whole slice; with an odd number of
/// intervals the last one borrows the final three nodes. Over whole panels this is the
/// composite Simpson rule, and integrals over adjacent ranges add up exactly.
inline double panel_simpson(std::span<const double> f, double h, std::size_t ia, std::size_t ib) {
  const std::size_t last = f.size() - 1;
  if (last == 1) return 0.5 * h * (f[0] + f[1]) * static_cast<double>(ib - ia);
  double sum = 0.0;
  std::size_t i = ia;
  if (i % 2 == 1 && i < ib) {
    const std::size_t p = std::min(i - 1, last - 2);
    sum += p == i - 1 ? -f[p] + 8 * f[p + 1] + 5 * f[p + 2] : 5 * f[p] + 8 * f[p + 1] - f[p + 2];
    ++i;
  }
  for (; i + 2 <= ib; i += 2) sum += 4 * f[i] + 16 * f[i + 1] + 4 * f[i + 2];
  if (i < ib) {
    const std::size_t p = std::min(i, last - 2);
    sum += p == i ? 5 * f[p] + 8 * f[p + 1] - f[p + 2] : -f[p] + 8 * f[p + 1] + 5 * f[p + 2];
  }
  return sum * h / 12.0;
}

/// Integral of the density over [a, b] on slice t. All three must be grid nodes.
inline double slice_probability(const FieldGrid& g, double t, double a, double b) {
  const auto it = g.time_index(t);
  const auto ia = g.space_index(a), ib = g.space_index(b);
  if (!it) throw error(errc::invalid_argument, "time is not a grid slice");
  if (!ia || !ib) throw error(errc::invalid_argument, "integration bounds are not grid nodes");
  if (*ib < *ia) throw error(errc::invalid_argument, "integration bounds are reversed");
  if (*ib == *ia) return 0.0;
  const double h = g.x[1] - g.x[0];
  return panel_simpson(g.density_slice(*it), h, *ia, *ib);
}

inline Identity ledger_identity(const Scenario& s) {
  if (case_label(s).regime != Regime::case3) return Identity::plain;
  return s.geometry == Geometry::step ? Identity::step3 : Identity::barrier;
}

inline ProbabilityLedger build_ledger(const Scenario& s, const FieldGrid& g) {
  if (!g.time_index(0.0) || !g.time_index(s.final_time))
    throw error(errc::invalid_argument, "field lacks the t = 0 or t = tau_F slice");
  ProbabilityLedger L;
  L.scenario = s.name;
  L.identity = ledger_identity(s);
  const double lo = g.x.front(), hi = g.x.back();
  const double tf = s.final_time;
  const bool barrier = s.geometry == Geometry::barrier;
  const double exit = barrier ? s.width : 0.0;

  L.P_A = s.potential == 0.0 ? slice_probability(g, 0.0, lo, hi) : slice_probability(g, 0.0, lo, 0.0);
  L.P_R = slice_probability(g, tf, lo, 0.0);
  L.P_T = slice_probability(g, tf, exit, hi);
  if (barrier) L.P_B = slice_probability(g, 0.0, 0.0, s.width);

  switch (L.identity) {
    case Identity::step3:
      L.lhs = L.P_A + L.P_T;
      L.rhs = L.P_R;
      break;
    case Identity::barrier:
      L.lhs = L.P_R + L.P_T + L.P_B;
      L.rhs = L.P_A;
      break;
    case Identity::plain:
      L.lhs = L.P_R + L.P_T;
      L.rhs = L.P_A;
      break;
  }
  L.residual = std::abs(L.lhs - L.rhs) / std::max({L.lhs, L.rhs, std::numeric_limits<double>::min()});

  L.grid.x_min = lo;
  L.grid.x_max = hi;
  L.grid.dx = g.x.size() > 1 ? g.x[1] - g.x[0] : 0.0;
  L.grid.nx = g.x.size();
  L.grid.t_initial = 0.0;
  L.grid.t_final = tf;
  L.grid.quadrature_order = s.quadrature_order;
  const double total0 = slice_probability(g, 0.0, lo, hi);
  double edge = 0.0;
  for (std::size_t it = 0; it < g.t.size(); ++it) {
    const auto d = g.density_slice(it);
    edge = std::max({edge, d.front(), d.back()});
  }
  L.grid.edge_density = total0 > 0.0 ? edge / total0 : 0.0;
  return L;
}

}  // namespace klein_pilot
