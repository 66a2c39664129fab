#pragma once

/// @file multiscattering.hpp
/// Internal-reflection series of a Klein barrier. Each pass through the
/// time-reversed interior contracts the amplitude by q = |D|^2 |B|^2:
///   R(n) = (1 - |D|^2) q^n,   T(n) = |D|^2 (1 - |B|^2) q^n,
/// with q recovered from the overall transmission as (|T|^2 / 4)^2 (1 - 1/kappa^2)^2.

#include <cmath>
#include <limits>
#include <utility>

#include "klein_pilot/dirac_modes.hpp"
#include "klein_pilot/error.hpp"

namespace klein_pilot {

struct SeriesTerm {
  double R = 0.0;
  double T = 0.0;
};

struct ScatteringSeries {
  double q = 0.0;
  double d2 = 0.0;  ///< |D|^2
  double b2 = 0.0;  ///< |B|^2

  SeriesTerm term(int n) const {
    if (n < 0) throw error(errc::invalid_argument, "series index must be >= 0");
    const double qn = std::pow(q, n);
    return {(1.0 - d2) * qn, d2 * (1.0 - b2) * qn};
  }

  /// Sums of R(i) and T(i) for i = 0..n.
  SeriesTerm partial_sum(int n) const {
    SeriesTerm s;
    for (int i = 0; i <= n; ++i) {
      const SeriesTerm t = term(i);
      s.R += t.R;
      s.T += t.T;
    }
    return s;
  }

  /// Geometric closed forms of the infinite sums.
  SeriesTerm sum() const { return {(1.0 - d2) / (1.0 - q), d2 * (1.0 - b2) / (1.0 - q)}; }

  /// Probability not yet accounted for after terms 0..n; equals q^(n+1).
  double tail(int n) const {
    const SeriesTerm p = partial_sum(n);
    return 1.0 - (p.R + p.T);
  }
};

/// kappa^2 = (E + m)/(E - m) * (|E - V| + m)/(|E - V| - m), at least 1 in the Klein regime.
inline double kappa_bound_check(double m, double E, double V) {
  if (!(m > 0.0 && V > 2.0 * m && E > m && E < V - m))
    throw error(errc::wrong_case, "kappa bound needs V > 2m and m < E < V - m");
  const double a = std::abs(E - V);
  const double k2 = (E + m) / (E - m) * (a + m) / (a - m);
  if (!(k2 >= 1.0)) throw error(errc::wrong_case, "kappa^2 below 1");
  return k2;
}

/// q = (|T|^2 / 4)^2 (1 - 1/kappa^2)^2 with |T|^2 relative to |A|^2.
inline double contraction_factor(const ScatteringSolution& sol) {
  if (sol.label.geometry != Geometry::barrier || sol.label.regime != Regime::case3)
    throw error(errc::wrong_case, "series needs a Klein-regime barrier");
  const double t2 = std::norm(sol.T) / std::norm(sol.A);
  const double k = sol.kappa.real();
  const double f = 1.0 - 1.0 / (k * k);
  return (t2 / 4.0) * (t2 / 4.0) * f * f;
}

/// Single-interface probabilities are split symmetrically, |D|^2 = |B|^2 = sqrt(q).
inline ScatteringSeries scattering_series(const ScatteringSolution& sol) {
  ScatteringSeries s;
  s.q = contraction_factor(sol);
  s.d2 = std::sqrt(s.q);
  s.b2 = s.d2;
  return s;
}

inline ScatteringSeries scattering_series(double d2, double b2) {
  if (!(d2 >= 0.0 && d2 <= 1.0 && b2 >= 0.0 && b2 < 1.0))
    throw error(errc::invalid_argument, "interface probabilities must lie in [0, 1]");
  return {d2 * b2, d2, b2};
}

inline SeriesTerm series_terms(const ScatteringSolution& sol, int n) { return scattering_series(sol).term(n); }

}  // namespace klein_pilot
