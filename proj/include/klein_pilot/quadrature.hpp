#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "klein_pilot/error.hpp"

namespace klein_pilot {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule of the given order mapped onto (lower, upper).
/// Roots by Newton iteration on the three-term recurrence.
inline QuadratureRule gauss_legendre(int order, double lower, double upper) {
  if (order < 2) throw error(errc::invalid_argument, "quadrature order must be >= 2");
  if (!(upper > lower)) throw error(errc::invalid_argument, "empty quadrature interval");
  const auto n = static_cast<std::size_t>(order);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (upper - lower);
  const double mid = 0.5 * (upper + lower);

  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (std::size_t j = 2; j <= n; ++j) {
        const double jj = static_cast<double>(j);
        const double p2 = ((2.0 * jj - 1.0) * z * p1 - (jj - 1.0) * p0) / jj;
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
      const double step = p1 / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = mid - half * z;
    rule.nodes[n - 1 - i] = mid + half * z;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

/// Composite Simpson over uniformly spaced samples. An odd number of intervals
/// closes with the 3/8 rule on the last three.
inline double simpson(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * h * (f[0] + f[1]);
  const std::size_t intervals = n - 1;
  const std::size_t even_end = intervals % 2 == 0 ? intervals : intervals - 3;
  double sum = 0.0;
  if (even_end > 0) {
    double acc = f[0] + f[even_end];
    for (std::size_t i = 1; i < even_end; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * f[i];
    sum = acc * h / 3.0;
  }
  if (even_end != intervals) {
    const std::size_t s = even_end;
    sum += 3.0 * h / 8.0 * (f[s] + 3.0 * f[s + 1] + 3.0 * f[s + 2] + f[s + 3]);
  }
  return sum;
}

}  // namespace klein_pilot
