#pragma once

/// @file trajectories.hpp
/// Lab-time integration of dx/dt = v(x, t). A trajectory is a chain of branches:
/// it reverses its lab-time direction whenever it enters or leaves a
/// time-reversed region, so a Klein-step pair shows up as one backward branch in
/// the potential region joined at the interface to one forward reflected branch.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "klein_pilot/error.hpp"
#include "klein_pilot/guidance.hpp"
#include "klein_pilot/parallel.hpp"
#include "klein_pilot/wavepacket.hpp"

namespace klein_pilot {

enum class Direction { forward, backward };
enum class SeedLabel { incident, pair_branch };
enum class Termination { reached_time_bound, left_box, node_stall };

inline std::string to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }
inline std::string to_string(SeedLabel l) { return l == SeedLabel::incident ? "incident" : "pair_branch"; }
inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::reached_time_bound: return "reached_time_bound";
    case Termination::left_box: return "left_box";
    case Termination::node_stall: return "node_stall";
  }
  return "?";
}

inline double sign(Direction d) { return d == Direction::forward ? 1.0 : -1.0; }
inline Direction flip(Direction d) { return d == Direction::forward ? Direction::backward : Direction::forward; }

struct Seed {
  double x0 = 0.0;
  double t0 = 0.0;
  Direction direction = Direction::forward;
  SeedLabel label = SeedLabel::incident;
};

struct TrajectorySample {
  double t = 0.0;
  double x = 0.0;
  double density = 0.0;
  double velocity = 0.0;
  bool on_grid = false;  ///< t is a multiple of the base step
};

/// Stretch of a trajectory with one lab-time direction.
struct Branch {
  Direction direction = Direction::forward;
  std::vector<TrajectorySample> samples;
};

struct Trajectory {
  std::size_t id = 0;
  Seed seed;
  std::vector<Branch> branches;
  Termination termination = Termination::reached_time_bound;
  double min_density = 0.0;  ///< relative to the t = 0 total probability
  double max_speed = 0.0;

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& b : branches) n += b.samples.size();
    return n;
  }
  const TrajectorySample& final_sample() const { return branches.back().samples.back(); }
};

struct IntegratorOptions {
  double dt = 0.1;
  double dt_min = 1e-6;
  /// Largest velocity change accepted in one step.
  double max_velocity_change = 0.1;
  /// Normalized density below which the step is refined, down to dt / 8.
  double low_density = 1e-8;
  int low_density_halvings = 3;
  /// Total probability at t = 0; densities are compared after dividing by it.
  double density_scale = 1.0;
  double t_min = 0.0;
  double t_max = 0.0;
  double box_half_width = 0.0;
};

inline IntegratorOptions integrator_options(const Scenario& s, double density_scale) {
  IntegratorOptions o;
  o.dt = s.dt;
  o.density_scale = density_scale;
  o.t_max = s.final_time;
  o.box_half_width = s.box_half_width;
  return o;
}

inline IntegratorOptions integrator_options(const Wavefield& wf) {
  return integrator_options(wf.scenario(), total_probability(wf, 0.0));
}

namespace detail {

class Stepper {
 public:
  Stepper(const Wavefield& wf, const IntegratorOptions& o) : wf_(wf), o_(o) {}

  struct Eval {
    double v = 0.0;
    double density = 0.0;
  };

  // Velocity with the branch orientation s; throws node_point at nodes.
  Eval eval(double x, double t, double s) const {
    const CurrentSample c = current(wf_.at(x, phases(t)), s);
    return {c.velocity, c.density};
  }

  // One RK4 step of lab-time size h (signed); k1 is the velocity at the start.
  double rk4(double x, double t, double h, double s, const Eval& k1, double& min_density) const {
    const Eval k2 = eval(x + 0.5 * h * k1.v, t + 0.5 * h, s);
    const Eval k3 = eval(x + 0.5 * h * k2.v, t + 0.5 * h, s);
    const Eval k4 = eval(x + h * k3.v, t + h, s);
    min_density = std::min({k2.density, k3.density, k4.density});
    return x + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
  }

  Trajectory run(const Seed& seed, std::size_t id) const {
    Trajectory tr;
    tr.id = id;
    tr.seed = seed;
    tr.min_density = std::numeric_limits<double>::infinity();

    double x = seed.x0, t = seed.t0;
    Direction dir = seed.direction;
    double s = wf_.time_direction(x);
    Eval here;
    try {
      here = eval(x, t, s);
    } catch (const error&) {
      tr.termination = Termination::node_stall;
      tr.branches.push_back({dir, {{t, x, 0.0, 0.0, on_grid(t)}}});
      tr.min_density = 0.0;
      return tr;
    }
    tr.branches.push_back({dir, {}});
    auto record = [&](double tt, double xx, const Eval& e, bool grid) {
      tr.branches.back().samples.push_back({tt, xx, e.density, e.v, grid});
      tr.min_density = std::min(tr.min_density, e.density / o_.density_scale);
      tr.max_speed = std::max(tr.max_speed, std::abs(e.v));
    };
    record(t, x, here, on_grid(t));

    for (;;) {
      const double d = sign(dir);
      if ((d > 0 && t >= o_.t_max) || (d < 0 && t <= o_.t_min)) {
        tr.termination = Termination::reached_time_bound;
        break;
      }
      if (std::abs(x) >= o_.box_half_width) {
        tr.termination = Termination::left_box;
        break;
      }
      // next base-grid time in the direction of travel
      const double k = t / o_.dt;
      double target = d > 0 ? (std::floor(k + 1e-9) + 1.0) * o_.dt : (std::ceil(k - 1e-9) - 1.0) * o_.dt;
      target = std::clamp(target, o_.t_min, o_.t_max);

      bool stalled = false, flipped = false;
      double h = o_.dt;
      int density_halvings = 0;
      while (d * (target - t) > 0.0) {
        const double step = std::min(h, d * (target - t));
        const double hs = d * step;
        double x_new = 0.0, stage_min = 0.0;
        Eval end;
        bool ok = true;
        try {
          x_new = rk4(x, t, hs, s, here, stage_min);
          end = eval(x_new, t + hs, s);
          stage_min = std::min(stage_min, end.density);
        } catch (const error&) {
          ok = false;
        }
        if (ok && std::abs(end.v - here.v) > o_.max_velocity_change) ok = false;
        if (ok && stage_min / o_.density_scale < o_.low_density && density_halvings < o_.low_density_halvings) {
          ok = false;
          ++density_halvings;
        }
        if (!ok) {
          h *= 0.5;
          if (h < o_.dt_min) {
            stalled = true;
            break;
          }
          continue;
        }
        if (wf_.time_direction(x_new) != s) {
          // locate the interface and start a branch with the opposite lab-time direction
          const double xi = interface_between(x, x_new);
          double lo = 0.0, hi = 1.0;
          for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            double unused = 0.0;
            double xm = x;
            try {
              xm = rk4(x, t, mid * hs, s, here, unused);
            } catch (const error&) {
              hi = mid;
              continue;
            }
            if ((xm - xi) * (x - xi) > 0.0)
              lo = mid;
            else
              hi = mid;
          }
          t += hi * hs;
          x = xi;
          const Eval at_old = safe_eval(x, t, s);
          record(t, x, at_old, false);
          dir = flip(dir);
          s = -s;
          tr.branches.push_back({dir, {}});
          try {
            here = eval(x, t, s);
          } catch (const error&) {
            stalled = true;
            break;
          }
          record(t, x, here, false);
          flipped = true;
          break;
        }
        x = x_new;
        t += hs;
        here = end;
        if (std::abs(x) >= o_.box_half_width) break;
      }
      if (stalled) {
        tr.termination = Termination::node_stall;
        break;
      }
      if (flipped) continue;
      if (std::abs(t - target) < 1e-9 * o_.dt) t = target;
      record(t, x, here, on_grid(t));
    }
    return tr;
  }

 private:
  // RK4 stages revisit the same few times, so the last few phase tables are kept.
  const std::vector<cx>& phases(double t) const {
    for (auto& e : cache_)
      if (e.valid && e.t == t) return e.table;
    PhaseEntry& e = cache_[next_];
    next_ = (next_ + 1) % cache_.size();
    e.valid = true;
    e.t = t;
    wf_.time_phases(t, e.table);
    return e.table;
  }

  bool on_grid(double t) const {
    const double k = t / o_.dt;
    return std::abs(k - std::round(k)) < 1e-9;
  }

  Eval safe_eval(double x, double t, double s) const {
    try {
      return eval(x, t, s);
    } catch (const error&) {
      return {};
    }
  }

  double interface_between(double a, double b) const {
    const Scenario& sc = wf_.scenario();
    const double lo = std::min(a, b), hi = std::max(a, b);
    if (sc.geometry == Geometry::barrier && lo <= sc.width && hi >= sc.width &&
        !(lo <= 0.0 && hi >= 0.0))
      return sc.width;
    return 0.0;
  }

  struct PhaseEntry {
    bool valid = false;
    double t = 0.0;
    std::vector<cx> table;
  };

  const Wavefield& wf_;
  IntegratorOptions o_;
  mutable std::array<PhaseEntry, 4> cache_{};
  mutable std::size_t next_ = 0;
};

}  // namespace detail

inline Trajectory integrate(const Seed& seed, const Wavefield& wf, const IntegratorOptions& opts,
                            std::size_t id = 0) {
  return detail::Stepper(wf, opts).run(seed, id);
}

inline Trajectory integrate(const Seed& seed, const Scenario& s) {
  const Wavefield wf(s);
  return integrate(seed, wf, integrator_options(wf));
}

inline std::vector<Trajectory> integrate_ensemble(const std::vector<Seed>& seeds, const Wavefield& wf,
                                                  const IntegratorOptions& opts) {
  std::vector<Trajectory> out(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) { out[i] = integrate(seeds[i], wf, opts, i); });
  return out;
}

// ---------------------------------------------------------------------------
// seeding

/// Fraction of a Klein-step ensemble that starts on the t = tau_F slice in the
/// potential region: -kappa |T|^2 / |R|^2 at the mean energy.
inline double pair_branch_weight(const Scenario& s) {
  const ScatteringSolution sol = step_solution(physical_params(s));
  return -sol.kappa.real() * std::norm(sol.T) / std::norm(sol.R);
}

/// Centre and width of the potential-region packet on the tau_F slice of a Klein step.
inline std::pair<double, double> pair_slice_packet(const Scenario& s) {
  const double E = mean_energy(s), V = s.potential, m = s.mass;
  const double k = std::sqrt((V - E) * (V - E) - m * m);
  const double v2 = k / (V - E);
  const double v = mean_velocity(s);
  return {v2 * (s.final_time - std::abs(s.packet.x0) / v), s.packet.spread * v2 / v};
}

namespace detail {

class SeedRng {
 public:
  SeedRng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    engine_.seed(seq);
  }
  /// Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Box-Muller; written out so streams match across standard libraries.
  double normal() {
    double u1 = 0.0;
    do u1 = uniform();
    while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

/// Inverse-CDF table of a density slice over uniform nodes.
struct SliceCdf {
  std::vector<double> x;
  std::vector<double> cdf;

  double invert(double u) const {
    const double target = u * cdf.back();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
    if (it == cdf.begin()) return x.front();
    if (it == cdf.end()) return x.back();
    const std::size_t i = static_cast<std::size_t>(it - cdf.begin());
    const double span = cdf[i] - cdf[i - 1];
    const double f = span > 0.0 ? (target - cdf[i - 1]) / span : 0.0;
    return x[i - 1] + f * (x[i] - x[i - 1]);
  }
};

inline SliceCdf slice_cdf(const Wavefield& wf, double t, double a, double b, double h, double scale) {
  SliceCdf c;
  c.x = uniform_nodes(a, b, h);
  const FieldGrid g = synthesize_field(wf, c.x, {t});
  c.cdf.assign(c.x.size(), 0.0);
  for (std::size_t i = 1; i < c.x.size(); ++i)
    c.cdf[i] = c.cdf[i - 1] + 0.5 * h * (g.density[i - 1] + g.density[i]);
  if (!(c.cdf.back() / scale >= 1e-12))
    throw error(errc::empty_slice, "slice density integrates below 1e-12 in the sampling window");
  return c;
}

}  // namespace detail

/// Window from which incident seeds are drawn: region I, or the whole box without a potential.
inline std::pair<double, double> incident_window(const Scenario& s) {
  if (s.potential == 0.0) return {-s.box_half_width, s.box_half_width};
  return {-s.box_half_width, 0.0};
}

/// n seeds from per-index streams of rng_seed, so the result does not depend on scheduling.
inline std::vector<Seed> sample_ensemble(const Wavefield& wf, int n, std::uint64_t rng_seed,
                                         SamplingMode mode, double density_scale) {
  if (n < 1) throw error(errc::invalid_argument, "ensemble size must be >= 1");
  const Scenario& s = wf.scenario();
  const bool klein_step = wf.label().regime == Regime::case3 && s.geometry == Geometry::step;
  const double w_pair = klein_step ? pair_branch_weight(s) : 0.0;
  const auto [ia, ib] = incident_window(s);
  const auto [pc, pw] = klein_step ? pair_slice_packet(s) : std::pair<double, double>{0.0, 1.0};
  const double pa = 0.0, pb = s.box_half_width;

  std::optional<detail::SliceCdf> incident_cdf, pair_cdf;
  if (mode == SamplingMode::born) {
    incident_cdf = detail::slice_cdf(wf, 0.0, ia, ib, s.dx, density_scale);
    if (klein_step) pair_cdf = detail::slice_cdf(wf, s.final_time, pa, pb, s.dx, density_scale);
  } else {
    // the gaussian windows must hold some of the packet
    const double inc = 0.5 * (std::erf((ib - s.packet.x0) / (std::sqrt(2.0) * s.packet.spread)) -
                              std::erf((ia - s.packet.x0) / (std::sqrt(2.0) * s.packet.spread)));
    if (!(inc >= 1e-12)) throw error(errc::empty_slice, "incident window misses the packet");
    if (klein_step) {
      const double pr = 0.5 * (std::erf((pb - pc) / (std::sqrt(2.0) * pw)) - std::erf((pa - pc) / (std::sqrt(2.0) * pw)));
      if (!(pr >= 1e-12)) throw error(errc::empty_slice, "potential-region window misses the packet");
    }
  }

  std::vector<Seed> seeds(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    detail::SeedRng rng(rng_seed, i);
    Seed sd;
    const bool pair = klein_step && rng.uniform() < w_pair;
    if (pair) {
      sd.t0 = s.final_time;
      sd.direction = Direction::backward;
      sd.label = SeedLabel::pair_branch;
    }
    const double lo = pair ? pa : ia, hi = pair ? pb : ib;
    if (mode == SamplingMode::born) {
      sd.x0 = (pair ? *pair_cdf : *incident_cdf).invert(rng.uniform());
    } else {
      const double c = pair ? pc : s.packet.x0, w = pair ? pw : s.packet.spread;
      do sd.x0 = c + w * rng.normal();
      while (!(sd.x0 > lo && sd.x0 < hi));
    }
    seeds[i] = sd;
  }
  return seeds;
}

inline std::vector<Seed> sample_ensemble(const Scenario& s, int n, std::uint64_t rng_seed) {
  const Wavefield wf(s);
  return sample_ensemble(wf, n, rng_seed, s.sampling, total_probability(wf, 0.0));
}

// ---------------------------------------------------------------------------
// diagnostics

struct CrossingViolation {
  std::size_t first_id = 0, second_id = 0;
  std::size_t first_branch = 0, second_branch = 0;
  double t = 0.0;
  double x_first = 0.0, x_second = 0.0;
};

struct CrossingReport {
  std::size_t pairs_checked = 0;
  std::size_t comparisons = 0;
  std::vector<CrossingViolation> violations;  ///< at most one per branch pair

  bool ok() const { return violations.empty(); }
};

/// Branches sharing a lab-time direction are compared at their common base-grid
/// times; the sign of their separation may not flip. Separations within tol are
/// treated as touching, not crossing.
inline CrossingReport check_no_crossing(const std::vector<Trajectory>& trs, double dt, double tol = 1e-8) {
  struct Segment {
    std::size_t id, branch;
    Direction dir;
    std::vector<std::pair<long long, double>> ticks;  // sorted by tick
  };
  std::vector<Segment> segs;
  for (const auto& tr : trs)
    for (std::size_t b = 0; b < tr.branches.size(); ++b) {
      Segment sg{tr.id, b, tr.branches[b].direction, {}};
      for (const auto& smp : tr.branches[b].samples)
        if (smp.on_grid) sg.ticks.emplace_back(std::llround(smp.t / dt), smp.x);
      std::sort(sg.ticks.begin(), sg.ticks.end());
      if (!sg.ticks.empty()) segs.push_back(std::move(sg));
    }

  CrossingReport rep;
  for (std::size_t a = 0; a < segs.size(); ++a)
    for (std::size_t b = a + 1; b < segs.size(); ++b) {
      const Segment& A = segs[a];
      const Segment& B = segs[b];
      if (A.dir != B.dir) continue;
      if (A.ticks.back().first < B.ticks.front().first || B.ticks.back().first < A.ticks.front().first) continue;
      ++rep.pairs_checked;
      int order = 0;
      std::size_t i = 0, j = 0;
      while (i < A.ticks.size() && j < B.ticks.size()) {
        if (A.ticks[i].first < B.ticks[j].first) {
          ++i;
          continue;
        }
        if (B.ticks[j].first < A.ticks[i].first) {
          ++j;
          continue;
        }
        ++rep.comparisons;
        const double sep = A.ticks[i].second - B.ticks[j].second;
        const int sgn = sep > tol ? 1 : (sep < -tol ? -1 : 0);
        if (sgn != 0) {
          if (order == 0) {
            order = sgn;
          } else if (sgn != order) {
            rep.violations.push_back({A.id, B.id, A.branch, B.branch, static_cast<double>(A.ticks[i].first) * dt,
                                      A.ticks[i].second, B.ticks[j].second});
            break;
          }
        }
        ++i;
        ++j;
      }
    }
  return rep;
}

/// Times where the velocity changes sign along a branch, by linear interpolation.
inline std::vector<double> velocity_zero_crossings(const Branch& br) {
  std::vector<double> z;
  for (std::size_t i = 1; i < br.samples.size(); ++i) {
    const auto& a = br.samples[i - 1];
    const auto& b = br.samples[i];
    if ((a.velocity < 0.0) != (b.velocity < 0.0) && a.velocity != b.velocity)
      z.push_back(a.t + (b.t - a.t) * a.velocity / (a.velocity - b.velocity));
  }
  return z;
}

/// Twice the median spacing of successive zero crossings; nullopt below three crossings.
inline std::optional<double> oscillation_period(const std::vector<double>& crossings) {
  if (crossings.size() < 3) return std::nullopt;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < crossings.size(); ++i) gaps.push_back(crossings[i] - crossings[i - 1]);
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<long>(gaps.size() / 2), gaps.end());
  return 2.0 * gaps[gaps.size() / 2];
}

/// Bisects on the t = 0 position between seeds that end on opposite sides of
/// x = split, returning the boundary seed's trajectory.
inline Trajectory find_separatrix(const Wavefield& wf, const IntegratorOptions& opts, double a, double b,
                                  double split = 0.0, int iterations = 40) {
  auto side = [&](const Trajectory& tr) { return tr.final_sample().x > split; };
  Trajectory ta = integrate({a, opts.t_min, Direction::forward, SeedLabel::incident}, wf, opts);
  const Trajectory tb = integrate({b, opts.t_min, Direction::forward, SeedLabel::incident}, wf, opts);
  if (side(ta) == side(tb)) throw error(errc::invalid_argument, "seeds do not bracket a separatrix");
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (a + b);
    Trajectory tm = integrate({mid, opts.t_min, Direction::forward, SeedLabel::incident}, wf, opts);
    if (side(tm) == side(ta)) {
      a = mid;
      ta = std::move(tm);
    } else {
      b = mid;
    }
  }
  return ta;
}

}  // namespace klein_pilot
