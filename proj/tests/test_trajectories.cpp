#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "klein_pilot/presets.hpp"
#include "klein_pilot/trajectories.hpp"

using namespace klein_pilot;

namespace {

Scenario free_travelling() {
  Scenario s = preset("step-case1");
  s.potential = 0.0;
  s.free_packet = FreePacket::travelling;
  validate(s);
  return s;
}

Seed forward_seed(double x0) { return {x0, 0.0, Direction::forward, SeedLabel::incident}; }

double ks_statistic(std::vector<double> xs, const std::vector<double>& grid, const std::vector<double>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto it = std::upper_bound(grid.begin(), grid.end(), xs[i]);
    const std::size_t j = std::clamp<std::size_t>(static_cast<std::size_t>(it - grid.begin()), 1, grid.size() - 1);
    const double f = cdf[j - 1] + (cdf[j] - cdf[j - 1]) * (xs[i] - grid[j - 1]) / (grid[j] - grid[j - 1]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
  }
  return d;
}

}  // namespace

TEST(Integrate, FreeSeedMovesAtTheGroupVelocity) {
  const Scenario s = free_travelling();
  const Wavefield wf(s);
  const Trajectory tr = integrate(forward_seed(s.packet.x0), wf, integrator_options(wf));
  const double v = mean_velocity(s);
  double worst = 0.0;
  for (const auto& b : tr.branches)
    for (const auto& p : b.samples) worst = std::max(worst, std::abs(p.x - (s.packet.x0 + v * p.t)));
  EXPECT_LT(worst, s.packet.spread / 100.0);
  EXPECT_EQ(tr.termination, Termination::reached_time_bound);
  EXPECT_EQ(tr.branches.size(), 1u);
  EXPECT_DOUBLE_EQ(tr.final_sample().t, s.final_time);
  EXPECT_LE(tr.max_speed, 1.0);
}

TEST(Integrate, HalvingTheStepBarelyMovesTheEndpoint) {
  const Scenario s = preset("step-case1");
  const Wavefield wf(s);
  const IntegratorOptions coarse = integrator_options(wf);
  IntegratorOptions fine = coarse;
  fine.dt /= 2;
  for (double x0 : {-430.0, -400.0, -370.0}) {
    const double a = integrate(forward_seed(x0), wf, coarse).final_sample().x;
    const double b = integrate(forward_seed(x0), wf, fine).final_sample().x;
    EXPECT_LT(std::abs(a - b), 1e-4 * s.packet.spread) << x0;
  }
}

TEST(Integrate, IsDeterministic) {
  const Scenario s = preset("step-case3");
  const Wavefield wf(s);
  const IntegratorOptions o = integrator_options(wf);
  const Trajectory a = integrate(forward_seed(-380.0), wf, o), b = integrate(forward_seed(-380.0), wf, o);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.branches.size(); ++i)
    for (std::size_t k = 0; k < a.branches[i].samples.size(); ++k) {
      EXPECT_EQ(a.branches[i].samples[k].x, b.branches[i].samples[k].x);
      EXPECT_EQ(a.branches[i].samples[k].t, b.branches[i].samples[k].t);
    }
}

TEST(Integrate, SeedOnANodeIsFrozenAndMarked) {
  Scenario s = preset("step-case1");
  s.packet.amplitude = 1e-16;
  const Wavefield wf(s);
  ASSERT_LT(wf(s.packet.x0, 0.0).density(), node_density);
  const Trajectory tr = integrate(forward_seed(s.packet.x0), wf, integrator_options(s, 1.0));
  EXPECT_EQ(tr.termination, Termination::node_stall);
  ASSERT_EQ(tr.size(), 1u);
  EXPECT_EQ(tr.final_sample().x, s.packet.x0);
  EXPECT_EQ(tr.final_sample().t, 0.0);
}

TEST(Integrate, PairBranchFormsAVee) {
  const Scenario s = preset("step-case3");
  const Wavefield wf(s);
  const auto [centre, width] = pair_slice_packet(s);
  const Trajectory tr = integrate({centre, s.final_time, Direction::backward, SeedLabel::pair_branch}, wf,
                                  integrator_options(wf));
  ASSERT_EQ(tr.branches.size(), 2u);
  EXPECT_EQ(tr.branches[0].direction, Direction::backward);
  EXPECT_EQ(tr.branches[1].direction, Direction::forward);
  // the backward leg runs down to the step, the forward leg leaves it into region I
  const TrajectorySample& apex = tr.branches[0].samples.back();
  EXPECT_NEAR(apex.x, 0.0, 1e-6);
  EXPECT_GT(apex.t, 0.0);
  EXPECT_LT(apex.t, s.final_time);
  for (const auto& p : tr.branches[0].samples) EXPECT_GE(p.x, -1e-6);
  EXPECT_LT(tr.final_sample().x, 0.0);
  EXPECT_DOUBLE_EQ(tr.final_sample().t, s.final_time);
  EXPECT_LT(tr.branches[1].samples.back().velocity, 0.0);
  (void)width;
}

TEST(Integrate, RestPacketOscillatesAtTwiceTheMass) {
  const Scenario s = preset("step-case0");
  const Wavefield wf(s);
  const IntegratorOptions o = integrator_options(wf);
  const Trajectory tr = find_separatrix(wf, o, -1.0, 1.0, 0.0, 30);
  const auto period = oscillation_period(velocity_zero_crossings(tr.branches.front()));
  ASSERT_TRUE(period.has_value());
  EXPECT_NEAR(*period, std::numbers::pi, 0.05 * std::numbers::pi);
}

TEST(Integrate, StepBelowPairThresholdHasOneBifurcation) {
  const Scenario s = preset("step-case1");
  const Wavefield wf(s);
  std::vector<Seed> seeds;
  for (int i = 0; i < 12; ++i) seeds.push_back(forward_seed(s.packet.x0 - 2.0 * s.packet.spread + 4.0 * s.packet.spread * i / 11));
  const auto trs = integrate_ensemble(seeds, wf, integrator_options(wf));
  // sorted by x0: reflected prefix, transmitted suffix
  std::vector<bool> transmitted;
  for (const auto& tr : trs) transmitted.push_back(tr.final_sample().x > 0.0);
  const auto first = std::find(transmitted.begin(), transmitted.end(), true);
  EXPECT_NE(first, transmitted.begin());
  EXPECT_NE(first, transmitted.end());
  EXPECT_TRUE(std::all_of(first, transmitted.end(), [](bool b) { return b; }));
}

TEST(Integrate, KleinBarrierTransmitsEarlyAndReflectsInBands) {
  const Scenario s = preset("barrier-case3");
  const Wavefield wf(s);
  const double arrival = std::abs(s.packet.x0) / mean_velocity(s);

  // reflected region I density at tau_F: two peaks around a deep minimum
  const FieldGrid g = synthesize_field(wf, uniform_nodes(-1600.0, -800.0, s.dx), {s.final_time});
  const auto d = g.density_slice(0);
  const auto peak = std::max_element(d.begin(), d.end());
  const auto left_peak = std::max_element(d.begin(), peak - 50);
  const auto valley = std::min_element(left_peak, peak);
  ASSERT_LT(*valley, 0.1 * *left_peak);
  const double valley_x = g.x[static_cast<std::size_t>(valley - d.begin())];

  std::vector<Seed> seeds;
  for (int i = 0; i < 24; ++i) seeds.push_back(forward_seed(-1250.0 + 300.0 * i / 23));
  const auto trs = integrate_ensemble(seeds, wf, integrator_options(wf));

  std::vector<double> reflected;
  int emerged = 0;
  for (const auto& tr : trs) {
    if (tr.final_sample().x < 0.0) reflected.push_back(tr.final_sample().x);
    for (const auto& b : tr.branches)
      for (const auto& p : b.samples)
        if (p.x > s.width) {
          EXPECT_LT(p.t, s.final_time + 1e-9);
          if (p.t < arrival) ++emerged;
          goto next;
        }
  next:;
  }
  EXPECT_GT(emerged, 0);

  std::sort(reflected.begin(), reflected.end());
  ASSERT_GE(reflected.size(), 4u);
  std::size_t widest = 1;
  for (std::size_t i = 1; i < reflected.size(); ++i)
    if (reflected[i] - reflected[i - 1] > reflected[widest] - reflected[widest - 1]) widest = i;
  EXPECT_LT(reflected[widest - 1], valley_x);
  EXPECT_GT(reflected[widest], valley_x);
  EXPECT_GT(reflected[widest] - reflected[widest - 1], s.plot_dx);
}

TEST(SampleEnsemble, BornSeedsFollowTheDensity) {
  const Scenario s = free_travelling();
  const Wavefield wf(s);
  const double scale = total_probability(wf, 0.0);
  const auto seeds = sample_ensemble(wf, 1000, 42, SamplingMode::born, scale);
  // reference CDF by direct evaluation on a finer, shifted grid
  const double h = 0.25;
  std::vector<double> grid = uniform_nodes(s.packet.x0 - 12 * s.packet.spread, s.packet.x0 + 12 * s.packet.spread, h);
  std::vector<double> cdf(grid.size(), 0.0);
  double prev = wf(grid[0], 0.0).density();
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = wf(grid[i], 0.0).density(), mid = wf(grid[i] - 0.5 * h, 0.0).density();
    cdf[i] = cdf[i - 1] + h / 6.0 * (prev + 4 * mid + cur);
    prev = cur;
  }
  for (double& c : cdf) c /= cdf.back();
  std::vector<double> xs;
  for (const auto& sd : seeds) {
    xs.push_back(sd.x0);
    EXPECT_EQ(sd.t0, 0.0);
    EXPECT_EQ(sd.label, SeedLabel::incident);
  }
  EXPECT_LT(ks_statistic(xs, grid, cdf), 0.05);
}

TEST(SampleEnsemble, GaussianSeedsFollowTheEnvelope) {
  const Scenario s = preset("step-case1");
  const auto seeds = sample_ensemble(s, 1000, 9);
  std::vector<double> xs, grid = uniform_nodes(s.packet.x0 - 8 * s.packet.spread, s.packet.x0 + 8 * s.packet.spread, 1.0), cdf;
  for (double x : grid) cdf.push_back(0.5 * std::erfc(-(x - s.packet.x0) / (std::sqrt(2.0) * s.packet.spread)));
  for (const auto& sd : seeds) xs.push_back(sd.x0);
  EXPECT_LT(ks_statistic(xs, grid, cdf), 0.05);
}

TEST(SampleEnsemble, KleinStepSplitsSeedsBetweenSlices) {
  const Scenario s = preset("step-case3");
  const int n = 1000;
  const auto seeds = sample_ensemble(s, n, 2024);
  const double w = pair_branch_weight(s);
  int pair = 0;
  for (const auto& sd : seeds) {
    if (sd.label == SeedLabel::pair_branch) {
      ++pair;
      EXPECT_EQ(sd.t0, s.final_time);
      EXPECT_EQ(sd.direction, Direction::backward);
      EXPECT_GT(sd.x0, 0.0);
    } else {
      EXPECT_EQ(sd.t0, 0.0);
      EXPECT_LT(sd.x0, 0.0);
    }
  }
  EXPECT_GT(w, 0.0);
  EXPECT_LT(w, 1.0);
  EXPECT_LT(std::abs(pair - n * w), 3.0 * std::sqrt(n * w * (1 - w)));
}

TEST(SampleEnsemble, SingleSeedLandsInTheWindow) {
  for (const char* name : {"step-case1", "barrier-case3"}) {
    const Scenario s = preset(name);
    const Wavefield wf(s);
    for (SamplingMode mode : {SamplingMode::gaussian, SamplingMode::born}) {
      const auto seeds = sample_ensemble(wf, 1, 5, mode, total_probability(wf, 0.0));
      ASSERT_EQ(seeds.size(), 1u);
      EXPECT_GT(seeds[0].x0, -s.box_half_width);
      EXPECT_LT(seeds[0].x0, 0.0);
    }
  }
  EXPECT_THROW(sample_ensemble(preset("step-case1"), 0, 1), error);
}

TEST(SampleEnsemble, StreamsArePerIndex) {
  const Scenario s = preset("step-case3");
  const auto a = sample_ensemble(s, 20, 77), b = sample_ensemble(s, 20, 77), c = sample_ensemble(s, 8, 77);
  const auto d = sample_ensemble(s, 20, 78);
  int differ = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x0, b[i].x0);
    if (i < c.size()) {
      EXPECT_EQ(a[i].x0, c[i].x0);
    }
    differ += a[i].x0 != d[i].x0;
  }
  EXPECT_GT(differ, 15);
}

TEST(SampleEnsemble, EmptyPairSliceIsReported) {
  Scenario s = preset("step-case3");
  s.packet.spread = 10.0;
  s.final_time = 100.0;
  s.quadrature_order = 1024;  // the narrow packet needs a finer energy rule
  ASSERT_LT(check_quadrature(s).relative_change, s.quadrature_tolerance);
  const Wavefield wf(s);
  for (SamplingMode mode : {SamplingMode::gaussian, SamplingMode::born}) {
    try {
      sample_ensemble(wf, 10, 1, mode, total_probability(wf, 0.0));
      ADD_FAILURE();
    } catch (const error& e) {
      EXPECT_EQ(e.code(), errc::empty_slice);
    }
  }
}

TEST(NoCrossing, IdenticalSeedsNeverSeparate) {
  const Scenario s = preset("step-case1");
  const Wavefield wf(s);
  const IntegratorOptions o = integrator_options(wf);
  const Trajectory a = integrate(forward_seed(-400.0), wf, o, 0), b = integrate(forward_seed(-400.0), wf, o, 1);
  const CrossingReport r = check_no_crossing({a, b}, s.dt);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.pairs_checked, 1u);
  EXPECT_EQ(r.comparisons, a.size());
}

TEST(NoCrossing, SwappedOrderIsFlagged) {
  auto make = [](std::size_t id, std::vector<double> xs) {
    Trajectory tr;
    tr.id = id;
    Branch b;
    for (std::size_t i = 0; i < xs.size(); ++i) b.samples.push_back({0.1 * static_cast<double>(i), xs[i], 1.0, 0.0, true});
    tr.branches.push_back(b);
    return tr;
  };
  const CrossingReport r = check_no_crossing({make(0, {0.0, 1.0, 2.0, 3.0}), make(1, {1.0, 1.5, 1.8, 2.5})}, 0.1);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_NEAR(r.violations[0].t, 0.2, 1e-12);
  EXPECT_EQ(r.violations[0].x_first, 2.0);
  EXPECT_EQ(r.violations[0].x_second, 1.8);

  // opposite directions are never compared
  Trajectory back = make(2, {1.0, 1.5, 1.8, 2.5});
  back.branches[0].direction = Direction::backward;
  EXPECT_EQ(check_no_crossing({make(0, {0.0, 1.0, 2.0, 3.0}), back}, 0.1).pairs_checked, 0u);
}

TEST(NoCrossing, FreeEnsembleKeepsItsOrder) {
  const Scenario s = free_travelling();
  const Wavefield wf(s);
  const auto trs = integrate_ensemble(sample_ensemble(s, 10, 3), wf, integrator_options(wf));
  const CrossingReport r = check_no_crossing(trs, s.dt);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.pairs_checked, 45u);
}

TEST(Diagnostics, OscillationPeriod) {
  EXPECT_FALSE(oscillation_period({1.0, 2.0}).has_value());
  EXPECT_DOUBLE_EQ(*oscillation_period({0.0, 1.5, 3.1, 4.6}), 3.0);
  Branch b;
  for (int i = 0; i <= 100; ++i) b.samples.push_back({0.1 * i, 0.0, 1.0, std::sin(0.1 * i * 2.0), true});
  const auto z = velocity_zero_crossings(b);
  ASSERT_EQ(z.size(), 6u);
  EXPECT_NEAR(z[0], std::numbers::pi / 2, 1e-2);
  EXPECT_NEAR(*oscillation_period(z), std::numbers::pi, 1e-2);
}
