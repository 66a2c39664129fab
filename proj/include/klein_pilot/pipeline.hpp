#pragma once

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "klein_pilot/accounting.hpp"
#include "klein_pilot/error.hpp"
#include "klein_pilot/io.hpp"
#include "klein_pilot/multiscattering.hpp"
#include "klein_pilot/parallel.hpp"
#include "klein_pilot/presets.hpp"
#include "klein_pilot/trajectories.hpp"
#include "klein_pilot/wavepacket.hpp"

namespace klein_pilot {

inline constexpr const char* version = "1.0.0";

namespace exit_code {
inline constexpr int success = 0;
inline constexpr int invariant_failure = 2;
inline constexpr int ledger_failure = 3;
inline constexpr int config_error = 4;
}  // namespace exit_code

using json = nlohmann::ordered_json;

namespace detail {

inline void write_json(std::ostream& os, const json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * depth + 2), ' '), close(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        os << (first ? "" : ",\n") << pad << json(key).dump() << ": ";
        write_json(os, value, depth + 1);
        first = false;
      }
      os << '\n' << close << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        os << (i ? ",\n" : "") << pad;
        write_json(os, j[i], depth + 1);
      }
      os << '\n' << close << ']';
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      os << (std::isfinite(v) ? format_double(v) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

/// Two-space indented JSON with every float at 17 significant digits.
inline std::string dump_json(const json& j) {
  std::ostringstream os;
  detail::write_json(os, j, 0);
  os << '\n';
  return os.str();
}

inline json to_json(const Scenario& s) {
  return {{"name", s.name},
          {"geometry", to_string(s.geometry)},
          {"mass", s.mass},
          {"potential", s.potential},
          {"width", s.width},
          {"k0", s.packet.k0},
          {"x0", s.packet.x0},
          {"spread", s.packet.spread},
          {"quadrature_order", s.quadrature_order},
          {"gaussian_cutoff", s.gaussian_cutoff},
          {"box_half_width", s.box_half_width},
          {"dx", s.dx},
          {"final_time", s.final_time},
          {"dt", s.dt},
          {"plot_dx", s.plot_dx},
          {"plot_dt", s.plot_dt},
          {"ensemble_size", s.ensemble_size},
          {"sampling", to_string(s.sampling)},
          {"rng_seed", s.rng_seed},
          {"free_packet", to_string(s.free_packet)},
          {"quadrature_tolerance", s.quadrature_tolerance},
          {"ledger_tolerance", s.ledger_tolerance}};
}

inline json to_json(const ProbabilityLedger& L) {
  return {{"scenario", L.scenario},
          {"P_A", L.P_A},
          {"P_R", L.P_R},
          {"P_T", L.P_T},
          {"P_B", L.P_B},
          {"identity", to_string(L.identity)},
          {"residual", L.residual},
          {"grid_meta",
           {{"x_min", L.grid.x_min},
            {"x_max", L.grid.x_max},
            {"dx", L.grid.dx},
            {"nx", L.grid.nx},
            {"t_initial", L.grid.t_initial},
            {"t_final", L.grid.t_final},
            {"quadrature_order", L.grid.quadrature_order},
            {"edge_density", L.grid.edge_density}}}};
}

inline json ensemble_json(const Scenario& s, const std::vector<Trajectory>& trs, const CrossingReport& rep) {
  json seeds = json::array();
  for (const auto& tr : trs) {
    json branches = json::array();
    for (const auto& b : tr.branches)
      branches.push_back({{"direction", to_string(b.direction)},
                          {"t_start", b.samples.front().t},
                          {"x_start", b.samples.front().x},
                          {"t_end", b.samples.back().t},
                          {"x_end", b.samples.back().x}});
    seeds.push_back({{"trajectory_id", tr.id},
                     {"x0", tr.seed.x0},
                     {"t0", tr.seed.t0},
                     {"direction", to_string(tr.seed.direction)},
                     {"label", to_string(tr.seed.label)},
                     {"termination", to_string(tr.termination)},
                     {"min_density", tr.min_density},
                     {"max_speed", tr.max_speed},
                     {"branches", branches}});
  }
  json violations = json::array();
  for (const auto& v : rep.violations)
    violations.push_back({{"first_id", v.first_id},
                          {"second_id", v.second_id},
                          {"t", v.t},
                          {"x_first", v.x_first},
                          {"x_second", v.x_second}});
  return {{"scenario", s.name},
          {"sampling", to_string(s.sampling)},
          {"rng_seed", s.rng_seed},
          {"size", trs.size()},
          {"trajectories", seeds},
          {"no_crossing", {{"pairs_checked", rep.pairs_checked}, {"comparisons", rep.comparisons}, {"violations", violations}}}};
}

struct AppendixReport {
  double kappa = 0.0;
  double kappa_squared = 0.0;  ///< from kappa_bound_check
  double q = 0.0;
  SeriesTerm sums;
  double max_tail_error = 0.0;  ///< max over n of |tail(n) - q^(n+1)|
  int samples = 0;
  int q_violations = 0;      ///< samples with q >= 1
  int kappa_violations = 0;  ///< samples with kappa^2 < 1
  double max_kappa_mismatch = 0.0;

  bool ok() const {
    return std::abs(sums.R + sums.T - 1.0) <= 1e-12 && max_tail_error <= 1e-12 && q < 1.0 && q_violations == 0 &&
           kappa_violations == 0 && max_kappa_mismatch <= 1e-12;
  }
};

/// Series checks at the mean energy plus a random sweep of the Klein regime.
inline AppendixReport appendix_report(const Scenario& s, int samples = 1000) {
  if (s.geometry != Geometry::barrier || case_label(s).regime != Regime::case3)
    throw error(errc::wrong_case, "the multiple-scattering check needs a Klein-regime barrier");
  AppendixReport r;
  const ScatteringSolution sol = barrier_solution(physical_params(s));
  const ScatteringSeries series = scattering_series(sol);
  r.kappa = sol.kappa.real();
  r.kappa_squared = kappa_bound_check(s.mass, mean_energy(s), s.potential);
  r.q = series.q;
  r.sums = series.sum();
  for (int n = 0; n <= 40; ++n)
    r.max_tail_error = std::max(r.max_tail_error, std::abs(series.tail(n) - std::pow(series.q, n + 1)));

  r.samples = samples;
  const double m = s.mass;
  for (int i = 0; i < samples; ++i) {
    detail::SeedRng rng(s.rng_seed, 1000000u + static_cast<std::uint64_t>(i));
    const double V = m * (2.0 + 1e-6 + 8.0 * rng.uniform());
    const double E = m + (V - 2.0 * m) * (1e-6 + (1.0 - 2e-6) * rng.uniform());
    const double L = 0.1 + 200.0 * rng.uniform();
    const ScatteringSolution b = barrier_solution({m, V, L, E});
    const double k2 = kappa_bound_check(m, E, V);
    if (!(k2 >= 1.0)) ++r.kappa_violations;
    if (!(contraction_factor(b) < 1.0)) ++r.q_violations;
    const double kk = b.kappa.real() * b.kappa.real();
    r.max_kappa_mismatch = std::max(r.max_kappa_mismatch, std::abs(k2 - kk) / kk);
  }
  return r;
}

inline json to_json(const AppendixReport& r) {
  return {{"kappa", r.kappa},
          {"kappa_squared", r.kappa_squared},
          {"q", r.q},
          {"sum_R", r.sums.R},
          {"sum_T", r.sums.T},
          {"sum_total", r.sums.R + r.sums.T},
          {"max_tail_error", r.max_tail_error},
          {"samples", r.samples},
          {"q_violations", r.q_violations},
          {"kappa_violations", r.kappa_violations},
          {"max_kappa_mismatch", r.max_kappa_mismatch},
          {"ok", r.ok()}};
}

/// Largest |J1| - (1 + 1e-12) J0 over a grid; positive means a breach.
inline double causality_excess(const FieldGrid& g) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.density.size(); ++k)
    worst = std::max(worst, std::abs(g.current[k]) - g.density[k] * (1.0 + 1e-12));
  return worst;
}

struct RunOptions {
  std::string out_dir = ".";
  bool check_appendix = false;
  bool write_outputs = true;
};

struct RunResult {
  int exit_code = exit_code::success;
  std::vector<std::string> failures;
  ProbabilityLedger ledger;
  CrossingReport crossing;
  std::vector<Trajectory> trajectories;
  std::vector<std::pair<std::string, std::string>> files;  ///< name, git blob id
};

/// synthesize -> ledger -> ensemble -> (appendix) -> files. Errors raised by the
/// library map to exit codes; nothing escapes.
inline RunResult run(const Scenario& s, const RunOptions& opts, std::ostream& log) {
  RunResult res;
  const auto started = std::chrono::steady_clock::now();
  auto fail = [&](const std::string& what) {
    res.failures.push_back(what);
    log << "FAIL " << what << '\n';
  };

  std::vector<std::pair<std::string, std::string>> outputs;  // name, content
  try {
    validate(s);
    const CaseLabel label = case_label(s);
    log << "scenario " << s.name << ": " << to_string(label.geometry) << ' ' << to_string(label.regime) << '\n';
    if (opts.write_outputs) std::filesystem::create_directories(opts.out_dir);

    const FieldGrid field = synthesize_field(s);
    res.ledger = build_ledger(s, field);
    log << "ledger " << to_string(res.ledger.identity) << " residual " << format_double(res.ledger.residual) << '\n';
    if (causality_excess(field) > 0.0) fail("|J1| exceeds J0 on the ledger grid");

    const Wavefield wf(s);
    const FieldGrid plot = synthesize_field(wf, uniform_nodes(-s.box_half_width, s.box_half_width, s.plot_dx),
                                           uniform_nodes(0.0, s.final_time, s.plot_dt));
    if (causality_excess(plot) > 0.0) fail("|J1| exceeds J0 on the plot grid");
    if (label.regime == Regime::free) {
      const double drift = std::abs(slice_probability(field, s.final_time, field.x.front(), field.x.back()) /
                                        slice_probability(field, 0.0, field.x.front(), field.x.back()) -
                                    1.0);
      if (drift >= 1e-3) fail("free-packet norm drift " + format_double(drift));
    }
    std::ostringstream density_csv;
    write_field_csv(density_csv, plot);
    outputs.emplace_back("density.csv", density_csv.str());

    const IntegratorOptions io = integrator_options(wf);
    const std::vector<Seed> seeds = sample_ensemble(wf, s.ensemble_size, s.rng_seed, s.sampling, io.density_scale);
    res.trajectories = integrate_ensemble(seeds, wf, io);
    res.crossing = check_no_crossing(res.trajectories, s.dt);
    std::size_t stalls = 0;
    for (const auto& tr : res.trajectories) stalls += tr.termination == Termination::node_stall;
    log << "ensemble " << res.trajectories.size() << " trajectories, " << stalls << " node stalls, "
        << res.crossing.violations.size() << " crossing violations\n";
    if (!res.crossing.ok()) fail("trajectory ordering violated");
    std::ostringstream traj_csv;
    write_trajectories_csv(traj_csv, res.trajectories);
    outputs.emplace_back("trajectories.csv", traj_csv.str());
    outputs.emplace_back("ensemble.json", dump_json(ensemble_json(s, res.trajectories, res.crossing)));
    outputs.emplace_back("ledger.json", dump_json(to_json(res.ledger)));

    if (opts.check_appendix) {
      const AppendixReport ar = appendix_report(s);
      log << "appendix q " << format_double(ar.q) << " sum " << format_double(ar.sums.R + ar.sums.T) << '\n';
      if (!ar.ok()) fail("multiple-scattering identities");
      outputs.emplace_back("appendix.json", dump_json(to_json(ar)));
    }

    if (!res.failures.empty())
      res.exit_code = exit_code::invariant_failure;
    else if (!(res.ledger.residual <= s.ledger_tolerance))
      res.exit_code = exit_code::ledger_failure;
  } catch (const error& e) {
    log << "error: " << e.what() << '\n';
    switch (e.code()) {
      case errc::quadrature_under_resolved:
      case errc::node_point:
      case errc::empty_slice:
        res.failures.push_back(e.what());
        res.exit_code = exit_code::invariant_failure;
        break;
      default:
        res.exit_code = exit_code::config_error;
        return res;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    res.exit_code = exit_code::config_error;
    return res;
  }

  if (opts.write_outputs) {
    try {
      json files = json::object();
      for (const auto& [name, content] : outputs) {
        write_file((std::filesystem::path(opts.out_dir) / name).string(), content);
        const std::string id = git_blob_sha1(content);
        res.files.emplace_back(name, id);
        files[name] = id;
      }
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      const json manifest = {{"tool", "klein-pilot"},
                             {"version", version},
                             {"config", to_json(s)},
                             {"files", files},
                             {"failures", res.failures},
                             {"exit_code", res.exit_code},
                             {"wall_time_seconds", wall}};
      write_file((std::filesystem::path(opts.out_dir) / "manifest.json").string(), dump_json(manifest));
    } catch (const error& e) {
      log << "error: " << e.what() << '\n';
      res.exit_code = exit_code::config_error;
    }
  }
  return res;
}

}  // namespace klein_pilot
