#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "klein_pilot/error.hpp"
#include "klein_pilot/scenario.hpp"

namespace klein_pilot {

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"step-case0",    "step-case1",    "step-case2",   "step-case3",
                                              "barrier-case1", "barrier-case2", "barrier-case3"};
  return names;
}

namespace detail {

// K0 = 1/sqrt(3): E = 2/sqrt(3), v = 1/2. The packet starts 400 from the step and
// the run lasts one return trip.
inline Scenario step_family(double potential) {
  Scenario s;
  s.geometry = Geometry::step;
  s.potential = potential;
  s.packet = {1.0 / std::sqrt(3.0), -400.0, 100.0};
  s.quadrature_order = 256;
  s.box_half_width = 1500.0;
  s.dx = 2.0;
  s.final_time = 2.0 * 400.0 / 0.5;
  s.dt = 0.1;
  s.plot_dx = 10.0;
  s.plot_dt = 20.0;
  return s;
}

// K0 = 4/3: E = 5/3, v = 4/5.
inline Scenario barrier_family(double potential, double width) {
  Scenario s;
  s.geometry = Geometry::barrier;
  s.potential = potential;
  s.width = width;
  s.packet = {4.0 / 3.0, -1000.0, 100.0};
  s.quadrature_order = 256;
  s.box_half_width = 3000.0;
  s.dx = 2.0;
  s.final_time = 2.0 * 1000.0 / 0.8;
  s.dt = 0.1;
  s.plot_dx = 10.0;
  s.plot_dt = 25.0;
  return s;
}

}  // namespace detail

inline Scenario preset(std::string_view name) {
  Scenario s;
  if (name == "step-case0") {
    s.geometry = Geometry::step;
    s.potential = 0.0;
    s.packet = {0.0, 0.0, 0.1};
    s.free_packet = FreePacket::standing;
    s.quadrature_order = 1024;
    s.box_half_width = 20.0;
    s.dx = 0.005;
    s.final_time = 15.0;
    s.dt = 0.01;
    s.plot_dx = 0.1;
    s.plot_dt = 0.1;
  } else if (name == "step-case1") {
    s = detail::step_family(1.0 / std::sqrt(3.0) - 0.5);
  } else if (name == "step-case2") {
    s = detail::step_family(2.0);
  } else if (name == "step-case3") {
    s = detail::step_family(3.0);
  } else if (name == "barrier-case1") {
    s = detail::barrier_family(1.0 / 3.0, 200.0);
  } else if (name == "barrier-case2") {
    s = detail::barrier_family(2.0, 1.0);
    s.dx = 0.5;
  } else if (name == "barrier-case3") {
    s = detail::barrier_family(3.0, 100.0);
  } else {
    throw error(errc::unknown_preset, "unknown preset '" + std::string(name) + "'");
  }
  s.name = std::string(name);
  return s;
}

// ---------------------------------------------------------------------------
// config files
//
//   # comment
//   preset = step-case3        (optional base; must come first)
//   potential = 3
//   k0 = 0.5773502691896258
//
// One `key = value` per line; blank lines and text after '#' are ignored.

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw error(errc::config_error, "'" + key + "' expects a number, got '" + v + "'");
  return out;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw error(errc::config_error, "'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

using Setter = std::function<void(Scenario&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const char* key, double Scenario::*field) {
      t[key] = [field](Scenario& s, const std::string& k, const std::string& v) { s.*field = parse_double(k, v); };
    };
    real("mass", &Scenario::mass);
    real("potential", &Scenario::potential);
    real("width", &Scenario::width);
    real("gaussian_cutoff", &Scenario::gaussian_cutoff);
    real("box_half_width", &Scenario::box_half_width);
    real("dx", &Scenario::dx);
    real("final_time", &Scenario::final_time);
    real("dt", &Scenario::dt);
    real("plot_dx", &Scenario::plot_dx);
    real("plot_dt", &Scenario::plot_dt);
    real("quadrature_tolerance", &Scenario::quadrature_tolerance);
    real("ledger_tolerance", &Scenario::ledger_tolerance);
    t["k0"] = [](Scenario& s, const std::string& k, const std::string& v) { s.packet.k0 = parse_double(k, v); };
    t["x0"] = [](Scenario& s, const std::string& k, const std::string& v) { s.packet.x0 = parse_double(k, v); };
    t["spread"] = [](Scenario& s, const std::string& k, const std::string& v) { s.packet.spread = parse_double(k, v); };
    t["name"] = [](Scenario& s, const std::string&, const std::string& v) { s.name = v; };
    t["quadrature_order"] = [](Scenario& s, const std::string& k, const std::string& v) {
      s.quadrature_order = parse_int<int>(k, v);
    };
    t["ensemble_size"] = [](Scenario& s, const std::string& k, const std::string& v) {
      s.ensemble_size = parse_int<int>(k, v);
    };
    t["rng_seed"] = [](Scenario& s, const std::string& k, const std::string& v) {
      s.rng_seed = parse_int<std::uint64_t>(k, v);
    };
    t["geometry"] = [](Scenario& s, const std::string& k, const std::string& v) {
      if (v == "step") s.geometry = Geometry::step;
      else if (v == "barrier") s.geometry = Geometry::barrier;
      else throw error(errc::config_error, "'" + k + "' must be step or barrier");
    };
    t["sampling"] = [](Scenario& s, const std::string& k, const std::string& v) {
      if (v == "gaussian") s.sampling = SamplingMode::gaussian;
      else if (v == "born") s.sampling = SamplingMode::born;
      else throw error(errc::config_error, "'" + k + "' must be gaussian or born");
    };
    t["free_packet"] = [](Scenario& s, const std::string& k, const std::string& v) {
      if (v == "travelling") s.free_packet = FreePacket::travelling;
      else if (v == "standing") s.free_packet = FreePacket::standing;
      else throw error(errc::config_error, "'" + k + "' must be travelling or standing");
    };
    return t;
  }();
  return table;
}

}  // namespace detail

/// Applies one key to a scenario; unknown keys are a config error.
inline void apply_setting(Scenario& s, const std::string& key, const std::string& value) {
  const auto& table = detail::setters();
  const auto it = table.find(key);
  if (it == table.end()) throw error(errc::config_error, "unknown key '" + key + "'");
  it->second(s, key, value);
}

inline Scenario parse_config(std::istream& in) {
  Scenario s;
  std::string line;
  int lineno = 0;
  bool seen_setting = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = detail::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw error(errc::config_error, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty() || value.empty())
      throw error(errc::config_error, "line " + std::to_string(lineno) + ": empty key or value");
    try {
      if (key == "preset") {
        if (seen_setting) throw error(errc::config_error, "preset must precede other keys");
        s = preset(value);
      } else {
        apply_setting(s, key, value);
      }
    } catch (const error& e) {
      throw error(errc::config_error, "line " + std::to_string(lineno) + ": " + e.what());
    }
    seen_setting = true;
  }
  return s;
}

inline Scenario load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::config_error, "cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace klein_pilot
