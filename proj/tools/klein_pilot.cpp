// klein-pilot: runs a preset or config file through the full pipeline.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "klein_pilot/klein_pilot.hpp"

namespace kp = klein_pilot;

int main(int argc, char** argv) {
  CLI::App app{"Pilot-wave simulation of Dirac scattering at potential steps and barriers"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "synthesize, integrate, account and export one scenario");
  std::string target, config, out = "out";
  std::optional<int> ensemble, quadrature;
  std::optional<std::string> sampling;
  std::optional<std::uint64_t> seed;
  bool check_appendix = false;
  int refine = 0;
  run->add_option("preset", target, "preset name")
      ->check(CLI::IsMember(kp::preset_names()));
  run->add_option("--config", config, "key = value scenario file")->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory");
  run->add_option("--ensemble", ensemble, "ensemble size")->check(CLI::PositiveNumber);
  run->add_option("--sampling", sampling, "gaussian or born")->check(CLI::IsMember({"gaussian", "born"}));
  run->add_option("--seed", seed, "rng seed");
  run->add_option("--quadrature", quadrature, "quadrature order")->check(CLI::Range(2, 1 << 20));
  run->add_flag("--check-appendix", check_appendix, "multiple-scattering checks (Klein barrier)");
  run->add_option("--refine", refine, "double quadrature order and halve dx k times")->check(CLI::Range(0, 6));

  CLI::App* list = app.add_subcommand("presets", "list preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kp::exit_code::config_error;
  }

  if (*list) {
    for (const auto& n : kp::preset_names()) std::cout << n << '\n';
    return 0;
  }

  kp::Scenario s;
  try {
    if (target.empty() == config.empty()) {
      std::cerr << "error: give exactly one of a preset name or --config\n";
      return kp::exit_code::config_error;
    }
    s = config.empty() ? kp::preset(target) : kp::load_config(config);
    if (ensemble) s.ensemble_size = *ensemble;
    if (sampling) s.sampling = *sampling == "born" ? kp::SamplingMode::born : kp::SamplingMode::gaussian;
    if (seed) s.rng_seed = *seed;
    if (quadrature) s.quadrature_order = *quadrature;
    s = kp::refined(s, refine);
    kp::validate(s);
  } catch (const kp::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kp::exit_code::config_error;
  }

  kp::RunOptions opts;
  opts.out_dir = out;
  opts.check_appendix = check_appendix;
  const kp::RunResult r = kp::run(s, opts, std::cout);
  std::cout << "exit " << r.exit_code << '\n';
  return r.exit_code;
}
