#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "klein_pilot/pipeline.hpp"

using namespace klein_pilot;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("klein_pilot_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(KLEIN_PILOT_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "scenario.cfg";
  std::ofstream(p) << body;
  return p;
}

json load_json(const fs::path& p) { return json::parse(read_file(p.string())); }

}  // namespace

TEST(Presets, AllNamesResolve) {
  ASSERT_EQ(preset_names().size(), 7u);
  for (const auto& name : preset_names()) {
    const Scenario s = preset(name);
    EXPECT_EQ(s.name, name);
    EXPECT_NO_THROW(validate(s)) << name;
  }
  const Scenario s3 = preset("step-case3");
  EXPECT_EQ(s3.potential, 3.0);
  EXPECT_EQ(s3.packet.spread, 100.0);
  EXPECT_DOUBLE_EQ(s3.packet.k0, 1.0 / std::sqrt(3.0));
  EXPECT_EQ(case_label(s3).regime, Regime::case3);
  const Scenario b2 = preset("barrier-case2");
  EXPECT_EQ(b2.potential, 2.0);
  EXPECT_EQ(b2.width, 1.0);
  EXPECT_EQ(b2.geometry, Geometry::barrier);
  EXPECT_DOUBLE_EQ(preset("barrier-case1").packet.k0, 4.0 / 3.0);
  EXPECT_EQ(preset("step-case0").packet.spread, 0.1);
  EXPECT_EQ(case_label(preset("step-case2")).regime, Regime::case2);
}

TEST(Presets, UnknownNameIsReported) {
  try {
    preset("step-case4");
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::unknown_preset);
  }
}

TEST(Config, GrammarAndOverrides) {
  std::istringstream in(
      "# Klein step with a wider packet\n"
      "preset = step-case3\n"
      "\n"
      "spread = 120   # trailing comment\n"
      "  rng_seed=99\n"
      "sampling = born\n"
      "name = wide\n");
  const Scenario s = parse_config(in);
  EXPECT_EQ(s.potential, 3.0);
  EXPECT_EQ(s.packet.spread, 120.0);
  EXPECT_EQ(s.rng_seed, 99u);
  EXPECT_EQ(s.sampling, SamplingMode::born);
  EXPECT_EQ(s.name, "wide");
}

TEST(Config, ErrorsCarryTheLine) {
  const std::map<std::string, std::string> bad{
      {"preset = step-case1\nmystery = 1\n", "line 2"},
      {"potential = three\n", "line 1"},
      {"potential = 3\npreset = step-case3\n", "line 2"},
      {"preset = step-case1\njust words\n", "line 2"},
      {"geometry = ring\n", "line 1"},
      {"quadrature_order = 2.5\n", "line 1"},
      {"preset = nowhere\n", "line 1"},
      {"dx =\n", "line 1"}};
  for (const auto& [text, where] : bad) {
    std::istringstream in(text);
    try {
      parse_config(in);
      ADD_FAILURE() << text;
    } catch (const error& e) {
      EXPECT_EQ(e.code(), errc::config_error) << text;
      EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(load_config("/nonexistent/klein.cfg"), error);
}

TEST(Io, GitBlobIds) {
  EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(Io, FloatsKeepSeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(-2.0), "-2");
  EXPECT_EQ(dump_json(json{{"a", 0.1}, {"b", 3}, {"c", {1.5, "x"}}}),
            "{\n  \"a\": 0.10000000000000001,\n  \"b\": 3,\n  \"c\": [\n    1.5,\n    \"x\"\n  ]\n}\n");
  EXPECT_EQ(json::parse(dump_json(json{{"v", 1.0 / 3.0}}))["v"].get<double>(), 1.0 / 3.0);
}

TEST(Cli, KleinStepRunWritesEverything) {
  const fs::path dir = scratch("step3");
  ASSERT_EQ(run_cli("run step-case3 --ensemble 4 --out " + (dir / "out").string(), dir / "log.txt"), 0)
      << read_file((dir / "log.txt").string());
  for (const char* f : {"density.csv", "trajectories.csv", "ledger.json", "ensemble.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  const json ledger = load_json(dir / "out" / "ledger.json");
  EXPECT_EQ(ledger["identity"], "step3");
  EXPECT_LT(ledger["residual"].get<double>(), 5e-3);
  const json manifest = load_json(dir / "out" / "manifest.json");
  EXPECT_EQ(manifest["exit_code"], 0);
  EXPECT_EQ(manifest["config"]["name"], "step-case3");
  EXPECT_EQ(manifest["config"]["ensemble_size"], 4);
  for (const auto& [name, id] : manifest["files"].items())
    EXPECT_EQ(id.get<std::string>(), git_blob_sha1(read_file((dir / "out" / name).string()))) << name;
  const std::string csv = read_file((dir / "out" / "trajectories.csv").string());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "trajectory_id,t,x,density,velocity");
  const std::string dens = read_file((dir / "out" / "density.csv").string());
  EXPECT_EQ(dens.substr(0, dens.find('\n')), "t,x,re_phi_plus,im_phi_plus,re_phi_minus,im_phi_minus,density,current");
}

TEST(Cli, RerunsAreByteIdentical) {
  const fs::path dir = scratch("rerun");
  const fs::path cfg = write_config(dir, "preset = step-case1\nensemble_size = 3\nrng_seed = 12345\nsampling = born\n");
  ASSERT_EQ(run_cli("run --config " + cfg.string() + " --out " + (dir / "a").string(), dir / "a.txt"), 0);
  ASSERT_EQ(run_cli("run --config " + cfg.string() + " --out " + (dir / "b").string(), dir / "b.txt"), 0);
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir / "a")) names.insert(e.path().filename().string());
  EXPECT_EQ(names.size(), 5u);
  for (const auto& n : names) {
    if (n == "manifest.json") continue;  // carries the wall time
    EXPECT_EQ(read_file((dir / "a" / n).string()), read_file((dir / "b" / n).string())) << n;
  }
  EXPECT_EQ(load_json(dir / "a" / "manifest.json")["files"], load_json(dir / "b" / "manifest.json")["files"]);
}

TEST(Cli, FlagsOverrideTheConfig) {
  const fs::path dir = scratch("override");
  const fs::path cfg = write_config(dir, "preset = step-case1\nensemble_size = 3\nrng_seed = 1\n");
  ASSERT_EQ(run_cli("run --config " + cfg.string() + " --ensemble 2 --seed 8 --out " + (dir / "o").string(),
                    dir / "log.txt"),
            0);
  const json m = load_json(dir / "o" / "manifest.json");
  EXPECT_EQ(m["config"]["ensemble_size"], 2);
  EXPECT_EQ(m["config"]["rng_seed"], 8);
}

TEST(Cli, UnderResolvedQuadratureIsAnInvariantFailure) {
  const fs::path dir = scratch("quad");
  EXPECT_EQ(run_cli("run step-case3 --quadrature 16 --out " + (dir / "o").string(), dir / "log.txt"), 2);
  EXPECT_NE(read_file((dir / "log.txt").string()).find("QuadratureUnderResolved"), std::string::npos);
  EXPECT_EQ(load_json(dir / "o" / "manifest.json")["exit_code"], 2);
}

TEST(Cli, LedgerResidualAboveToleranceHasItsOwnCode) {
  const fs::path dir = scratch("ledger");
  const fs::path cfg = write_config(dir, "preset = step-case3\nledger_tolerance = 1e-30\nensemble_size = 2\n");
  EXPECT_EQ(run_cli("run --config " + cfg.string() + " --out " + (dir / "o").string(), dir / "log.txt"), 3);
}

TEST(Cli, ConfigErrors) {
  const fs::path dir = scratch("config");
  const fs::path cfg = write_config(dir, "preset = step-case3\npotential = lots\n");
  EXPECT_EQ(run_cli("run --config " + cfg.string() + " --out " + (dir / "o").string(), dir / "a.txt"), 4);
  EXPECT_NE(read_file((dir / "a.txt").string()).find("line 2"), std::string::npos);
  EXPECT_EQ(run_cli("run nowhere --out " + (dir / "o").string(), dir / "b.txt"), 4);
  EXPECT_EQ(run_cli("run --out " + (dir / "o").string(), dir / "c.txt"), 4);
  EXPECT_EQ(run_cli("run step-case1 --config " + cfg.string(), dir / "d.txt"), 4);
  EXPECT_EQ(run_cli("run step-case1 --refine 9", dir / "e.txt"), 4);
  const fs::path neg = write_config(dir, "preset = step-case1\nspread = -5\n");
  EXPECT_EQ(run_cli("run --config " + neg.string(), dir / "f.txt"), 4);
  EXPECT_FALSE(fs::exists(dir / "o"));
}

TEST(Cli, AppendixReportOnTheKleinBarrier) {
  const fs::path dir = scratch("appendix");
  ASSERT_EQ(run_cli("run barrier-case3 --check-appendix --ensemble 2 --out " + (dir / "o").string(), dir / "log.txt"),
            0)
      << read_file((dir / "log.txt").string());
  const json a = load_json(dir / "o" / "appendix.json");
  EXPECT_TRUE(a["ok"].get<bool>());
  EXPECT_NEAR(a["sum_total"].get<double>(), 1.0, 1e-12);
  EXPECT_GE(a["kappa_squared"].get<double>(), 1.0);
  EXPECT_LT(a["q"].get<double>(), 1.0);
  EXPECT_EQ(a["samples"], 1000);
}

TEST(Cli, RestPacketEnsembleSplits) {
  const fs::path dir = scratch("case0");
  ASSERT_EQ(run_cli("run step-case0 --ensemble 50 --out " + (dir / "o").string(), dir / "log.txt"), 0)
      << read_file((dir / "log.txt").string());
  const json e = load_json(dir / "o" / "ensemble.json");
  ASSERT_EQ(e["trajectories"].size(), 50u);
  int left = 0, right = 0;
  for (const auto& tr : e["trajectories"]) {
    const double x = tr["branches"].back()["x_end"].get<double>();
    left += x < -5.0;
    right += x > 5.0;
  }
  EXPECT_GT(left, 10);
  EXPECT_GT(right, 10);
  EXPECT_EQ(e["no_crossing"]["violations"].size(), 0u);
}

TEST(Cli, PresetsSubcommand) {
  const fs::path dir = scratch("list");
  ASSERT_EQ(run_cli("presets", dir / "log.txt"), 0);
  std::string expected;
  for (const auto& n : preset_names()) expected += n + "\n";
  EXPECT_EQ(read_file((dir / "log.txt").string()), expected);
}
