#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "experiment.hpp"

namespace nlcm::experiment {
namespace {

namespace fs = std::filesystem;

const std::string kConfigDir = NLCM_CONFIG_DIR;

ExperimentConfig single(const std::string& yaml) {
  auto cfgs = parse_config(yaml, "test");
  EXPECT_EQ(cfgs.size(), 1u);
  return cfgs.front();
}

const char* kHarmonic = R"(
system: harmonic
family: timeshift
initial: [1, 0.3]
t_span: [0, 5]
constants: [nonlocal, energy]
)";

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nlcm_test_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(Catalog, ListsBuiltins) {
  const auto text = list_catalog();
  for (const char* name : {"pais_uhlenbeck", "rotation", "timeshift", "k2", "viscous", "quartic"}) {
    EXPECT_NE(text.find(name), std::string::npos) << name;
  }
}

TEST(Config, ParsesScalarAndMappingForms) {
  const auto cfg = single(kHarmonic);
  EXPECT_EQ(cfg.name, "test");
  EXPECT_EQ(cfg.system.name, "harmonic");
  ASSERT_TRUE(cfg.family);
  EXPECT_EQ(cfg.family->name, "timeshift");
  EXPECT_EQ(cfg.initial, (std::vector<Vector>{{1.0}, {0.3}}));
  EXPECT_EQ(cfg.t_end, 5.0);
  EXPECT_EQ(cfg.constants.size(), 2u);
  EXPECT_EQ(cfg.constants[0].budget, 1e-6);
}

TEST(Config, RejectsBadInput) {
  const std::vector<std::string> bad = {
      "system: harmonic\ninitial: [1, 0]\nt_span: [0, 1]\nconstants: [energy]\nbogus: 1\n",
      "system: nope\ninitial: [1, 0]\nt_span: [0, 1]\nconstants: [energy]\n",
      "system: harmonic\ninitial: [1, 0, 2]\nt_span: [0, 1]\nconstants: [energy]\n",
      "system: harmonic\ninitial: [1, 0]\nt_span: [0, 0]\nconstants: [energy]\n",
      "system: harmonic\ninitial: [1, 0]\nt_span: [0, 1]\nconstants: [nonlocal]\n",
      "system: harmonic\ninitial: [1, 0]\nt_span: [0, 1]\nconstants: [pu_k1]\n",
      "system: harmonic\ninitial: [1, 0]\nt_span: [0, 1]\nconstants: [energy, energy]\n",
      "system: harmonic\nfamily: rotation\ninitial: [1, 0]\nt_span: [0, 1]\nconstants: [nonlocal]\n",
      "system: {name: pais_uhlenbeck, w1: -1}\ninitial: [1, 0, 0, 0]\nt_span: [0, 1]\nconstants: [k1]\n",
      "system: harmonic\ninitial: [1, 0]\nt_span: [0, 1]\nintegrator: {tol: -1}\nconstants: [energy]\n",
      "system: [unclosed\n",
  };
  for (const auto& text : bad) {
    bool threw = false;
    try {
      auto cfgs = parse_config(text, "bad");
      for (auto& c : cfgs) build_system(c.system);
    } catch (const ConfigError&) {
      threw = true;
    }
    EXPECT_TRUE(threw) << text;
  }
}

TEST(Config, OutputDirectoryPrecedence) {
  auto cfg = single(kHarmonic);
  ::setenv("NLCM_OUT_DIR", "from_env", 1);
  auto a = cfg;
  apply_overrides(a, {});
  EXPECT_EQ(*a.out_dir, "from_env");
  auto b = cfg;
  b.out_dir = "from_file";
  apply_overrides(b, {});
  EXPECT_EQ(*b.out_dir, "from_file");
  auto c = b;
  apply_overrides(c, Overrides{2.0, 1e-8, "from_flag"});
  EXPECT_EQ(*c.out_dir, "from_flag");
  EXPECT_EQ(c.t_end, 2.0);
  EXPECT_EQ(c.integrator.rel_tol, 1e-8);
  ::unsetenv("NLCM_OUT_DIR");
  auto d = cfg;
  apply_overrides(d, {});
  EXPECT_EQ(*d.out_dir, "nlcm_out");
}

TEST(Run, PaisUhlenbeckK1) {
  auto cfg = load_config(kConfigDir + "/pu_k1.yaml").front();
  const auto r = run_experiment(cfg, false);
  EXPECT_EQ(r.exit_code, kOk) << r.error;
  const auto it = std::find(r.columns.begin(), r.columns.end(), "k1");
  ASSERT_NE(it, r.columns.end());
  const std::size_t col = static_cast<std::size_t>(it - r.columns.begin());
  std::size_t finite = 0;
  for (const auto& row : r.rows) {
    if (std::isnan(row[col])) continue;
    ++finite;
    EXPECT_NEAR(row[col], -1.5, 1e-8);
  }
  EXPECT_GT(finite, r.rows.size() / 2);
}

TEST(Run, ViscousBackwardIsMonotone) {
  const auto r = run_experiment(load_config(kConfigDir + "/viscous_backward.yaml").front(), false);
  EXPECT_EQ(r.exit_code, kOk) << r.error;
  bool saw_monotone = false;
  for (const auto& h : r.hypotheses) {
    EXPECT_TRUE(h.passed) << h.name;
    saw_monotone = saw_monotone || h.name == "viscous:weighted_energy_monotone";
  }
  EXPECT_TRUE(saw_monotone);
}

TEST(Run, QuarticPotentialBlowsUp) {
  const auto r = run_experiment(load_config(kConfigDir + "/quartic_blowup.yaml").front(), false);
  EXPECT_EQ(r.exit_code, kIntegrationFailure);
  ASSERT_TRUE(r.last_valid_time);
  EXPECT_LT(*r.last_valid_time, 0.0);
  EXPECT_GT(*r.last_valid_time, -20.0);
}

TEST(Run, TightBudgetReportsDrift) {
  auto cfg = single(kHarmonic);
  cfg.constants[1].budget = 0.0;
  const auto r = run_experiment(cfg, false);
  EXPECT_EQ(r.exit_code, kDriftExceeded);
  EXPECT_FALSE(r.constants[1].within_budget);
  EXPECT_TRUE(r.constants[0].within_budget);
}

TEST(Run, FailedHypothesisBlocksTheConstant) {
  auto cfg = single(R"(
system: {name: viscous, m: 1, k: 0.5, potential: quadratic}
initial: [1, 0]
t_span: [0, 2]
constants: [k1]
)");
  const auto blocked = run_experiment(cfg, false);
  EXPECT_EQ(blocked.exit_code, kDriftExceeded);
  EXPECT_FALSE(blocked.constants[0].drift);
  EXPECT_FALSE(blocked.hypotheses.at(0).passed);
  cfg.enforce_hypotheses = false;
  const auto explored = run_experiment(cfg, false);
  EXPECT_TRUE(explored.constants[0].drift);
}

TEST(Run, InvalidConfigIsExitTwo) {
  auto cfg = single(kHarmonic);
  cfg.initial.pop_back();
  EXPECT_EQ(run_experiment(cfg, false).exit_code, kConfigError);
}

// The CSV written to disk parses back to the in-memory values bit for bit.
TEST(Run, CsvRoundTripIsExact) {
  auto cfg = load_config(kConfigDir + "/pu_k1.yaml").front();
  cfg.t_end = 3.0;
  cfg.out_dir = scratch_dir("roundtrip").string();
  const auto r = run_experiment(cfg, true);
  ASSERT_EQ(r.exit_code, kOk) << r.error;
  std::ifstream in(r.csv_path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,q[0],q1[0],q2[0],q3[0],k1,pu_k1,nonlocal");
  std::size_t i = 0;
  while (std::getline(in, line)) {
    ASSERT_LT(i, r.rows.size());
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      const double v = std::strtod(cell.c_str(), nullptr);
      const double expected = r.rows[i][c];
      if (std::isnan(expected)) {
        EXPECT_EQ(cell, "nan");
      } else {
        EXPECT_EQ(std::memcmp(&v, &expected, sizeof v), 0) << "row " << i << " col " << c;
      }
      ++c;
    }
    EXPECT_EQ(c, r.columns.size());
    ++i;
  }
  EXPECT_EQ(i, r.rows.size());
  const auto& traj = *r.trajectory;
  EXPECT_EQ(r.rows.back()[1], traj.samples().back().jets[0][0]);

  std::ifstream js(r.summary_path);
  const auto summary = nlohmann::json::parse(js);
  EXPECT_EQ(summary["status"], "ok");
  EXPECT_LE(summary["constants"]["k1"]["drift"]["max_rel_drift"].get<double>(), 1e-6);
}

TEST(Batch, RunsEveryExperimentAndCombinesCodes) {
  auto cfgs = load_config(kConfigDir + "/batch.yaml");
  ASSERT_EQ(cfgs.size(), 3u);
  for (auto& c : cfgs) c.t_end = 5.0;
  const auto results = run_batch(cfgs, false, 3);
  ASSERT_EQ(results.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(results[i].name, cfgs[i].name);
    EXPECT_EQ(results[i].exit_code, kOk) << results[i].name << ": " << results[i].error;
  }
  EXPECT_EQ(combine_exit_codes({0, 1, 3}), 3);
  EXPECT_EQ(combine_exit_codes({1, 2, 3}), 2);
  EXPECT_EQ(combine_exit_codes({0, 1}), 1);
  EXPECT_EQ(combine_exit_codes({}), 0);
}

TEST(Check, ReportsHypothesesWithoutOutput) {
  const auto ok = check_experiment(load_config(kConfigDir + "/pu_k1.yaml").front());
  EXPECT_EQ(ok.exit_code, kOk);
  const auto bad = check_experiment(load_config(kConfigDir + "/quartic_blowup.yaml").front());
  EXPECT_EQ(bad.exit_code, kDriftExceeded);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NLCM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const auto out = scratch_dir("cli");
  EXPECT_EQ(run_cli("list"), 0);
  EXPECT_EQ(run_cli("run --config " + kConfigDir + "/pu_k1.yaml --tf 5 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "pu_k1.csv"));
  EXPECT_TRUE(fs::exists(out / "pu_k1.summary.json"));
  EXPECT_EQ(run_cli("run --config " + kConfigDir + "/quartic_blowup.yaml --out " + out.string()), 3);
  EXPECT_EQ(run_cli("run --config /nonexistent.yaml"), 2);
  EXPECT_EQ(run_cli("run"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("check --config " + kConfigDir + "/viscous_backward.yaml"), 0);
}

}  // namespace
}  // namespace nlcm::experiment
