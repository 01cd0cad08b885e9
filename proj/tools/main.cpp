// nlcm: integrate a catalog system and track constants of motion.
//
//   nlcm run --config exp.yaml [--tf X] [--tol X] [--out DIR]
//   nlcm check --config exp.yaml
//   nlcm list
//
// Exit codes: 0 ok, 1 drift budget or hypothesis failure, 2 config error,
// 3 integration failure. Batches report the most severe code (2 > 3 > 1 > 0).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "experiment.hpp"

namespace ex = nlcm::experiment;

namespace {

void report(const ex::ExperimentResult& r) {
  std::fprintf(stderr, "%-24s %-18s exit %d", r.name.c_str(), r.status.c_str(), r.exit_code);
  if (r.last_valid_time) std::fprintf(stderr, "  last valid t = %.17g", *r.last_valid_time);
  if (!r.error.empty()) std::fprintf(stderr, "  (%s)", r.error.c_str());
  std::fputc('\n', stderr);
  for (const auto& c : r.constants) {
    if (c.drift) {
      std::fprintf(stderr, "  %-18s value %.12g  rel drift %.3g  budget %.3g %s\n", c.name.c_str(),
                   c.drift->reference_value, c.drift->max_rel_drift, c.budget, c.within_budget ? "ok" : "EXCEEDED");
    } else {
      std::fprintf(stderr, "  %-18s %s\n", c.name.c_str(), c.note.c_str());
    }
  }
  for (const auto& h : r.hypotheses) {
    std::fprintf(stderr, "  check %-30s %s\n", h.name.c_str(), h.passed ? "PASS" : "FAIL");
  }
}

std::optional<std::vector<ex::ExperimentConfig>> load(const std::string& path) {
  try {
    return ex::load_config(path);
  } catch (const ex::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal constants of motion for Lagrangian systems"};
  app.require_subcommand(1);

  std::string config;
  std::optional<double> tf;
  std::optional<double> tol;
  std::optional<std::string> out;
  std::size_t jobs = 0;

  auto* run = app.add_subcommand("run", "integrate and evaluate the configured constants");
  run->add_option("--config", config, "YAML experiment or batch file")->required();
  run->add_option("--tf", tf, "override the end of t_span");
  run->add_option("--tol", tol, "override rel_tol and abs_tol");
  run->add_option("--out", out, "output directory (default: $NLCM_OUT_DIR, then ./nlcm_out)");
  run->add_option("-j,--jobs", jobs, "concurrent experiments in a batch (0 = one per core)");

  auto* check = app.add_subcommand("check", "validate a config and its hypotheses on a short probe window");
  check->add_option("--config", config, "YAML experiment or batch file")->required();

  app.add_subcommand("list", "list registered systems, families, constants and potentials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ex::kConfigError;
  }

  if (app.got_subcommand("list")) {
    std::cout << ex::list_catalog();
    return ex::kOk;
  }

  auto cfgs = load(config);
  if (!cfgs) return ex::kConfigError;

  std::vector<int> codes;
  if (app.got_subcommand("check")) {
    nlohmann::json all = nlohmann::json::array();
    for (const auto& cfg : *cfgs) {
      const auto r = ex::check_experiment(cfg);
      report(r);
      all.push_back(ex::summary_json(r, cfg));
      codes.push_back(r.exit_code);
    }
    std::cout << all.dump(2) << '\n';
    return ex::combine_exit_codes(codes);
  }

  try {
    for (auto& cfg : *cfgs) ex::apply_overrides(cfg, ex::Overrides{tf, tol, out});
  } catch (const ex::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return ex::kConfigError;
  }
  const auto results = ex::run_batch(*cfgs, true, jobs);
  for (const auto& r : results) {
    report(r);
    if (!r.summary_path.empty()) std::cout << r.summary_path.string() << '\n';
    codes.push_back(r.exit_code);
  }
  return ex::combine_exit_codes(codes);
}
