#pragma once

// Experiment runner behind the nlcm command-line tool: YAML configs, the
// name registries, CSV time series and JSON summaries.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlcm/nlcm.hpp"

namespace nlcm::experiment {

/// Malformed config, unknown name or inconsistent combination (exit 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int { kOk = 0, kDriftExceeded = 1, kConfigError = 2, kIntegrationFailure = 3 };

struct PotentialConfig {
  std::string name = "zero";
  double coefficient = 1.0;  // stiffness for quadratic, c for quartic
};

struct SystemConfig {
  std::string name;
  double m = 1.0;
  double k = 0.0;
  double w1 = 1.0;
  double w2 = 2.0;
  std::size_t dim = 1;
  PotentialConfig potential;
};

struct FamilyConfig {
  std::string name = "null";
  double a = 0.0;
  std::optional<double> mu;
};

struct ConstantRequest {
  std::string name;
  double budget = 1e-6;  // bound on max_rel_drift
};

struct ExperimentConfig {
  std::string name = "experiment";
  SystemConfig system;
  std::optional<FamilyConfig> family;
  std::vector<Vector> initial;  // jets 0..2N-1 at t_span[0]
  double t0 = 0.0;
  double t_end = 1.0;
  IntegratorConfig integrator;
  double quadrature_tol = 1e-11;
  std::vector<ConstantRequest> constants;
  std::optional<std::vector<double>> rho;
  bool enforce_hypotheses = true;
  std::optional<std::string> out_dir;
};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<double> t_end;
  std::optional<double> tol;
  std::optional<std::string> out_dir;
};

/// Parses a single experiment or a batch (`experiments:` list). Throws
/// ConfigError with the offending key in the message.
std::vector<ExperimentConfig> parse_config(const std::string& text, const std::string& default_name);
std::vector<ExperimentConfig> load_config(const std::filesystem::path& path);

/// Applies flag > file > $NLCM_OUT_DIR > "nlcm_out" for the output directory
/// and the numeric overrides.
void apply_overrides(ExperimentConfig& cfg, const Overrides& ov);

/// Builds the Lagrangian / family named in the config.
LagrangianSpec build_system(const SystemConfig& cfg);
PerturbationFamily build_family(const FamilyConfig& cfg, std::size_t dim);

struct HypothesisResult {
  std::string name;
  bool passed = false;
  std::optional<double> residual;
  std::optional<double> tolerance;
  std::string detail;
};

struct ConstantReport {
  std::string name;
  double budget = 0.0;
  std::optional<DriftReport> drift;
  bool within_budget = false;
  std::string note;
};

struct ExperimentResult {
  std::string name;
  int exit_code = kOk;
  std::string status = "ok";
  std::string error;
  std::optional<double> last_valid_time;
  IntegratorStats stats;
  std::optional<Trajectory> trajectory;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // one per trajectory node
  std::vector<ConstantReport> constants;
  std::vector<HypothesisResult> hypotheses;
  std::filesystem::path csv_path;
  std::filesystem::path summary_path;
};

/// Integrates, evaluates the requested constants at every node and, when
/// `write_files` is set, writes <out>/<name>.csv and <out>/<name>.summary.json.
/// Never throws; failures are reported through exit_code and status.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

/// Runs experiments concurrently, one integration per worker.
std::vector<ExperimentResult> run_batch(const std::vector<ExperimentConfig>& cfgs, bool write_files = true,
                                        std::size_t workers = 0);

/// Hypothesis checks only, on a short probe window after t0 (at most one time
/// unit); no output files.
ExperimentResult check_experiment(const ExperimentConfig& cfg);

/// Combined exit code of a batch: 2 > 3 > 1 > 0.
int combine_exit_codes(const std::vector<int>& codes);

nlohmann::json summary_json(const ExperimentResult& r, const ExperimentConfig& cfg);
void write_csv(std::ostream& out, const ExperimentResult& r);

/// Text listing of every registered system, family, constant and potential.
std::string list_catalog();

}  // namespace nlcm::experiment
