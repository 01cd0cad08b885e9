#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <yaml-cpp/yaml.h>

namespace nlcm::experiment {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Entry {
  const char* name;
  const char* summary;
};

const std::vector<Entry> kSystems = {
    {"harmonic", "L = q'^2/2 - q^2/2, n = 1"},
    {"free_particle", "L = |q'|^2/2; params: dim"},
    {"central_force", "planar L = m|q'|^2/2 - U(|q|); params: m, potential"},
    {"viscous", "L = e^{kt/m}(m|q'|^2/2 - U(q)); params: m, k, dim, potential"},
    {"pais_uhlenbeck", "order-2 oscillator; params: w1, w2, dim"},
};

const std::vector<Entry> kFamilies = {
    {"rotation", "q -> R(lambda) q, planar; optional mu"},
    {"timeshift", "q(t + lambda)"},
    {"exp_timeshift", "q(t + lambda e^{at}); params: a"},
    {"null", "delta = 0, mu = 0"},
};

const std::vector<Entry> kConstants = {
    {"nonlocal", "boundary term minus int_{t0}^t dL/dlambda (needs a family)"},
    {"energy", "dL/dq'.q' - L (first order, autonomous)"},
    {"k1", "time-shift first integral (autonomous)"},
    {"k2", "space-change first integral (needs rho)"},
    {"k3", "boundary term minus mu t (family with mu)"},
    {"pu_k1", "Pais-Uhlenbeck closed form K1"},
    {"pu_k2", "Pais-Uhlenbeck closed form K2"},
    {"pu_k3", "Pais-Uhlenbeck closed form K3 (n = 2)"},
    {"viscous", "e^{2kt/m}(m|q'|^2 + 2U) + 4(k/m) int_t^{t0} e^{2ks/m} U ds"},
    {"angular_momentum", "m det(q, q') (first order, n = 2)"},
};

const std::vector<Entry> kPotentials = {
    {"zero", "U = 0"},
    {"quadratic", "U = coefficient |q|^2 / 2"},
    {"quartic", "U = coefficient |q|^4"},
};

bool known(const std::vector<Entry>& list, const std::string& name) {
  return std::any_of(list.begin(), list.end(), [&](const Entry& e) { return name == e.name; });
}

std::string names_of(const std::vector<Entry>& list) {
  std::string out;
  for (const auto& e : list) out += (out.empty() ? "" : ", ") + std::string(e.name);
  return out;
}

// --- YAML helpers ----------------------------------------------------------

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get(const YAML::Node& node, const std::string& key, const std::string& where) {
  try {
    return node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + ": invalid value");
  }
}

template <class T>
void maybe(const YAML::Node& node, const std::string& key, T& target, const std::string& where) {
  if (node[key]) target = get<T>(node, key, where);
}

PotentialConfig parse_potential(const YAML::Node& node, const std::string& where) {
  PotentialConfig p;
  if (node.IsScalar()) {
    p.name = node.as<std::string>();
  } else {
    check_keys(node, {"name", "coefficient"}, where);
    p.name = get<std::string>(node, "name", where);
    maybe(node, "coefficient", p.coefficient, where);
  }
  if (!known(kPotentials, p.name)) {
    throw ConfigError(where + ": unknown potential '" + p.name + "' (known: " + names_of(kPotentials) + ")");
  }
  return p;
}

SystemConfig parse_system(const YAML::Node& node) {
  const std::string where = "system";
  SystemConfig s;
  if (node.IsScalar()) {
    s.name = node.as<std::string>();
  } else {
    check_keys(node, {"name", "m", "k", "w1", "w2", "dim", "potential"}, where);
    s.name = get<std::string>(node, "name", where);
    maybe(node, "m", s.m, where);
    maybe(node, "k", s.k, where);
    maybe(node, "w1", s.w1, where);
    maybe(node, "w2", s.w2, where);
    maybe(node, "dim", s.dim, where);
    if (node["potential"]) s.potential = parse_potential(node["potential"], where + ".potential");
  }
  if (!known(kSystems, s.name)) {
    throw ConfigError("system: unknown name '" + s.name + "' (known: " + names_of(kSystems) + ")");
  }
  if (s.name == "harmonic") s.dim = 1;
  if (s.name == "central_force") s.dim = 2;
  return s;
}

FamilyConfig parse_family(const YAML::Node& node) {
  const std::string where = "family";
  FamilyConfig f;
  if (node.IsScalar()) {
    f.name = node.as<std::string>();
  } else {
    check_keys(node, {"name", "a", "mu"}, where);
    f.name = get<std::string>(node, "name", where);
    maybe(node, "a", f.a, where);
    if (node["mu"]) f.mu = get<double>(node, "mu", where);
  }
  if (!known(kFamilies, f.name)) {
    throw ConfigError("family: unknown name '" + f.name + "' (known: " + names_of(kFamilies) + ")");
  }
  return f;
}

ConstantRequest parse_constant(const YAML::Node& node) {
  ConstantRequest c;
  if (node.IsScalar()) {
    c.name = node.as<std::string>();
  } else {
    check_keys(node, {"name", "budget"}, "constants[]");
    c.name = get<std::string>(node, "name", "constants[]");
    maybe(node, "budget", c.budget, "constants[" + c.name + "]");
  }
  if (!known(kConstants, c.name)) {
    throw ConfigError("constants: unknown name '" + c.name + "' (known: " + names_of(kConstants) + ")");
  }
  if (!(c.budget >= 0)) throw ConfigError("constants[" + c.name + "].budget must be >= 0");
  return c;
}

std::size_t system_order(const SystemConfig& s) { return s.name == "pais_uhlenbeck" ? 2 : 1; }

// Cross-field consistency that the YAML shape alone cannot express.
void validate(const ExperimentConfig& cfg) {
  const std::size_t order = system_order(cfg.system);
  const std::size_t n = cfg.system.dim;
  if (n == 0) throw ConfigError("system.dim must be >= 1");
  if (cfg.initial.size() != 2 * order) {
    throw ConfigError("initial: system '" + cfg.system.name + "' needs " + std::to_string(2 * order) +
                      " jets (q .. q^(" + std::to_string(2 * order - 1) + ")), got " +
                      std::to_string(cfg.initial.size()));
  }
  for (const auto& v : cfg.initial) {
    if (v.size() != n) throw ConfigError("initial: every jet needs " + std::to_string(n) + " components");
    for (double x : v) {
      if (!std::isfinite(x)) throw ConfigError("initial: entries must be finite");
    }
  }
  if (!std::isfinite(cfg.t0) || !std::isfinite(cfg.t_end) || cfg.t0 == cfg.t_end) {
    throw ConfigError("t_span: need two distinct finite times");
  }
  try {
    cfg.integrator.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("integrator: ") + e.what());
  }
  if (!(cfg.quadrature_tol > 0)) throw ConfigError("integrator.quadrature_tol must be > 0");
  std::set<std::string> seen;
  for (const auto& c : cfg.constants) {
    if (!seen.insert(c.name).second) throw ConfigError("constants: '" + c.name + "' requested twice");
    const bool planar = n == 2;
    if ((c.name == "nonlocal" || c.name == "k3") && !cfg.family) {
      throw ConfigError("constants: '" + c.name + "' needs a family");
    }
    if (c.name == "k3" && cfg.family && !cfg.family->mu) {
      throw ConfigError("constants: 'k3' needs family.mu");
    }
    if ((c.name == "energy" || c.name == "angular_momentum") && order != 1) {
      throw ConfigError("constants: '" + c.name + "' needs a first-order system");
    }
    if (c.name == "angular_momentum" && !planar) {
      throw ConfigError("constants: 'angular_momentum' needs n = 2");
    }
    if (c.name.rfind("pu_", 0) == 0 && cfg.system.name != "pais_uhlenbeck") {
      throw ConfigError("constants: '" + c.name + "' needs system pais_uhlenbeck");
    }
    if (c.name == "pu_k3" && !planar) throw ConfigError("constants: 'pu_k3' needs n = 2");
    if (c.name == "viscous" && cfg.system.name != "viscous") {
      throw ConfigError("constants: 'viscous' needs system viscous");
    }
    if (c.name == "k2" && cfg.system.name != "pais_uhlenbeck" && !cfg.rho) {
      throw ConfigError("constants: 'k2' needs rho");
    }
  }
  if (cfg.rho && cfg.rho->size() != order) {
    throw ConfigError("rho: need " + std::to_string(order) + " values");
  }
  if (cfg.family && cfg.family->name == "rotation" && n != 2) {
    throw ConfigError("family: rotation needs n = 2");
  }
  if (cfg.constants.empty()) throw ConfigError("constants: request at least one constant");
}

ExperimentConfig parse_experiment(const YAML::Node& node, const std::string& default_name) {
  check_keys(node,
             {"name", "system", "family", "initial", "t_span", "integrator", "constants", "rho",
              "enforce_hypotheses", "output"},
             "experiment");
  ExperimentConfig cfg;
  cfg.name = default_name;
  maybe(node, "name", cfg.name, "experiment");
  if (cfg.name.empty() || cfg.name.find('/') != std::string::npos) {
    throw ConfigError("name: must be a non-empty file name");
  }
  if (!node["system"]) throw ConfigError("system: missing");
  cfg.system = parse_system(node["system"]);
  if (node["family"]) cfg.family = parse_family(node["family"]);

  if (!node["initial"]) throw ConfigError("initial: missing");
  try {
    const auto init = node["initial"];
    for (const auto& jet : init) {
      if (jet.IsScalar()) {
        cfg.initial.push_back({jet.as<double>()});
      } else {
        cfg.initial.push_back(jet.as<std::vector<double>>());
      }
    }
  } catch (const YAML::Exception&) {
    throw ConfigError("initial: expected a list of jets (numbers or lists of numbers)");
  }

  if (!node["t_span"]) throw ConfigError("t_span: missing");
  const auto span = get<std::vector<double>>(node, "t_span", "experiment");
  if (span.size() != 2) throw ConfigError("t_span: expected [t0, t_end]");
  cfg.t0 = span[0];
  cfg.t_end = span[1];

  if (const auto ig = node["integrator"]) {
    check_keys(ig, {"rel_tol", "abs_tol", "tol", "initial_step", "max_steps", "quadrature_tol"},
               "integrator");
    if (ig["tol"]) cfg.integrator.rel_tol = cfg.integrator.abs_tol = get<double>(ig, "tol", "integrator");
    maybe(ig, "rel_tol", cfg.integrator.rel_tol, "integrator");
    maybe(ig, "abs_tol", cfg.integrator.abs_tol, "integrator");
    maybe(ig, "initial_step", cfg.integrator.initial_step, "integrator");
    maybe(ig, "max_steps", cfg.integrator.max_steps, "integrator");
    maybe(ig, "quadrature_tol", cfg.quadrature_tol, "integrator");
  }

  if (!node["constants"] || !node["constants"].IsSequence()) throw ConfigError("constants: expected a list");
  for (const auto& c : node["constants"]) cfg.constants.push_back(parse_constant(c));
  if (node["rho"]) cfg.rho = get<std::vector<double>>(node, "rho", "experiment");
  maybe(node, "enforce_hypotheses", cfg.enforce_hypotheses, "experiment");
  if (const auto out = node["output"]) {
    check_keys(out, {"dir"}, "output");
    if (out["dir"]) cfg.out_dir = get<std::string>(out, "dir", "output");
  }
  validate(cfg);
  return cfg;
}

// --- Running ---------------------------------------------------------------

std::vector<double> default_rho(const SystemConfig& s) {
  const double p = s.w1 * s.w1 * s.w2 * s.w2;
  return {-(s.w1 * s.w1 + s.w2 * s.w2) / p, 1.0 / p};
}

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// One requested constant, ready to evaluate at any node time. `blocked` is set
// when an enforced hypothesis failed; the column is then all nan.
struct Column {
  ConstantRequest request;
  std::function<double(double)> eval;
  bool blocked = false;
  std::string note;
};

struct Prepared {
  LagrangianSpec spec;
  std::optional<PerturbationFamily> family;
};

Prepared prepare(const ExperimentConfig& cfg) {
  try {
    Prepared p{build_system(cfg.system), std::nullopt};
    if (cfg.family) p.family = build_family(*cfg.family, cfg.system.dim);
    return p;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

JetState initial_state(const ExperimentConfig& cfg) { return JetState{cfg.t0, cfg.initial}; }

Potential make_potential(const PotentialConfig& pc) {
  if (pc.name == "quadratic") return quadratic_potential(pc.coefficient);
  if (pc.name == "quartic") return quartic_potential(pc.coefficient);
  return zero_potential();
}

RadialPotential make_radial(const PotentialConfig& pc) {
  if (pc.name == "quadratic") return quadratic_radial(pc.coefficient);
  if (pc.name == "quartic") return quartic_radial(pc.coefficient);
  return zero_radial();
}

ViscousParams viscous_params(const ExperimentConfig& cfg) {
  return ViscousParams{cfg.system.m, cfg.system.k, make_potential(cfg.system.potential)};
}

HypothesisResult hypothesis(std::string name, bool passed, std::string detail = {},
                            std::optional<double> residual = std::nullopt,
                            std::optional<double> tol = std::nullopt) {
  return HypothesisResult{std::move(name), passed, residual, tol, std::move(detail)};
}

// Builds evaluators and runs hypothesis checks against `traj`.
std::vector<Column> build_columns(const ExperimentConfig& cfg, const Prepared& p, const Trajectory& traj,
                                  std::vector<HypothesisResult>& hyps) {
  const auto& spec = p.spec;
  std::vector<Column> cols;
  for (const auto& req : cfg.constants) {
    Column col{req, {}, false, {}};
    auto require = [&](HypothesisResult h) {
      if (!h.passed && cfg.enforce_hypotheses) {
        col.blocked = true;
        col.note = "hypothesis '" + h.name + "' failed";
      }
      hyps.push_back(std::move(h));
    };
    const std::string& name = req.name;
    if (name == "nonlocal") {
      const auto fam = *p.family;
      const auto t = attach_quadrature(traj, spec, fam, cfg.quadrature_tol);
      col.eval = [spec, fam, t](double s) { return nonlocal_constant_higher(spec, fam, t, s).value; };
    } else if (name == "energy") {
      require(hypothesis("energy:autonomous", spec.autonomous(), spec.autonomous() ? "" : "L depends on t"));
      col.eval = [spec, traj](double s) { return energy(spec, traj.sample_jets(s)); };
    } else if (name == "k1") {
      require(hypothesis("k1:autonomous", spec.autonomous(), spec.autonomous() ? "" : "L depends on t"));
      col.eval = [spec, traj](double s) { return k1_timeshift(spec, traj, s, {}, false); };
    } else if (name == "k2") {
      const RhoParams rho{cfg.rho ? *cfg.rho : default_rho(cfg.system)};
      constexpr double tol = 1e-5;
      try {
        const double r = check_rho_condition(spec, rho, traj);
        require(hypothesis("k2:rho_condition", r <= tol, "", r, tol));
      } catch (const SpanError& e) {
        require(hypothesis("k2:rho_condition", false, e.what()));
      }
      const auto vr = ValidatedRho::unchecked(rho);
      col.eval = [spec, vr, traj](double s) { return k2_space(spec, vr, traj, s); };
    } else if (name == "k3") {
      const auto fam = *p.family;
      const double mu = *fam.mu();
      const double tol = 1e-6 * std::max(1.0, std::abs(mu));
      const double r = mu_residual(spec, fam, traj, 50);
      require(hypothesis("k3:mu_constant", r <= tol, "", r, tol));
      col.eval = [spec, fam, traj](double s) { return k3_mu(spec, fam, traj, s, {}, false); };
    } else if (name == "pu_k1" || name == "pu_k2" || name == "pu_k3") {
      const double w1 = cfg.system.w1;
      const double w2 = cfg.system.w2;
      auto f = name == "pu_k1" ? pu_k1 : name == "pu_k2" ? pu_k2 : pu_k3;
      col.eval = [f, w1, w2, traj](double s) { return f(traj.sample_jets(s), w1, w2); };
    } else if (name == "viscous") {
      const auto vp = viscous_params(cfg);
      const auto t = attach_viscous_quadrature(traj, vp, cfg.quadrature_tol);
      col.eval = [vp, t](double s) { return viscous_constant(vp, t, s); };
      if (!traj.forward()) {
        bool nonneg = true;
        for (const auto& s : traj.samples()) nonneg = nonneg && vp.u(s.jets[0]) >= 0.0;
        hyps.push_back(hypothesis("viscous:potential_nonnegative", nonneg));
        if (nonneg || !cfg.enforce_hypotheses) {
          const auto mono = monotonicity_check(vp, traj, 1e-9, false);
          hyps.push_back(hypothesis(
              "viscous:weighted_energy_monotone", mono.monotone,
              mono.first_violation ? "first violation at t = " + fmt17(*mono.first_violation) : ""));
          hyps.push_back(hypothesis(
              "viscous:velocity_estimate", mono.estimate_holds,
              mono.first_estimate_violation ? "first violation at t = " + fmt17(*mono.first_estimate_violation)
                                            : ""));
        }
      }
    } else if (name == "angular_momentum") {
      const double m = cfg.system.m;
      col.eval = [m, traj](double s) {
        const auto st = traj.sample_jets(s);
        return m * det2(st.jets[0], st.jets[1]);
      };
    }
    cols.push_back(std::move(col));
  }
  return cols;
}

// Monotonicity failures count against the run like budget overruns.
bool hard_failure(const HypothesisResult& h) {
  return !h.passed && (h.name == "viscous:weighted_energy_monotone" || h.name == "viscous:velocity_estimate");
}

void write_outputs(ExperimentResult& r, const ExperimentConfig& cfg) {
  const std::filesystem::path dir(*cfg.out_dir);
  std::filesystem::create_directories(dir);
  r.summary_path = dir / (r.name + ".summary.json");
  if (!r.rows.empty()) {
    r.csv_path = dir / (r.name + ".csv");
    std::ofstream csv(r.csv_path);
    write_csv(csv, r);
    if (!csv) throw std::runtime_error("cannot write " + r.csv_path.string());
  }
  std::ofstream js(r.summary_path);
  js << summary_json(r, cfg).dump(2) << '\n';
  if (!js) throw std::runtime_error("cannot write " + r.summary_path.string());
}

ExperimentResult run_impl(const ExperimentConfig& cfg, bool write_files) {
  ExperimentResult r;
  r.name = cfg.name;
  Prepared p = prepare(cfg);
  try {
    r.trajectory = integrate(p.spec, initial_state(cfg), cfg.t_end, cfg.integrator, &r.stats);
  } catch (const IntegrationError& e) {
    r.exit_code = kIntegrationFailure;
    r.status = dynamic_cast<const BlowUpError*>(&e) ? "blow_up" : "step_underflow";
    r.error = e.what();
    r.last_valid_time = e.last_valid_time();
    if (write_files) write_outputs(r, cfg);
    return r;
  }
  const auto& traj = *r.trajectory;
  auto cols = build_columns(cfg, p, traj, r.hypotheses);

  const std::size_t n = traj.dim();
  const std::size_t slots = 2 * p.spec.order();
  r.columns.push_back("t");
  for (std::size_t j = 0; j < slots; ++j) {
    for (std::size_t c = 0; c < n; ++c) {
      r.columns.push_back((j == 0 ? std::string("q") : "q" + std::to_string(j)) + "[" + std::to_string(c) + "]");
    }
  }
  for (const auto& col : cols) r.columns.push_back(col.request.name);

  std::vector<std::vector<std::pair<double, double>>> series(cols.size());
  for (const auto& node : traj.samples()) {
    std::vector<double> row;
    row.reserve(r.columns.size());
    row.push_back(node.t);
    for (std::size_t j = 0; j < slots; ++j) row.insert(row.end(), node.jets[j].begin(), node.jets[j].end());
    for (std::size_t i = 0; i < cols.size(); ++i) {
      double v = kNaN;
      if (!cols[i].blocked) {
        try {
          v = cols[i].eval(node.t);
        } catch (const SpanError&) {
          // stencil does not fit near the ends of the span
        }
      }
      if (!std::isnan(v)) series[i].emplace_back(node.t, v);
      row.push_back(v);
    }
    r.rows.push_back(std::move(row));
  }

  bool over = false;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    ConstantReport rep{cols[i].request.name, cols[i].request.budget, std::nullopt, false, cols[i].note};
    if (series[i].size() >= 2) {
      rep.drift = drift_report(series[i]);
      rep.within_budget = !cols[i].blocked && rep.drift->max_rel_drift <= rep.budget;
    } else if (rep.note.empty()) {
      rep.note = "fewer than two evaluable samples";
    }
    over = over || !rep.within_budget;
    r.constants.push_back(std::move(rep));
  }
  for (const auto& h : r.hypotheses) over = over || hard_failure(h);
  if (over) {
    r.exit_code = kDriftExceeded;
    r.status = "drift_exceeded";
  }
  if (write_files) write_outputs(r, cfg);
  return r;
}

nlohmann::json drift_json(const DriftReport& d) {
  return {{"reference_value", d.reference_value},
          {"max_abs_drift", d.max_abs_drift},
          {"max_rel_drift", d.max_rel_drift},
          {"sample_count", d.sample_count}};
}

}  // namespace

std::vector<ExperimentConfig> parse_config(const std::string& text, const std::string& default_name) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML: ") + e.what());
  }
  if (!root || !root.IsMap()) throw ConfigError("config: expected a mapping at the top level");
  std::vector<ExperimentConfig> out;
  if (root["experiments"]) {
    check_keys(root, {"experiments", "output"}, "config");
    std::optional<std::string> dir;
    if (const auto o = root["output"]) {
      check_keys(o, {"dir"}, "output");
      if (o["dir"]) dir = get<std::string>(o, "dir", "output");
    }
    const auto list = root["experiments"];
    if (!list.IsSequence() || list.size() == 0) throw ConfigError("experiments: expected a non-empty list");
    std::set<std::string> names;
    for (std::size_t i = 0; i < list.size(); ++i) {
      auto cfg = parse_experiment(list[i], default_name + "_" + std::to_string(i));
      if (!cfg.out_dir) cfg.out_dir = dir;
      if (!names.insert(cfg.name).second) throw ConfigError("experiments: duplicate name '" + cfg.name + "'");
      out.push_back(std::move(cfg));
    }
  } else {
    out.push_back(parse_experiment(root, default_name));
  }
  return out;
}

std::vector<ExperimentConfig> load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.stem().string());
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& ov) {
  if (ov.t_end) cfg.t_end = *ov.t_end;
  if (ov.tol) cfg.integrator.rel_tol = cfg.integrator.abs_tol = *ov.tol;
  if (ov.out_dir) {
    cfg.out_dir = ov.out_dir;
  } else if (!cfg.out_dir) {
    const char* env = std::getenv("NLCM_OUT_DIR");
    cfg.out_dir = env && *env ? env : "nlcm_out";
  }
  validate(cfg);
}

LagrangianSpec build_system(const SystemConfig& s) {
  try {
    if (s.name == "harmonic") return make_harmonic();
    if (s.name == "free_particle") return make_free_particle(s.dim);
    if (s.name == "pais_uhlenbeck") return make_pais_uhlenbeck(s.w1, s.w2, s.dim);
    if (s.name == "central_force") return make_central_force(s.m, make_radial(s.potential));
    if (s.name == "viscous") return make_viscous(s.m, s.k, make_potential(s.potential), s.dim);
  } catch (const Error& e) {
    throw ConfigError("system: " + std::string(e.what()));
  }
  throw ConfigError("system: unknown name '" + s.name + "'");
}

PerturbationFamily build_family(const FamilyConfig& f, std::size_t dim) {
  std::optional<PerturbationFamily> fam;
  if (f.name == "rotation") fam = rotation_family();
  if (f.name == "timeshift") fam = timeshift_family();
  if (f.name == "exp_timeshift") fam = exp_timeshift_family(f.a);
  if (f.name == "null") fam = null_family(dim);
  if (!fam) throw ConfigError("family: unknown name '" + f.name + "'");
  return f.mu ? fam->with_mu(*f.mu) : *fam;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files) {
  try {
    ExperimentConfig c = cfg;
    if (!c.out_dir) apply_overrides(c, {});
    validate(c);
    return run_impl(c, write_files);
  } catch (const ConfigError& e) {
    ExperimentResult r;
    r.name = cfg.name;
    r.exit_code = kConfigError;
    r.status = "config_error";
    r.error = e.what();
    return r;
  } catch (const std::exception& e) {
    // Anything unexpected during evaluation (numeric failures in user-level
    // parameters, unwritable output) is a configuration problem for the caller.
    ExperimentResult r;
    r.name = cfg.name;
    r.exit_code = kConfigError;
    r.status = "error";
    r.error = e.what();
    return r;
  }
}

std::vector<ExperimentResult> run_batch(const std::vector<ExperimentConfig>& cfgs, bool write_files,
                                        std::size_t workers) {
  std::vector<ExperimentResult> out(cfgs.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cfgs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cfgs.size(); i = next++) out[i] = run_experiment(cfgs[i], write_files);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return out;
}

ExperimentResult check_experiment(const ExperimentConfig& cfg) {
  ExperimentResult r;
  r.name = cfg.name;
  try {
    validate(cfg);
    Prepared p = prepare(cfg);
    const double dir = cfg.t_end > cfg.t0 ? 1.0 : -1.0;
    const double window = std::min(1.0, std::abs(cfg.t_end - cfg.t0));
    try {
      r.trajectory = integrate(p.spec, initial_state(cfg), cfg.t0 + dir * window, cfg.integrator, &r.stats);
    } catch (const IntegrationError& e) {
      r.exit_code = kIntegrationFailure;
      r.status = "probe_failed";
      r.error = e.what();
      r.last_valid_time = e.last_valid_time();
      return r;
    }
    ExperimentConfig probe = cfg;
    probe.enforce_hypotheses = true;
    build_columns(probe, p, *r.trajectory, r.hypotheses);
    for (const auto& h : r.hypotheses) {
      if (!h.passed) {
        r.exit_code = kDriftExceeded;
        r.status = "hypothesis_failed";
      }
    }
  } catch (const ConfigError& e) {
    r.exit_code = kConfigError;
    r.status = "config_error";
    r.error = e.what();
  } catch (const std::exception& e) {
    r.exit_code = kConfigError;
    r.status = "error";
    r.error = e.what();
  }
  return r;
}

int combine_exit_codes(const std::vector<int>& codes) {
  for (int c : {kConfigError, kIntegrationFailure, kDriftExceeded}) {
    if (std::find(codes.begin(), codes.end(), c) != codes.end()) return c;
  }
  return kOk;
}

nlohmann::json summary_json(const ExperimentResult& r, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["name"] = r.name;
  j["status"] = r.status;
  j["exit_code"] = r.exit_code;
  if (!r.error.empty()) j["error"] = r.error;
  if (r.last_valid_time) j["last_valid_time"] = *r.last_valid_time;
  j["system"] = {{"name", cfg.system.name}, {"dim", cfg.system.dim}};
  if (cfg.family) j["family"] = cfg.family->name;
  j["t_span"] = {cfg.t0, cfg.t_end};
  j["integrator"] = {{"rel_tol", cfg.integrator.rel_tol},
                     {"abs_tol", cfg.integrator.abs_tol},
                     {"accepted_steps", r.stats.accepted},
                     {"rejected_steps", r.stats.rejected},
                     {"rhs_evaluations", r.stats.rhs_evaluations}};
  nlohmann::json consts = nlohmann::json::object();
  for (const auto& c : r.constants) {
    nlohmann::json e = {{"budget", c.budget}, {"within_budget", c.within_budget}};
    if (c.drift) e["drift"] = drift_json(*c.drift);
    if (!c.note.empty()) e["note"] = c.note;
    consts[c.name] = e;
  }
  j["constants"] = consts;
  nlohmann::json hyps = nlohmann::json::array();
  for (const auto& h : r.hypotheses) {
    nlohmann::json e = {{"name", h.name}, {"passed", h.passed}};
    if (h.residual) e["residual"] = *h.residual;
    if (h.tolerance) e["tolerance"] = *h.tolerance;
    if (!h.detail.empty()) e["detail"] = h.detail;
    hyps.push_back(e);
  }
  j["hypotheses"] = hyps;
  j["enforce_hypotheses"] = cfg.enforce_hypotheses;
  if (!r.csv_path.empty()) j["timeseries"] = r.csv_path.string();
  return j;
}

void write_csv(std::ostream& out, const ExperimentResult& r) {
  for (std::size_t i = 0; i < r.columns.size(); ++i) out << (i ? "," : "") << r.columns[i];
  out << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt17(row[i]);
    out << '\n';
  }
}

std::string list_catalog() {
  std::ostringstream out;
  auto section = [&](const char* title, const std::vector<Entry>& list) {
    out << title << ":\n";
    for (const auto& e : list) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "  %-18s %s\n", e.name, e.summary);
      out << buf;
    }
  };
  section("systems", kSystems);
  section("families", kFamilies);
  section("constants", kConstants);
  section("potentials", kPotentials);
  return out.str();
}

}  // namespace nlcm::experiment
