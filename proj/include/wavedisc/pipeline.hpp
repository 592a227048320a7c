#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavedisc/embedding.hpp"
#include "wavedisc/library.hpp"
#include "wavedisc/regression.hpp"
#include "wavedisc/sampling.hpp"
#include "wavedisc/simulator.hpp"

namespace wavedisc {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

/// Declarative definition of one discovery/inversion experiment.
struct ExperimentConfig {
  std::string name = "experiment";
  Grid1D grid;
  double c_left = 1.0;   // wave speed at x = 0
  double c_right = 1.0;  // wave speed at x = L (linear in between)
  double eta = 0.0;
  SourceSpec source;
  BoundarySpec boundaries;

  std::size_t stride_x = 1;
  std::size_t stride_t = 1;
  double noise_level = 0.0;
  std::uint64_t seed = 0;

  int loops = 1;
  OptimizerConfig optimizer;

  std::vector<double> gamma_grid = default_gamma_grid();
  std::vector<double> tol_grid = default_tol_grid();
  double complexity_weight = 0.05;
  double validation_floor = 0.0;  // validation errors below this count as equal in the knee rule
  double initial_viscous = -0.1;  // u_t coefficient after the first discovery pass

  // Skips the first discovery pass when present.
  std::optional<std::vector<std::pair<std::string, double>>> initial_equation;

  std::string output_dir = "out";

  SimConfig sim() const {
    SimConfig s;
    s.grid = grid;
    s.medium = MediumSpec::linear_velocity(grid, c_left, c_right, eta);
    s.source = source;
    s.boundaries = boundaries;
    return s;
  }

  bool homogeneous() const { return c_left == c_right; }

  void validate() const {
    if (loops < 1) throw ConfigError("config: loops must be >= 1");
    if (stride_x < 1 || stride_t < 1) throw ConfigError("config: strides must be >= 1");
    if (!(c_left > 0.0) || !(c_right > 0.0)) throw ConfigError("config: wave speeds must be positive");
    if (!(noise_level >= 0.0)) throw ConfigError("config: noise_level must be >= 0");
    if (!(optimizer.adam.lr > 0.0)) throw ConfigError("config: adam_lr must be positive");
    if (optimizer.field_smoothing < 0) throw ConfigError("config: field_smoothing must be >= 0");
    if (optimizer.adam.epochs < 0 || optimizer.lbfgs.max_iters < 0)
      throw ConfigError("config: iteration budgets must be >= 0");
    if (!(complexity_weight >= 0.0) || !(validation_floor >= 0.0))
      throw ConfigError("config: complexity_weight and validation_floor must be >= 0");
    if (gamma_grid.empty() || tol_grid.empty()) throw ConfigError("config: regression grids must be non-empty");
    if (initial_equation)
      for (const auto& [name, value] : *initial_equation)
        if (!term_by_name(name) || !std::isfinite(value))
          throw ConfigError("config: bad initial_equation term '" + name + "'");
    sim().validate();
  }
};

namespace detail {

inline BoundaryCondition parse_bc(const std::string& kind, int order, double velocity) {
  if (kind == "dirichlet") return Dirichlet{};
  if (kind == "neumann") return Neumann{};
  if (kind == "mtf") return Mtf{order, velocity};
  throw ConfigError("config: unknown boundary kind '" + kind + "'");
}

inline std::string mode_name(CoefficientMode m) { return m == CoefficientMode::scalar ? "scalar" : "field"; }

inline CoefficientMode parse_mode(const std::string& s) {
  if (s == "scalar") return CoefficientMode::scalar;
  if (s == "field") return CoefficientMode::field;
  throw ConfigError("config: coefficient mode must be 'scalar' or 'field', got '" + s + "'");
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    const int version = j.value("schema_version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion)
      throw ConfigError("config: unsupported schema_version " + std::to_string(version));
    static const std::vector<std::string> known = {
        "schema_version", "name", "length", "nx", "duration", "nt", "c", "c_left", "c_right", "eta", "f0",
        "bc_left", "bc_right", "mtf_order", "mtf_velocity", "stride_x", "stride_t", "noise_level", "seed",
        "loops", "adam_epochs", "adam_lr", "lbfgs_max_iters", "lbfgs_memory", "coefficient_mode", "eta_mode",
        "field_smoothing", "gamma_grid", "tol_grid", "complexity_weight", "validation_floor", "filter_threshold", "initial_viscous",
        "initial_equation", "output_dir"};
    for (const auto& [key, _] : j.items())
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw ConfigError("config: unknown field '" + key + "'");

    c.name = j.value("name", c.name);
    c.grid.length = j.at("length").get<double>();
    c.grid.nx = j.at("nx").get<std::size_t>();
    c.grid.duration = j.at("duration").get<double>();
    c.grid.nt = j.at("nt").get<std::size_t>();
    if (j.contains("c")) c.c_left = c.c_right = j.at("c").get<double>();
    c.c_left = j.value("c_left", c.c_left);
    c.c_right = j.value("c_right", c.c_right);
    c.eta = j.value("eta", 0.0);
    c.source.f0 = j.at("f0").get<double>();
    const int order = j.value("mtf_order", 2);
    const double vel = j.value("mtf_velocity", 0.0);
    c.boundaries.left = detail::parse_bc(j.value("bc_left", std::string("dirichlet")), order, vel);
    c.boundaries.right = detail::parse_bc(j.value("bc_right", std::string("dirichlet")), order, vel);
    c.stride_x = j.value("stride_x", c.stride_x);
    c.stride_t = j.value("stride_t", c.stride_t);
    c.noise_level = j.value("noise_level", c.noise_level);
    c.seed = j.value("seed", c.seed);
    c.loops = j.value("loops", c.loops);
    c.optimizer.adam.epochs = j.value("adam_epochs", 200);
    c.optimizer.adam.lr = j.value("adam_lr", c.optimizer.adam.lr);
    c.optimizer.lbfgs.max_iters = j.value("lbfgs_max_iters", 100);
    c.optimizer.lbfgs.memory = j.value("lbfgs_memory", c.optimizer.lbfgs.memory);
    c.optimizer.mode = detail::parse_mode(j.value("coefficient_mode", std::string("scalar")));
    c.optimizer.eta_mode = detail::parse_mode(j.value("eta_mode", std::string("scalar")));
    c.optimizer.filter_threshold = j.value("filter_threshold", c.optimizer.filter_threshold);
    c.optimizer.field_smoothing = j.value("field_smoothing", c.optimizer.field_smoothing);
    c.gamma_grid = j.value("gamma_grid", c.gamma_grid);
    c.tol_grid = j.value("tol_grid", c.tol_grid);
    c.complexity_weight = j.value("complexity_weight", c.complexity_weight);
    c.validation_floor = j.value("validation_floor", c.validation_floor);
    c.initial_viscous = j.value("initial_viscous", c.initial_viscous);
    if (j.contains("initial_equation") && !j.at("initial_equation").is_null()) {
      std::vector<std::pair<std::string, double>> eq;
      for (const auto& [k, v] : j.at("initial_equation").items()) eq.emplace_back(k, v.get<double>());
      c.initial_equation = eq;
    }
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["name"] = c.name;
  j["length"] = c.grid.length;
  j["nx"] = c.grid.nx;
  j["duration"] = c.grid.duration;
  j["nt"] = c.grid.nt;
  j["c_left"] = c.c_left;
  j["c_right"] = c.c_right;
  j["eta"] = c.eta;
  j["f0"] = c.source.f0;
  j["bc_left"] = boundary_name(c.boundaries.left);
  j["bc_right"] = boundary_name(c.boundaries.right);
  for (const auto* bc : {&c.boundaries.left, &c.boundaries.right})
    if (const auto* m = std::get_if<Mtf>(bc)) {
      j["mtf_order"] = m->order;
      j["mtf_velocity"] = m->velocity;
    }
  j["stride_x"] = c.stride_x;
  j["stride_t"] = c.stride_t;
  j["noise_level"] = c.noise_level;
  j["seed"] = c.seed;
  j["loops"] = c.loops;
  j["adam_epochs"] = c.optimizer.adam.epochs;
  j["adam_lr"] = c.optimizer.adam.lr;
  j["lbfgs_max_iters"] = c.optimizer.lbfgs.max_iters;
  j["lbfgs_memory"] = c.optimizer.lbfgs.memory;
  j["coefficient_mode"] = detail::mode_name(c.optimizer.mode);
  j["eta_mode"] = detail::mode_name(c.optimizer.eta_mode);
  j["filter_threshold"] = c.optimizer.filter_threshold;
  j["field_smoothing"] = c.optimizer.field_smoothing;
  j["gamma_grid"] = c.gamma_grid;
  j["tol_grid"] = c.tol_grid;
  j["complexity_weight"] = c.complexity_weight;
  j["validation_floor"] = c.validation_floor;
  j["initial_viscous"] = c.initial_viscous;
  if (c.initial_equation) {
    nlohmann::json eq = nlohmann::json::object();
    for (const auto& [k, v] : *c.initial_equation) eq[k] = v;
    j["initial_equation"] = eq;
  }
  j["output_dir"] = c.output_dir;
  return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

struct DiscoveryRecord {
  std::string source;  // "measurements" | "prediction" | "initial_equation"
  double gamma = 0.0;
  double tol = 0.0;
  double train_error = 0.0;
  std::vector<std::pair<std::string, double>> coefficients;
};

struct LoopRecord {
  int loop = 0;
  DiscoveryRecord discovery;
  DiscoveredEquation equation;  // after optimisation and filtering
  std::vector<TraceEntry> trace;
  double final_loss = 0.0;
  double eps_u = 0.0;
  std::string lbfgs_stop;
};

struct Report {
  std::string name;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  std::size_t measurement_nt = 0;
  std::size_t measurement_nx = 0;
  std::vector<LoopRecord> loops;
  std::optional<std::pair<int, std::string>> error;  // (loop, message)
  std::vector<std::string> warnings;

  DiscoveredEquation final_equation;
  std::optional<double> eps_u;
  std::optional<double> eps_c;
  double eta_hat = 0.0;

  Grid1D grid;
  Wavefield prediction;
  Wavefield truth;
  double wall_clock_seconds = 0.0;  // not written by emit_report (byte-stable outputs)
};

/// sqrt of the u_xx coefficient field, clamped at zero.
inline Field recovered_velocity(const DiscoveredEquation& eq, std::size_t nx) {
  Field c(nx, 0.0);
  if (const auto* t = eq.find(terms::u_xx))
    for (std::size_t i = 0; i < nx; ++i) c[i] = std::sqrt(std::max(0.0, t->coeff[i]));
  return c;
}

inline Field true_velocity(const ExperimentConfig& cfg) {
  const MediumSpec m = cfg.sim().medium;
  Field c(cfg.grid.nx);
  for (std::size_t i = 0; i < cfg.grid.nx; ++i) c[i] = std::sqrt(m.csq[i]);
  return c;
}

/// Sparse regression pass: builds Theta on `data`, picks (gamma, tol) on the
/// Pareto knee and returns the scalar-coefficient equation. The viscous column
/// is exempt from thresholding only on the first pass.
inline std::pair<DiscoveredEquation, DiscoveryRecord> discover(const Wavefield& data, double dx_eff, double dt_eff,
                                                               std::size_t nx, const ExperimentConfig& cfg,
                                                               bool first_pass) {
  const RegressionProblem problem = build_system(data, dx_eff, dt_eff);
  std::vector<std::size_t> protected_cols;
  if (first_pass) protected_cols.push_back(*term_index(terms::u_t));
  const ParetoChoice choice =
      pareto_gamma(problem, cfg.gamma_grid, cfg.tol_grid, protected_cols, cfg.complexity_weight, cfg.validation_floor);
  const SparseSolution sol = stridge(problem, choice.gamma, choice.tol, protected_cols);
  DiscoveredEquation eq;
  DiscoveryRecord rec;
  rec.gamma = choice.gamma;
  rec.tol = choice.tol;
  rec.train_error = sol.train_error;
  for (std::size_t idx : sol.support) {
    const TermDescriptor& t = problem.terms[idx];
    double c = sol.xi(static_cast<Eigen::Index>(idx));
    if (first_pass && t.is_viscous()) c = cfg.initial_viscous;
    eq.terms.push_back({t, Field(nx, c)});
    rec.coefficients.emplace_back(t.name(), c);
  }
  return {eq, rec};
}

inline DiscoveredEquation equation_from_names(const std::vector<std::pair<std::string, double>>& coeffs,
                                              std::size_t nx) {
  DiscoveredEquation eq;
  for (const auto& [name, c] : coeffs) {
    const auto t = term_by_name(name);
    if (!t) throw ConfigError("config: unknown term '" + name + "' in initial_equation");
    eq.terms.push_back({*t, Field(nx, c)});
  }
  return eq;
}

/// Alternating discovery / embedding loop.
inline Report run_case(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  Report rep;
  rep.name = cfg.name;
  rep.noise_level = cfg.noise_level;
  rep.seed = cfg.seed;
  rep.grid = cfg.grid;

  const SimConfig sim = cfg.sim();
  const std::size_t nx = cfg.grid.nx;
  rep.truth = simulate(sim);
  const MeasurementSet meas =
      add_noise(downsample(rep.truth, cfg.stride_x, cfg.stride_t), cfg.noise_level, cfg.seed);
  rep.measurement_nt = meas.time_indices.size();
  rep.measurement_nx = meas.space_indices.size();
  const Field u0 = ricker_profile(cfg.grid, cfg.source);
  const BoundarySpec bc = resolve_boundaries(sim);

  const bool field_mode = cfg.optimizer.mode == CoefficientMode::field;
  const int loops = field_mode ? 1 : cfg.loops;
  std::optional<Wavefield> prediction;

  for (int k = 1; k <= loops; ++k) {
    LoopRecord rec;
    rec.loop = k;
    try {
      DiscoveredEquation eq;
      if (k == 1 && cfg.initial_equation) {
        eq = equation_from_names(*cfg.initial_equation, nx);
        rec.discovery.source = "initial_equation";
        rec.discovery.coefficients = *cfg.initial_equation;
      } else if (prediction) {
        std::tie(eq, rec.discovery) = discover(*prediction, cfg.grid.dx(), cfg.grid.dt(), nx, cfg, false);
        rec.discovery.source = "prediction";
        // terms that survive rediscovery continue from the previous optimum
        for (auto& t : eq.terms)
          if (const auto* prev = rep.loops.back().equation.find(t.term)) t.coeff = prev->coeff;
      } else {
        std::tie(eq, rec.discovery) =
            discover(meas.values, cfg.grid.dx() * static_cast<double>(cfg.stride_x),
                     cfg.grid.dt() * static_cast<double>(cfg.stride_t), nx, cfg, true);
        rec.discovery.source = "measurements";
      }
      if (implied_cfl_margin(eq, cfg.grid) > 1.0)
        rep.warnings.push_back("loop " + std::to_string(k) + ": initial equation exceeds the CFL margin");

      OptimizeResult opt = optimize(eq, u0, bc, cfg.grid, meas, cfg.optimizer);
      rec.trace = std::move(opt.trace);
      if (opt.failure) {
        rep.error = std::make_pair(k, *opt.failure);
        break;
      }
      rec.equation = opt.equation;
      rec.final_loss = opt.final_loss;
      rec.lbfgs_stop = opt.lbfgs_stop;
      Wavefield pred = rollout(opt.equation, u0, bc, cfg.grid);
      rec.eps_u = rel_l2(pred, rep.truth);
      prediction = std::move(pred);
      rep.loops.push_back(std::move(rec));
    } catch (const std::exception& e) {
      rep.error = std::make_pair(k, std::string(e.what()));
      break;
    }
  }

  if (!rep.loops.empty()) {
    rep.final_equation = rep.loops.back().equation;
    rep.prediction = *prediction;
    rep.eps_u = rep.loops.back().eps_u;
    if (rep.final_equation.find(terms::u_xx)) rep.eps_c = rel_l2(recovered_velocity(rep.final_equation, nx), true_velocity(cfg));
    rep.eta_hat = rep.final_equation.eta_field(nx).mean();
  }
  rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Report output

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json coefficient_summary(const DiscoveredEquation& eq) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& t : eq.terms) {
    const auto& v = t.coeff.values();
    j[t.term.name()] = {{"mean", t.coeff.mean()},
                        {"min", *std::min_element(v.begin(), v.end())},
                        {"max", *std::max_element(v.begin(), v.end())}};
  }
  return j;
}

inline nlohmann::json report_metrics(const Report& r) {
  nlohmann::json j;
  j["case"] = r.name;
  j["status"] = r.error ? "failed" : "ok";
  j["error"] = r.error ? nlohmann::json{{"loop", r.error->first}, {"message", r.error->second}} : nlohmann::json(nullptr);
  j["warnings"] = r.warnings;
  j["noise_level"] = r.noise_level;
  j["seed"] = r.seed;
  j["measurement_shape"] = {r.measurement_nt, r.measurement_nx};
  nlohmann::json loops = nlohmann::json::array();
  for (const auto& l : r.loops) {
    nlohmann::json d;
    d["source"] = l.discovery.source;
    d["gamma"] = l.discovery.gamma;
    d["tol"] = l.discovery.tol;
    d["train_error"] = l.discovery.train_error;
    nlohmann::json c = nlohmann::json::object();
    for (const auto& [name, v] : l.discovery.coefficients) c[name] = v;
    d["equation"] = c;
    int adam = 0, lbfgs = 0;
    for (const auto& t : l.trace) (t.phase == "adam" ? adam : lbfgs)++;
    loops.push_back({{"loop", l.loop},
                     {"discovery", d},
                     {"equation", coefficient_summary(l.equation)},
                     {"final_loss", l.final_loss},
                     {"eps_u", l.eps_u},
                     {"adam_epochs", adam},
                     {"lbfgs_evaluations", lbfgs},
                     {"lbfgs_stop", l.lbfgs_stop}});
  }
  j["loops"] = loops;
  j["final_equation"] = coefficient_summary(r.final_equation);
  j["eps_u"] = r.eps_u ? nlohmann::json(*r.eps_u) : nlohmann::json(nullptr);
  j["eps_c"] = r.eps_c ? nlohmann::json(*r.eps_c) : nlohmann::json(nullptr);
  j["eta_hat"] = r.eta_hat;
  return j;
}

/// Writes `content` to `path` through a temporary file and a rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

inline std::string wavefield_csv(const Wavefield& w) {
  std::string s;
  for (std::size_t t = 0; t < w.nt(); ++t) {
    for (std::size_t x = 0; x < w.nx(); ++x) {
      if (x) s += ',';
      s += format_double(w(t, x));
    }
    s += '\n';
  }
  return s;
}

inline std::string coefficients_csv(const DiscoveredEquation& eq, const Grid1D& grid) {
  std::string s = "x";
  for (const auto& t : eq.terms) s += "," + t.term.name();
  s += '\n';
  for (std::size_t i = 0; i < grid.nx; ++i) {
    s += format_double(grid.x(i));
    for (const auto& t : eq.terms) s += "," + format_double(t.coeff[i]);
    s += '\n';
  }
  return s;
}

inline void emit_report(const Report& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  write_atomic(dir / "metrics.json", report_metrics(r).dump(2) + "\n");
  if (r.loops.empty()) return;
  for (const auto& l : r.loops)
    write_atomic(dir / ("coefficients_loop" + std::to_string(l.loop) + ".csv"), coefficients_csv(l.equation, r.grid));
  write_atomic(dir / "wavefield_pred.csv", wavefield_csv(r.prediction));
  write_atomic(dir / "wavefield_true.csv", wavefield_csv(r.truth));
  std::string trace = "loop,phase,iteration,loss\n";
  for (const auto& l : r.loops)
    for (const auto& t : l.trace)
      trace += std::to_string(l.loop) + "," + t.phase + "," + std::to_string(t.iteration) + "," + format_double(t.loss) + "\n";
  write_atomic(dir / "loss_trace.csv", trace);
}

}  // namespace wavedisc
