// Command-line front end: run, simulate, gradcheck, version.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "wavedisc/gradcheck.hpp"
#include "wavedisc/pipeline.hpp"

namespace {

int fail(const std::string& kind, const std::string& message, int code) {
  nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
  return code;
}

int cmd_run(const std::string& config, const std::optional<std::string>& out, const std::optional<std::uint64_t>& seed,
            const std::optional<double>& noise) {
  wavedisc::ExperimentConfig cfg = wavedisc::load_config(config);
  if (out) cfg.output_dir = *out;
  if (seed) cfg.seed = *seed;
  if (noise) cfg.noise_level = *noise;
  cfg.validate();
  const wavedisc::Report r = wavedisc::run_case(cfg);
  wavedisc::emit_report(r, cfg.output_dir);

  nlohmann::json summary = {{"case", r.name},
                            {"output_dir", cfg.output_dir},
                            {"loops_completed", r.loops.size()},
                            {"equation", r.final_equation.to_string()},
                            {"eps_u", r.eps_u ? nlohmann::json(*r.eps_u) : nlohmann::json(nullptr)},
                            {"eps_c", r.eps_c ? nlohmann::json(*r.eps_c) : nlohmann::json(nullptr)},
                            {"eta_hat", r.eta_hat},
                            {"wall_clock_seconds", r.wall_clock_seconds}};
  std::cout << summary.dump(2) << "\n";
  if (r.error)
    return fail("stage_failure", "loop " + std::to_string(r.error->first) + ": " + r.error->second, 3);
  return 0;
}

int cmd_simulate(const std::string& config, const std::string& out) {
  const wavedisc::ExperimentConfig cfg = wavedisc::load_config(config);
  const wavedisc::SimConfig sim = cfg.sim();
  const wavedisc::Wavefield w = wavedisc::simulate(sim);
  std::filesystem::create_directories(out);
  wavedisc::write_atomic(std::filesystem::path(out) / "wavefield_true.csv", wavedisc::wavefield_csv(w));
  nlohmann::json info = {{"case", cfg.name},
                         {"nt", cfg.grid.nt},
                         {"nx", cfg.grid.nx},
                         {"dx", cfg.grid.dx()},
                         {"dt", cfg.grid.dt()},
                         {"cfl_margin", wavedisc::cfl_margin(cfg.grid, sim.medium)}};
  wavedisc::write_atomic(std::filesystem::path(out) / "simulation.json", info.dump(2) + "\n");
  std::cout << info.dump(2) << "\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int trials, double tolerance) {
  nlohmann::json rows = nlohmann::json::array();
  double worst = 0.0;
  for (int k = 0; k < trials; ++k) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
    const wavedisc::GradcheckInstance g = wavedisc::random_instance(s);
    const wavedisc::GradcheckResult r = wavedisc::check_gradient(g);
    worst = std::max(worst, r.max_rel_error);
    rows.push_back({{"seed", s},
                    {"nx", r.nx},
                    {"nt", r.nt},
                    {"parameters", r.parameters},
                    {"equation", g.equation.to_string()},
                    {"bc", wavedisc::boundary_name(g.bc.left) + "/" + wavedisc::boundary_name(g.bc.right)},
                    {"max_rel_error", r.max_rel_error},
                    {"worst_entry", r.worst}});
  }
  const bool ok = worst < tolerance;
  std::cout << nlohmann::json{{"trials", rows}, {"max_rel_error", worst}, {"tolerance", tolerance}, {"pass", ok}}.dump(2)
            << "\n";
  if (!ok) return fail("gradcheck", "max relative error " + wavedisc::format_double(worst) + " exceeds tolerance", 4);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wave-equation discovery and coefficient inversion"};
  app.require_subcommand(1);

  std::string config, out;
  std::optional<std::string> run_out;
  std::optional<std::uint64_t> run_seed;
  std::optional<double> run_noise;
  auto* run = app.add_subcommand("run", "Discover and invert the equation for one experiment");
  run->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory (overrides config)");
  run->add_option("--seed", run_seed, "Noise seed (overrides config)");
  run->add_option("--noise", run_noise, "Noise level (overrides config)");

  auto* sim = app.add_subcommand("simulate", "Forward simulation only");
  sim->add_option("--config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "Output directory")->required();

  std::uint64_t gc_seed = 1;
  int gc_trials = 20;
  double gc_tol = 1e-5;
  auto* gc = app.add_subcommand("gradcheck", "Adjoint gradients against central finite differences");
  gc->add_option("--seed", gc_seed, "First seed");
  gc->add_option("--trials", gc_trials, "Number of random instances")->check(CLI::PositiveNumber);
  gc->add_option("--tolerance", gc_tol, "Maximum accepted relative error");

  auto* version = app.add_subcommand("version", "Print version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*run) return cmd_run(config, run_out, run_seed, run_noise);
    if (*sim) return cmd_simulate(config, out);
    if (*gc) return cmd_gradcheck(gc_seed, gc_trials, gc_tol);
    if (*version) {
      std::cout << "wavedisc " << wavedisc::kVersion << " (config schema " << wavedisc::kConfigSchemaVersion << ")\n";
      return 0;
    }
  } catch (const wavedisc::ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
