/// Command-line front end: run, sweep, check and rate.
#include <fmt/format.h>

#include <CLI11.hpp>
#include <iostream>

#include "sigmalab/experiment.hpp"

using namespace sigmalab;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
  auto* opt = cmd->add_option("--config", c.config, "experiment configuration file");
  if (needs_config) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory (overrides output.dir)");
  cmd->add_option("--set", c.overrides, "extra key=value assignments applied after the file");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_given = true; }, "random seed (overrides run.seed)");
  cmd->add_option("--jobs", c.jobs, "concurrent sweep members")->check(CLI::PositiveNumber);
  cmd->add_flag("--verbose", c.verbose, "progress on stderr");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = ExperimentConfig::load(c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!c.out.empty()) cfg.out = c.out;
  if (c.seed_given) cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

void print_fit(const RateFit& f) {
  fmt::print("slope {:.4f} +- {:.4f}  intercept {:.4f}  residual {:.3e}{}\n", f.slope, f.slope_stderr, f.intercept,
             f.residual, f.degenerate ? "  (degenerate samples excluded)" : "");
}

int cmd_run(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const RunResult r = run_experiment(cfg, RunOptions{true, c.verbose ? &std::cerr : nullptr});
  fmt::print("status {}  steps {}  t {:.6g}  mass drift {:.3e}\n", to_string(r.status), r.steps, r.t, r.mass_drift);
  if (!r.series.empty()) {
    const SeriesRow& last = r.series.back();
    fmt::print("err_V {:.4e}  err_eta {:.4e}  err_w {:.4e}  shear {:.4e}  E_s {:.4e}\n", last.err_V, last.err_eta,
               last.err_w, last.shear, last.E_s);
  }
  if (r.halted()) fmt::print(stderr, "halted: {}\n", r.message);
  fmt::print("artifacts in {}\n", cfg.out.string());
  return r.halted() ? SolverHalt : Success;
}

int cmd_sweep(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const SweepSummary s = sweep(cfg, SweepOptions{c.jobs, true, c.verbose ? &std::cerr : nullptr});
  for (const auto& m : s.members)
    fmt::print("{:<12.4e} {:<18} error {:.4e}\n", m.value, to_string(m.result.status), m.error);
  if (s.fitted) print_fit(s.fit);
  if (!s.note.empty()) fmt::print("note: {}\n", s.note);
  if (!s.gate_pass) {
    fmt::print(stderr, "fit below sweep.min_slope = {}\n", cfg.min_slope);
    return FitFailure;
  }
  return s.any_halted() ? SolverHalt : Success;
}

int cmd_check(const Common& c) {
  const ExperimentConfig cfg = load(c);
  bool ok = true;
  for (const auto& k : check_invariants(cfg)) {
    fmt::print("{} {:<22} {:.3e} (limit {:.1e})\n", k.pass ? "PASS" : "FAIL", k.name, k.value, k.limit);
    ok = ok && k.pass;
  }
  return ok ? Success : FitFailure;
}

int cmd_rate(const std::string& dir, double min_slope) {
  const RateFit f = refit(std::filesystem::path(dir) / "summary.txt");
  print_fit(f);
  if (min_slope > 0.0 && (f.degenerate || f.slope < min_slope)) {
    fmt::print(stderr, "slope below {}\n", min_slope);
    return FitFailure;
  }
  return Success;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-surface Euler laboratory in sigma coordinates"};
  app.require_subcommand(1);
  Common run_opts, sweep_opts, check_opts;
  auto* run = app.add_subcommand("run", "integrate one configuration");
  add_common(run, run_opts, true);
  auto* sw = app.add_subcommand("sweep", "run a parameter sweep and fit the rate");
  add_common(sw, sweep_opts, true);
  auto* check = app.add_subcommand("check", "fast invariant suite");
  add_common(check, check_opts, true);
  auto* rate = app.add_subcommand("rate", "re-fit the rate of an existing sweep");
  std::string rate_dir;
  double min_slope = 0.0;
  rate->add_option("--out", rate_dir, "sweep output directory")->required()->check(CLI::ExistingDirectory);
  rate->add_option("--min-slope", min_slope, "fail below this slope");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Success : ConfigFailure;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*sw) return cmd_sweep(sweep_opts);
    if (*check) return cmd_check(check_opts);
    return cmd_rate(rate_dir, min_slope);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "{}\n", e.what());
    return ConfigFailure;
  } catch (const PreparationFailed& e) {
    fmt::print(stderr, "{}\n", e.what());
    return ConfigFailure;
  } catch (const Error& e) {
    fmt::print(stderr, "{}\n", e.what());
    return SolverHalt;
  }
}
