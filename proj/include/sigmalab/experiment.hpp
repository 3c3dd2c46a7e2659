/// Experiment orchestration: single runs with a shallow-water companion,
/// parameter sweeps with rate fits, and the artifacts they write.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sigmalab/config.hpp"
#include "sigmalab/shallow_water.hpp"

namespace sigmalab {

/// One line of the time series.
struct SeriesRow {
  double mu = 0, eps = 0, beta = 0, delta = 0, t = 0;
  double err_V = 0, err_eta = 0, err_w = 0, shear = 0, rho_norm = 0;
  double E_s = 0, taylor_min = 0, mass_drift = 0;

  bool finite() const;
};

/// The results-file header, one space-separated line.
std::string series_header();
std::string format_row(const SeriesRow& r);

/// Everything a run needs once the config is resolved.
struct Setup {
  Discretization disc;
  Bathymetry bathymetry;
  StripState initial;
  SWState shallow;
  std::optional<ComparisonReport> preparation;  ///< set for well-prepared data

  explicit Setup(const ExperimentConfig& c);
};

struct RunOptions {
  bool write = true;
  std::ostream* log = nullptr;
};

struct RunResult {
  BlowupStatus status = BlowupStatus::Continue;
  std::string message;  ///< halt reason when status != Continue
  int steps = 0;
  double t = 0.0;
  double mass_drift = 0.0;  ///< max |mean eta0(t) - mean eta0(0)|
  std::vector<SeriesRow> series;
  std::vector<EnergyReport> energy;
  StripState final_state;  ///< sigma-coordinate fields at the final time

  bool halted() const { return status != BlowupStatus::Continue; }
  /// err_V + err_eta at the final row (NaN without rows).
  double terminal_error() const;
};

/// Integrates the configured scheme and a shallow-water companion to the
/// horizon. Solver halts become a non-Continue status; config errors throw.
/// With `write`, fills config.out with results.txt, snapshots and
/// manifest.json.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& opt = {});

/// Max difference of (V, w, rho) on the bottom and surface slabs and of eta0:
/// the nodes where sigma and semi-Lagrangian coordinates coincide.
double trace_distance(const StripState& a, const StripState& b);

struct SweepMember {
  double value = 0.0;
  RunResult result;
  double error = 0.0;  ///< the fitted quantity
};

struct SweepSummary {
  SweepAxis axis = SweepAxis::None;
  std::vector<SweepMember> members;
  RateFit fit;
  bool fitted = false;
  bool gate_pass = true;
  std::string note;

  bool any_halted() const;
};

struct SweepOptions {
  int jobs = 1;
  bool write = true;
  std::ostream* log = nullptr;
};

/// The member config for one axis value.
ExperimentConfig member_config(const ExperimentConfig& base, double value, std::size_t index);

/// Runs the members (up to `jobs` at once), fits log error against log value
/// over the members that completed, and writes summary.txt and fit.json.
/// The iota3 axis measures the trace distance to a direct-scheme reference.
SweepSummary sweep(const ExperimentConfig& config, const SweepOptions& opt = {});

/// Re-fits a summary.txt written by sweep.
RateFit refit(const std::filesystem::path& summary);

struct InvariantCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

/// Fast invariant suite on the configured grid, parameters and bathymetry:
/// rest fixpoint, incompressibility and impermeability of the initial data,
/// Taylor sign, mass conservation, energy equivalence, shallow-water mass
/// and the incompressibility of the lift.
std::vector<InvariantCheck> check_invariants(const ExperimentConfig& config);

/// Git-style blob hash: SHA-1 of "blob <size>\0" followed by the bytes.
std::string content_hash(const std::string& bytes);

/// Exit codes shared by the command-line tool.
enum ExitCode : int { Success = 0, ConfigFailure = 2, SolverHalt = 3, FitFailure = 4 };

}  // namespace sigmalab
