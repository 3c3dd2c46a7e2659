/// Experiment configuration: flat `section.key = value` text.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sigmalab/diagnostics.hpp"
#include "sigmalab/moll.hpp"

namespace sigmalab {

enum class Recipe { Rest, Streamfunction, WellPrepared };
enum class Scheme { Direct, Mollified };
enum class SweepAxis { None, Mu, Iota3, LogHorizon };

struct ExperimentConfig {
  PhysParams params;
  StripGrid grid;

  std::string bathymetry = "flat";  ///< flat | cosine | gaussian | file
  double bathymetry_amplitude = 0.0;
  int bathymetry_mode = 1;
  double bathymetry_width = 0.5;
  std::string bathymetry_file;

  Recipe recipe = Recipe::Rest;
  double amplitude = 0.1;  ///< size of the random smooth data
  int modes = 2;           ///< highest horizontal mode of the random data
  double shear = 0.0;      ///< well-prepared shear amplitude
  double density = 0.0;    ///< density amplitude

  Scheme scheme = Scheme::Direct;
  MollParams moll;

  double T = 1.0;
  double dt = 0.0;  ///< 0 selects the CFL step
  double cfl = 0.4;
  int every = 10;   ///< diagnostics cadence in steps
  bool log_horizon = false;  ///< run to T log(1/eps)
  int snapshots = 0;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";

  Admissibility admissibility;  ///< depth bounds and Taylor floor for the monitors

  SweepAxis axis = SweepAxis::None;
  std::vector<double> values;
  bool delta_tracks_mu = true;  ///< sweeps set delta = mu
  double min_slope = 0.0;       ///< sweep gate; 0 disables it

  /// Throws ConfigError on unknown keys, malformed values or violated guards.
  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Applies one `key = value` assignment.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  /// Every input key (all but output.dir) in a fixed order, shortest
  /// round-trip values.
  std::string canonical() const;
  /// The horizon after the log-horizon rescaling.
  double horizon() const;
};

std::string to_string(Recipe r);
std::string to_string(Scheme s);
std::string to_string(SweepAxis a);

}  // namespace sigmalab
