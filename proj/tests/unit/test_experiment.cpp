#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "helpers.hpp"
#include "sigmalab/experiment.hpp"

using namespace testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("sigmalab_test_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kSmall = R"(
# small well-prepared case
params.eps = 0.3
params.beta = 0.3
params.mu = 0.01
params.delta = 0.01
grid.nx = 32
grid.nr = 12
bathymetry.preset = cosine
bathymetry.amplitude = 0.5
init.recipe = well_prepared
init.amplitude = 0.1
init.shear = 0.3
init.density = 0.3
run.T = 0.3
run.every = 2
)";

}  // namespace

TEST_CASE("config parsing and validation") {
  const auto c = ExperimentConfig::parse(kSmall);
  CHECK(c.params.mu == 0.01);
  CHECK(c.grid.nr == 12);
  CHECK(c.recipe == Recipe::WellPrepared);
  CHECK(c.bathymetry == "cosine");
  CHECK(ExperimentConfig::parse(c.canonical()).canonical() == c.canonical());

  CHECK_THROWS_AS(ExperimentConfig::parse("params.nope = 1"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("params.mu = abc"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("params.mu 0.1"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("params.mu = 0"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("init.recipe = well_prepared\nparams.mu = 0.01\nparams.delta = 0.1"),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("bathymetry.preset = volcano"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("sweep.axis = mu\nsweep.values = 0.1, 0.01"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("sweep.axis = mu\nsweep.values = 0.1, 0.001, 0.01"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("sweep.axis = mu\nsweep.values = 0.1, 0, -1"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("sweep.axis = iota3\nsweep.values = 0.1, 0.01, 0.001"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("run.log_horizon = true\nparams.eps = 0.1\nparams.mu = 0.5"),
                  ConfigError);

  CHECK_THROWS_AS(ExperimentConfig::parse("admissibility.h_min = 20"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse("admissibility.c_star = 0"), ConfigError);
  const auto adm = ExperimentConfig::parse("admissibility.h_min = 0.2\nadmissibility.c_star = 0.05");
  CHECK(adm.admissibility.h_min == 0.2);
  CHECK(adm.canonical().find("admissibility.c_star = 0.05\n") != std::string::npos);

  const auto lh = ExperimentConfig::parse("run.log_horizon = true\nparams.eps = 0.1\nparams.mu = 0.01\nrun.T = 0.5");
  CHECK(lh.horizon() == doctest::Approx(0.5 * std::log(10.0)));
}

TEST_CASE("content hash matches git blob hashes") {
  CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("rest run writes a zero series and a manifest") {
  TempDir dir("rest");
  auto c = ExperimentConfig::parse("grid.nx = 32\ngrid.nr = 8\nrun.T = 1\nrun.snapshots = 2\n");
  c.out = dir.path;
  const RunResult r = run_experiment(c);
  CHECK(r.status == BlowupStatus::Continue);
  CHECK(r.t == doctest::Approx(1.0));
  CHECK(r.series.size() >= 2);
  for (const auto& row : r.series) {
    CHECK(row.E_s == 0.0);
    CHECK(row.err_V + row.err_eta + row.err_w + row.shear + row.rho_norm == 0.0);
  }
  const std::string results = slurp(dir.path / "results.txt");
  CHECK(results.rfind(series_header() + "\n", 0) == 0);
  const auto m = nlohmann::json::parse(slurp(dir.path / "manifest.json"));
  CHECK(m["status"] == "Continue");
  CHECK(m["config_hash"] == content_hash(c.canonical()));
  CHECK(m["outputs"]["results.txt"] == content_hash(results));
  CHECK(m["outputs"].size() == 4);  // results plus snapshots at t = 0, 1/2, 1
  for (const auto& [name, hash] : m["outputs"].items()) CHECK(hash == content_hash(slurp(dir.path / name)));
}

TEST_CASE("identical configs give bit-identical results") {
  TempDir a("det_a"), b("det_b");
  auto c = ExperimentConfig::parse(kSmall);
  c.out = a.path;
  run_experiment(c);
  c.out = b.path;
  run_experiment(c);
  CHECK(slurp(a.path / "results.txt") == slurp(b.path / "results.txt"));
  c.seed = 7;
  run_experiment(c);
  CHECK(slurp(a.path / "results.txt") != slurp(b.path / "results.txt"));
}

TEST_CASE("well-prepared run populates the comparison series") {
  const auto c = ExperimentConfig::parse(kSmall);
  const Setup setup(c);
  REQUIRE(setup.preparation.has_value());
  CHECK(setup.preparation->closeness() <= 0.1);
  const RunResult r = run_experiment(c, RunOptions{false, nullptr});
  CHECK(r.status == BlowupStatus::Continue);
  CHECK(r.series.size() >= 3);
  CHECK(r.series.front().shear == doctest::Approx(0.03).epsilon(1e-6));
  CHECK(r.series.back().err_V > r.series.front().err_V);
  CHECK(r.mass_drift < 1e-12);
  CHECK(std::isfinite(r.terminal_error()));
}

TEST_CASE("both schemes run through the driver and agree on the boundary traces") {
  auto c = ExperimentConfig::parse(
      "params.eps = 0.1\nparams.beta = 0.2\nparams.mu = 0.2\nparams.delta = 0.05\ngrid.nx = 32\ngrid.nr = 12\n"
      "bathymetry.preset = cosine\nbathymetry.amplitude = 0.5\ninit.recipe = streamfunction\n"
      "init.amplitude = 0.02\ninit.density = 0.02\nrun.T = 0.2\nrun.dt = 0.01\n");
  const RunResult direct = run_experiment(c, RunOptions{false, nullptr});
  c.scheme = Scheme::Mollified;
  const RunResult moll = run_experiment(c, RunOptions{false, nullptr});
  CHECK(direct.steps == moll.steps);
  CHECK(trace_distance(direct.final_state, moll.final_state) < 1e-9);
}

TEST_CASE("solver halts are reported, not thrown") {
  auto c = ExperimentConfig::parse(
      "params.g = 0.02\ninit.recipe = streamfunction\ninit.amplitude = 0.1\ngrid.nx = 32\ngrid.nr = 8\n"
      "run.every = 1\n");
  const RunResult r = run_experiment(c, RunOptions{false, nullptr});
  CHECK(r.status == BlowupStatus::TaylorDegenerate);
  CHECK(r.halted());
  CHECK(r.message.find("TaylorDegenerate") != std::string::npos);

  c.params.g = 1.0;
  c.bathymetry = "cosine";
  c.bathymetry_amplitude = 0.5;
  c.params.beta = 0.5;
  c.admissibility.h_min = 0.8;
  CHECK_THROWS_AS(run_experiment(c, RunOptions{false, nullptr}), DegenerateDepth);
}

TEST_CASE("sweeps are deterministic across job counts and re-fit from disk") {
  TempDir one("sweep1"), two("sweep2");
  auto c = ExperimentConfig::parse(std::string(kSmall) +
                                   "init.shear = 0\ninit.density = 0\nparams.delta = 0\n"
                                   "sweep.axis = mu\nsweep.values = 1e-1, 1e-2, 1e-3\nsweep.delta_tracks_mu = false\n"
                                   "sweep.min_slope = 0.5\n");
  c.out = one.path;
  const SweepSummary a = sweep(c, SweepOptions{1, true, nullptr});
  c.out = two.path;
  const SweepSummary b = sweep(c, SweepOptions{3, true, nullptr});
  REQUIRE(a.fitted);
  CHECK(a.gate_pass);
  CHECK(a.fit.slope > 0.5);
  CHECK(slurp(one.path / "summary.txt") == slurp(two.path / "summary.txt"));
  CHECK(refit(one.path / "summary.txt").slope == doctest::Approx(a.fit.slope).epsilon(1e-8));
  for (std::size_t k = 0; k < 3; ++k) CHECK(fs::exists(one.path / ("member_0" + std::to_string(k)) / "manifest.json"));

  c.min_slope = 5.0;
  c.out = two.path;
  CHECK_FALSE(sweep(c, SweepOptions{2, false, nullptr}).gate_pass);
}

TEST_CASE("member configs and refit exclusions") {
  auto base = ExperimentConfig::parse("sweep.axis = log_horizon\nsweep.values = 0.2, 0.1, 0.05\n");
  const auto m = member_config(base, 0.1, 1);
  CHECK(m.params.eps == 0.1);
  CHECK(m.params.mu == doctest::Approx(0.01));
  CHECK(m.params.delta == doctest::Approx(0.01));
  CHECK(m.log_horizon);
  CHECK(m.axis == SweepAxis::None);

  TempDir dir("refit");
  fs::create_directories(dir.path);
  std::ofstream(dir.path / "summary.txt") << "index value status steps t_final error mass_drift\n"
                                          << "0 1e-1 Continue 10 1 1e-1 0\n"
                                          << "1 1e-2 NormBlowup 3 0.2 nan 0\n"
                                          << "2 1e-3 Continue 10 1 1e-3 0\n"
                                          << "3 1e-4 Continue 10 1 1e-4 0\n";
  const RateFit f = refit(dir.path / "summary.txt");
  CHECK(f.slope == doctest::Approx(1.0));
  std::ofstream(dir.path / "bad.txt") << "something else\n";
  CHECK_THROWS_AS(refit(dir.path / "bad.txt"), ConfigError);
}

TEST_CASE("invariant suite passes on an admissible configuration") {
  const auto c = ExperimentConfig::parse(kSmall);
  for (const auto& k : check_invariants(c)) {
    INFO(k.name << " " << k.value << " limit " << k.limit);
    CHECK(k.pass);
  }
}
