#include "sigmalab/experiment.hpp"

#include <fmt/format.h>
#include <fmt/os.h>
#include <openssl/evp.h>

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace sigmalab {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Bathymetry make_bathymetry(const Discretization& D, const ExperimentConfig& c) {
  if (c.bathymetry == "flat") return Bathymetry::flat(D);
  if (c.bathymetry == "cosine") return Bathymetry::cosine_bump(D, c.bathymetry_amplitude, c.bathymetry_mode);
  if (c.bathymetry == "gaussian") return Bathymetry::gaussian_ridge(D, c.bathymetry_amplitude, c.bathymetry_width);
  return Bathymetry::from_file(D, c.bathymetry_file);
}

/// Zero-mean trigonometric polynomial with coefficients u(-1,1)/(1+k^2),
/// summed over the horizontal directions.
SurfaceField random_surface(const StripGrid& g, int modes, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SurfaceField out(g);
  for (int dir = 0; dir < g.d; ++dir)
    for (int k = 1; k <= modes; ++k) {
      const double a = u(rng) / (1.0 + k * k), b = u(rng) / (1.0 + k * k);
      for (std::size_t i = 0; i < g.nh(); ++i) {
        const double t = 2.0 * std::numbers::pi * k * g.x(i, dir) / g.L;
        out[i] += a * std::cos(t) + b * std::sin(t);
      }
    }
  return out;
}

double mean(const SurfaceField& f) { return surface_integral(f) / f.grid().area(); }

DynamicsOptions dynamics_options(const ExperimentConfig& c) {
  DynamicsOptions o;
  o.cfl = c.cfl;
  return o;
}

}  // namespace

bool SeriesRow::finite() const {
  for (double v : {mu, eps, beta, delta, t, err_V, err_eta, err_w, shear, rho_norm, E_s, taylor_min, mass_drift})
    if (!std::isfinite(v)) return false;
  return true;
}

std::string series_header() {
  return "mu eps beta delta t err_V err_eta err_w shear rho_norm E_s taylor_min mass_drift";
}

std::string format_row(const SeriesRow& r) {
  return fmt::format("{:.6e} {:.6e} {:.6e} {:.6e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.3e}", r.mu,
                     r.eps, r.beta, r.delta, r.t, r.err_V, r.err_eta, r.err_w, r.shear, r.rho_norm, r.E_s,
                     r.taylor_min, r.mass_drift);
}

Setup::Setup(const ExperimentConfig& c) : disc(c.grid), bathymetry(make_bathymetry(disc, c)) {
  c.validate();
  const StripGrid& g = c.grid;
  const PhysParams& p = c.params;
  bathymetry.check(p.beta, c.admissibility.h_min);
  std::mt19937_64 rng(c.seed);
  const EulerSystem sys(disc, bathymetry, p, dynamics_options(c));

  switch (c.recipe) {
    case Recipe::Rest:
      initial = StripState::rest(g);
      break;
    case Recipe::Streamfunction: {
      const SurfaceField shape = random_surface(g, c.modes, rng);
      const SurfaceField eta0 = c.amplitude * random_surface(g, c.modes, rng);
      const SurfaceField rho_shape = random_surface(g, c.modes, rng);
      auto psi = [&](double x, double z) {
        const auto i = std::size_t(std::lround(x / g.dx())) % g.nh();
        const double above = z + 1.0 - p.beta * bathymetry.b()[i];
        return c.amplitude * above * above * shape[i];
      };
      StripField rho(g);
      for (int j = 0; j < g.slabs(); ++j)
        for (std::size_t i = 0; i < g.nh(); ++i) rho(j, i) = c.density * (1.0 + g.r(j)) * rho_shape[i];
      initial = sys.project(init_from_streamfunction(sys, psi, rho, eta0));
      break;
    }
    case Recipe::WellPrepared: {
      SWState sw = SWState::rest(g);
      sw.eta = c.amplitude * random_surface(g, c.modes, rng);
      for (auto& v : sw.V) v = c.amplitude * random_surface(g, c.modes, rng);
      PreparedData prep = well_prepared_init(sys, sw, c.shear, c.density);
      initial = std::move(prep.state);
      shallow = std::move(sw);
      preparation = prep.report;
      return;
    }
  }
  shallow = SWState::rest(g);
  shallow.eta = initial.eta0;
  for (std::size_t i = 0; i < shallow.V.size(); ++i) shallow.V[i] = disc.column_integral(initial.V[i]);
}

double RunResult::terminal_error() const {
  return series.empty() ? kNaN : series.back().err_V + series.back().err_eta;
}

double trace_distance(const StripState& a, const StripState& b) {
  require_same_grid(a.grid(), b.grid(), "trace_distance");
  const StripGrid& g = a.grid();
  double d = 0.0;
  auto scan = [&](const StripField& x, const StripField& y) {
    for (int j : {0, g.nr})
      for (std::size_t i = 0; i < g.nh(); ++i) d = std::max(d, std::abs(x(j, i) - y(j, i)));
  };
  for (std::size_t i = 0; i < a.V.size(); ++i) scan(a.V[i], b.V[i]);
  scan(a.w, b.w);
  scan(a.rho, b.rho);
  for (std::size_t i = 0; i < g.nh(); ++i) d = std::max(d, std::abs(a.eta0[i] - b.eta0[i]));
  return d;
}

std::string content_hash(const std::string& bytes) {
  const std::string header = fmt::format("blob {}", bytes.size());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size() + 1);
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// The direct scheme in the shape the driver expects.
struct DirectAdapter {
  const EulerSystem& sys;
  Admissibility bounds;
  using State = StripState;
  State start(const StripState& s) const { return s; }
  StripState sigma(const State& s) const { return s; }
  State step(const State& s, double dt) const { return sys.step(s, dt); }
  double max_dt(const State& s) const { return sys.max_dt(s); }
  double time(const State& s) const { return s.t; }
  SurfaceField surface(const State& s) const { return s.eta0; }
  EnergyReport energy(const State& s) const {
    return sigmalab::energy(sys.disc(), s, sys.diffeo(s), sys.pressure(s), sys.params());
  }
  NondegeneracyReport geometry(const State& s) const {
    return check_nondegeneracy(s.rho, sys.diffeo(s), sys.params(), bounds);
  }
};

struct MollAdapter {
  const MollSystem& sys;
  Admissibility bounds;
  using State = SlagState;
  State start(const StripState& s) const { return sigma_to_slag(sys.disc(), sys.bathymetry(), sys.params(), s); }
  StripState sigma(const State& s) const {
    return slag_to_sigma(sys.disc(), sys.bathymetry(), sys.params(), s);
  }
  State step(const State& s, double dt) const { return sys.step(s, dt); }
  double max_dt(const State& s) const { return sys.max_dt(s); }
  double time(const State& s) const { return s.t; }
  SurfaceField surface(const State& s) const { return s.eta0(); }
  EnergyReport energy(const State& s) const { return sys.energy(s); }
  NondegeneracyReport geometry(const State& s) const {
    return check_nondegeneracy(s.rho, sys.diffeo(s), sys.params(), bounds);
  }
};

void write_snapshot(const std::filesystem::path& path, const StripState& s) {
  const StripGrid& g = s.grid();
  auto out = fmt::output_file(path.string());
  std::string header = "t";
  for (int dir = 0; dir < g.d; ++dir) header += fmt::format(" x{}", dir);
  header += " r";
  for (int dir = 0; dir < g.d; ++dir) header += fmt::format(" V{}", dir);
  out.print("{} w rho eta0\n", header);
  for (int j = 0; j < g.slabs(); ++j)
    for (std::size_t i = 0; i < g.nh(); ++i) {
      std::string line = fmt::format("{:.9e}", s.t);
      for (int dir = 0; dir < g.d; ++dir) line += fmt::format(" {:.9e}", g.x(i, dir));
      line += fmt::format(" {:.9e}", g.r(j));
      for (const auto& v : s.V) line += fmt::format(" {:.9e}", v(j, i));
      out.print("{} {:.9e} {:.9e} {:.9e}\n", line, s.w(j, i), s.rho(j, i), s.eta0[i]);
    }
}

template <class Adapter>
RunResult drive(const Adapter& a, const ExperimentConfig& c, const Setup& setup, const RunOptions& opt) {
  const Discretization& D = setup.disc;
  const PhysParams& p = c.params;
  const SWSystem shallow(D, setup.bathymetry, p, SWOptions{true, c.cfl, c.admissibility.h_min});
  const double T = c.horizon();
  const auto dir = c.out;
  if (opt.write) std::filesystem::create_directories(dir / "snapshots");
  std::ofstream results;
  if (opt.write) {
    results.open(dir / "results.txt");
    results << series_header() << '\n';
  }

  RunResult run;
  typename Adapter::State state = a.start(setup.initial);
  SWState sw = setup.shallow;
  const double mass0 = mean(a.surface(state));
  int skipped = 0, snapshot = 0;

  auto record = [&]() {
    const StripState sigma = a.sigma(state);
    const EnergyReport e = a.energy(state);
    const ComparisonReport cmp = compare(D, sigma, sw, setup.bathymetry, p);
    SeriesRow row{p.mu,      p.eps,         p.beta,      p.delta,    a.time(state), cmp.err_V,      cmp.err_eta,
                  cmp.err_w, cmp.shear,     cmp.rho_norm, e.E_s,     e.taylor_min,  run.mass_drift};
    run.energy.push_back(e);
    if (row.finite()) {
      run.series.push_back(row);
      if (opt.write) results << format_row(row) << '\n';
    } else {
      ++skipped;
    }
    return e;
  };
  auto snap = [&](bool force) {
    if (!opt.write || c.snapshots == 0) return;
    if (!force && a.time(state) < T * snapshot / c.snapshots - 1e-12 * T) return;
    write_snapshot(dir / "snapshots" / fmt::format("snap_{:04d}.txt", snapshot), a.sigma(state));
    ++snapshot;
  };
  auto halt = [&](BlowupStatus s, const std::string& why) {
    run.status = s;
    run.message = why;
  };

  try {
    const BlowupMonitor monitor(record(), BlowupThresholds{c.admissibility.c_star, c.admissibility.h_min, 10.0});
    snap(true);
    while (a.time(state) < T * (1.0 - 1e-12)) {
      double dt = std::min(a.max_dt(state), T - a.time(state));
      if (c.dt > 0.0) dt = std::min(dt, c.dt);
      state = a.step(state, dt);
      const int sub = std::max(1, int(std::ceil(dt / shallow.max_dt(sw))));
      for (int k = 0; k < sub; ++k) sw = shallow.step(sw, dt / sub);
      ++run.steps;
      run.mass_drift = std::max(run.mass_drift, std::abs(mean(a.surface(state)) - mass0));
      const bool last = a.time(state) >= T * (1.0 - 1e-12);
      if (run.steps % c.every == 0 || last) {
        const EnergyReport e = record();
        const NondegeneracyReport geo = a.geometry(state);
        const BlowupStatus s = monitor.check(e, &geo);
        if (s != BlowupStatus::Continue) {
          halt(s, fmt::format("{} at t = {:.6g}", to_string(s), a.time(state)));
          break;
        }
      }
      if (c.snapshots > 0) snap(false);
      if (opt.log && run.steps % (10 * c.every) == 0)
        *opt.log << fmt::format("t = {:.4f} / {:.4f}  steps {}\n", a.time(state), T, run.steps);
    }
  } catch (const BlowUpSuspected& e) {
    halt(BlowupStatus::NonFinite, e.what());
  } catch (const DegenerateDepth& e) {
    halt(BlowupStatus::DepthDegenerate, e.what());
  } catch (const DegenerateDiffeo& e) {
    halt(BlowupStatus::DepthDegenerate, e.what());
  } catch (const DegenerateDensity& e) {
    halt(BlowupStatus::DensityDegenerate, e.what());
  } catch (const NoConvergence& e) {
    halt(BlowupStatus::SolverFailure, e.what());
  } catch (const IllConditioned& e) {
    halt(BlowupStatus::SolverFailure, e.what());
  } catch (const InterpolationOutOfRange& e) {
    halt(BlowupStatus::SolverFailure, e.what());
  }
  run.t = a.time(state);
  try {
    run.final_state = a.sigma(state);
  } catch (const Error&) {
    run.final_state = StripState::rest(c.grid);
  }

  if (opt.write) {
    results.close();
    json m;
    m["config"] = c.canonical();
    m["config_hash"] = content_hash(c.canonical());
    if (c.bathymetry == "file") m["bathymetry_hash"] = content_hash(read_file(c.bathymetry_file));
    m["seed"] = c.seed;
    m["status"] = to_string(run.status);
    m["message"] = run.message;
    m["steps"] = run.steps;
    m["t_final"] = run.t;
    m["horizon"] = T;
    m["mass_drift"] = run.mass_drift;
    m["rows"] = run.series.size();
    m["skipped_rows"] = skipped;
    if (setup.preparation) {
      const auto& r = *setup.preparation;
      m["preparation"] = {{"closeness", r.closeness()}, {"bound", std::sqrt(p.mu)}, {"err_V", r.err_V},
                          {"err_eta", r.err_eta},        {"err_w", r.err_w},          {"shear", r.shear},
                          {"rho_norm", r.rho_norm}};
    }
    json outputs;
    outputs["results.txt"] = content_hash(read_file(dir / "results.txt"));
    for (int k = 0; k < snapshot; ++k) {
      const auto name = fmt::format("snapshots/snap_{:04d}.txt", k);
      outputs[name] = content_hash(read_file(dir / name));
    }
    m["outputs"] = outputs;
    std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
  }
  return run;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& opt) {
  config.validate();
  const Setup setup(config);
  if (config.scheme == Scheme::Direct) {
    const EulerSystem sys(setup.disc, setup.bathymetry, config.params, dynamics_options(config));
    return drive(DirectAdapter{sys, config.admissibility}, config, setup, opt);
  }
  MollOptions mo;
  mo.cfl = config.cfl;
  mo.admissibility = config.admissibility;
  const MollSystem sys(setup.disc, setup.bathymetry, config.params, config.moll, mo);
  return drive(MollAdapter{sys, config.admissibility}, config, setup, opt);
}

ExperimentConfig member_config(const ExperimentConfig& base, double value, std::size_t index) {
  ExperimentConfig c = base;
  c.axis = SweepAxis::None;
  c.values.clear();
  c.min_slope = 0.0;
  c.out = base.out / fmt::format("member_{:02d}", index);
  switch (base.axis) {
    case SweepAxis::Mu:
      c.params.mu = value;
      if (base.delta_tracks_mu) c.params.delta = value;
      break;
    case SweepAxis::Iota3:
      c.moll.iota3 = value;
      break;
    case SweepAxis::LogHorizon:
      c.params.eps = value;
      c.params.mu = value * value;
      if (base.delta_tracks_mu) c.params.delta = c.params.mu;
      c.log_horizon = true;
      break;
    case SweepAxis::None:
      throw ConfigError("member_config needs a sweep axis");
  }
  c.validate();
  return c;
}

bool SweepSummary::any_halted() const {
  for (const auto& m : members)
    if (m.result.halted()) return true;
  return false;
}

SweepSummary sweep(const ExperimentConfig& config, const SweepOptions& opt) {
  config.validate();
  if (config.axis == SweepAxis::None) throw ConfigError("sweep needs sweep.axis");
  std::vector<ExperimentConfig> jobs;
  for (std::size_t k = 0; k < config.values.size(); ++k) jobs.push_back(member_config(config, config.values[k], k));
  if (config.axis == SweepAxis::Iota3) {
    ExperimentConfig ref = member_config(config, config.values.front(), 0);
    ref.scheme = Scheme::Direct;
    ref.out = config.out / "reference";
    jobs.push_back(ref);
  }

  std::vector<RunResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t k; (k = next++) < jobs.size();) {
      try {
        results[k] = run_experiment(jobs[k], RunOptions{opt.write, nullptr});
      } catch (...) {
        errors[k] = std::current_exception();
      }
      if (opt.log) {
        std::lock_guard lock(log_mutex);
        *opt.log << fmt::format("member {} done: {}\n", k, to_string(results[k].status));
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < std::max(1, opt.jobs); ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  SweepSummary out;
  out.axis = config.axis;
  const RunResult* reference = config.axis == SweepAxis::Iota3 ? &results.back() : nullptr;
  std::vector<std::pair<double, double>> samples;
  for (std::size_t k = 0; k < config.values.size(); ++k) {
    SweepMember m{config.values[k], std::move(results[k]), kNaN};
    if (!m.result.halted()) {
      if (reference == nullptr)
        m.error = m.result.terminal_error();
      else if (!reference->halted())
        m.error = trace_distance(m.result.final_state, reference->final_state);
    }
    if (m.result.halted()) out.note += fmt::format("member {} halted ({}); ", k, m.result.message);
    if (std::isfinite(m.error)) samples.emplace_back(m.value, m.error);
    out.members.push_back(std::move(m));
  }
  if (reference && reference->halted()) out.note += "reference run halted; ";
  try {
    out.fit = fit_rate(samples);
    out.fitted = true;
    if (!out.fit.note.empty()) out.note += out.fit.note;
  } catch (const ConfigError& e) {
    out.note += fmt::format("no rate fit ({})", e.what());
  }
  if (config.min_slope > 0.0) out.gate_pass = out.fitted && !out.fit.degenerate && out.fit.slope >= config.min_slope;

  if (opt.write) {
    std::filesystem::create_directories(config.out);
    std::ofstream summary(config.out / "summary.txt");
    summary << "index value status steps t_final error mass_drift\n";
    for (std::size_t k = 0; k < out.members.size(); ++k) {
      const auto& m = out.members[k];
      summary << fmt::format("{} {:.6e} {} {} {:.9e} {:.9e} {:.3e}\n", k, m.value, to_string(m.result.status),
                             m.result.steps, m.result.t, m.error, m.result.mass_drift);
    }
    json f;
    f["axis"] = to_string(config.axis);
    f["fitted"] = out.fitted;
    if (out.fitted) {
      f["slope"] = out.fit.slope;
      f["intercept"] = out.fit.intercept;
      f["residual"] = out.fit.residual;
      f["slope_stderr"] = out.fit.slope_stderr;
      f["degenerate"] = out.fit.degenerate;
    }
    f["min_slope"] = config.min_slope;
    f["gate_pass"] = out.gate_pass;
    f["note"] = out.note;
    f["config_hash"] = content_hash(config.canonical());
    f["seed"] = config.seed;
    std::ofstream(config.out / "fit.json") << f.dump(2) << '\n';
  }
  return out;
}

RateFit refit(const std::filesystem::path& summary) {
  std::ifstream in(summary);
  if (!in) throw ConfigError("cannot read " + summary.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("index value status", 0) != 0) throw ConfigError(summary.string() + " is not a sweep summary");
  std::vector<std::pair<double, double>> samples;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::size_t index;
    double value, t, error;
    std::string status, error_text;
    int steps;
    if (!(row >> index >> value >> status >> steps >> t >> error_text)) throw ConfigError("malformed row: " + line);
    try {
      error = std::stod(error_text);
    } catch (const std::exception&) {
      error = kNaN;
    }
    if (status == "Continue" && std::isfinite(error)) samples.emplace_back(value, error);
  }
  return fit_rate(samples);
}

std::vector<InvariantCheck> check_invariants(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.axis = SweepAxis::None;
  c.values.clear();
  c.recipe = c.grid.d == 1 ? Recipe::Streamfunction : Recipe::Rest;
  c.validate();
  const Setup setup(c);
  const Discretization& D = setup.disc;
  const PhysParams& p = c.params;
  const EulerSystem sys(D, setup.bathymetry, p, dynamics_options(c));
  const SWSystem shallow(D, setup.bathymetry, p, SWOptions{true, c.cfl, c.admissibility.h_min});
  std::vector<InvariantCheck> out;
  auto add = [&](std::string name, double value, double limit, bool below = true) {
    out.push_back({std::move(name), value, limit, below ? value <= limit : value >= limit});
  };

  StripState rest = StripState::rest(c.grid);
  const double rest_dt = sys.max_dt(rest);
  for (int k = 0; k < 20; ++k) rest = sys.step(rest, rest_dt);
  add("rest_fixpoint", rest.max_abs(), 1e-12);

  std::mt19937_64 rng(c.seed);
  SWState sw = SWState::rest(c.grid);
  sw.eta = std::max(c.amplitude, 0.05) * random_surface(c.grid, c.modes, rng);
  for (auto& v : sw.V) v = std::max(c.amplitude, 0.05) * random_surface(c.grid, c.modes, rng);
  const StripState lift = lift_sw(D, sw, setup.bathymetry, p);
  add("lift_divergence", sys.divergence_residual(lift), 1e-10);

  StripState data = c.grid.d == 1 ? setup.initial : sys.project(lift);
  add("data_divergence", sys.divergence_residual(data), 1e-8);
  add("data_bottom_flux", sys.bottom_flux(data), 1e-10);

  DirectAdapter a{sys, c.admissibility};
  const EnergyReport e0 = a.energy(data);
  add("taylor_sign", e0.taylor_min, c.admissibility.c_star, false);
  const EquivalenceMonitor equivalence(e0);
  const double mass0 = mean(data.eta0), dt = 0.8 * sys.max_dt(data);
  bool equivalent = true;
  for (int k = 0; k < 10; ++k) {
    data = sys.step(data, dt);
    if (k % 5 == 4) equivalent = equivalent && equivalence.check(a.energy(data)).pass;
  }
  add("mass_conservation", std::abs(mean(data.eta0) - mass0), 1e-10);
  add("energy_equivalence", equivalent ? 0.0 : 1.0, 0.0);

  const double sw_mass0 = shallow.mass(sw), sw_dt = 0.8 * shallow.max_dt(sw);
  for (int k = 0; k < 10; ++k) sw = shallow.step(sw, sw_dt);
  add("sw_mass_conservation", std::abs(shallow.mass(sw) - sw_mass0) / sw_mass0, 1e-12);
  return out;
}

}  // namespace sigmalab
