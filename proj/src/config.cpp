#include "sigmalab/config.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace sigmalab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, v));
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size())
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, v));
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, v));
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(to_double(key, t));
  }
  return out;
}

template <class Names>
auto to_enum(const std::string& key, const std::string& v, const Names& names) {
  for (const auto& [name, e] : names)
    if (v == name) return e;
  throw ConfigError(fmt::format("{}: unknown value '{}'", key, v));
}

constexpr std::array<std::pair<const char*, Recipe>, 3> kRecipes{
    {{"rest", Recipe::Rest}, {"streamfunction", Recipe::Streamfunction}, {"well_prepared", Recipe::WellPrepared}}};
constexpr std::array<std::pair<const char*, Scheme>, 2> kSchemes{
    {{"direct", Scheme::Direct}, {"moll", Scheme::Mollified}}};
constexpr std::array<std::pair<const char*, SweepAxis>, 4> kAxes{{{"none", SweepAxis::None},
                                                                  {"mu", SweepAxis::Mu},
                                                                  {"iota3", SweepAxis::Iota3},
                                                                  {"log_horizon", SweepAxis::LogHorizon}}};

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [&](const char* k, double ExperimentConfig::*m) {
      t[k] = [m](ExperimentConfig& c, const std::string& key, const std::string& v) { c.*m = to_double(key, v); };
    };
    auto par = [&](const char* k, double PhysParams::*m) {
      t[k] = [m](ExperimentConfig& c, const std::string& key, const std::string& v) {
        c.params.*m = to_double(key, v);
      };
    };
    auto integer = [&](const char* k, int ExperimentConfig::*m) {
      t[k] = [m](ExperimentConfig& c, const std::string& key, const std::string& v) { c.*m = to_int<int>(key, v); };
    };
    auto grid = [&](const char* k, int StripGrid::*m) {
      t[k] = [m](ExperimentConfig& c, const std::string& key, const std::string& v) { c.grid.*m = to_int<int>(key, v); };
    };
    auto iota = [&](const char* k, double MollParams::*m) {
      t[k] = [m](ExperimentConfig& c, const std::string& key, const std::string& v) { c.moll.*m = to_double(key, v); };
    };
    par("params.eps", &PhysParams::eps);
    par("params.beta", &PhysParams::beta);
    par("params.mu", &PhysParams::mu);
    par("params.delta", &PhysParams::delta);
    par("params.g", &PhysParams::g);
    par("params.rho_bar", &PhysParams::rho_bar);
    grid("grid.d", &StripGrid::d);
    grid("grid.nx", &StripGrid::nx);
    grid("grid.nr", &StripGrid::nr);
    t["grid.L"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) { c.grid.L = to_double(key, v); };
    t["bathymetry.preset"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.bathymetry = v; };
    num("bathymetry.amplitude", &ExperimentConfig::bathymetry_amplitude);
    integer("bathymetry.mode", &ExperimentConfig::bathymetry_mode);
    num("bathymetry.width", &ExperimentConfig::bathymetry_width);
    t["bathymetry.file"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.bathymetry_file = v; };
    t["init.recipe"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.recipe = to_enum(key, v, kRecipes);
    };
    num("init.amplitude", &ExperimentConfig::amplitude);
    integer("init.modes", &ExperimentConfig::modes);
    num("init.shear", &ExperimentConfig::shear);
    num("init.density", &ExperimentConfig::density);
    t["scheme.kind"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.scheme = to_enum(key, v, kSchemes);
    };
    iota("scheme.iota1", &MollParams::iota1);
    iota("scheme.iota2", &MollParams::iota2);
    iota("scheme.iota3", &MollParams::iota3);
    num("run.T", &ExperimentConfig::T);
    num("run.dt", &ExperimentConfig::dt);
    num("run.cfl", &ExperimentConfig::cfl);
    integer("run.every", &ExperimentConfig::every);
    t["run.log_horizon"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.log_horizon = to_bool(key, v);
    };
    integer("run.snapshots", &ExperimentConfig::snapshots);
    t["run.seed"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.seed = to_int<std::uint64_t>(key, v);
    };
    t["output.dir"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out = v; };
    t["sweep.axis"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.axis = to_enum(key, v, kAxes);
    };
    t["sweep.values"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.values = to_list(key, v);
    };
    t["sweep.delta_tracks_mu"] = [](ExperimentConfig& c, const std::string& key, const std::string& v) {
      c.delta_tracks_mu = to_bool(key, v);
    };
    num("sweep.min_slope", &ExperimentConfig::min_slope);
    auto bound = [&](const char* k, double Admissibility::*m) {
      t[k] = [m](ExperimentConfig& c, const std::string& key, const std::string& v) {
        c.admissibility.*m = to_double(key, v);
      };
    };
    bound("admissibility.h_min", &Admissibility::h_min);
    bound("admissibility.h_max", &Admissibility::h_max);
    bound("admissibility.c_star", &Admissibility::c_star);
    return t;
  }();
  return table;
}

template <class E, std::size_t N>
const char* name_of(E e, const std::array<std::pair<const char*, E>, N>& names) {
  for (const auto& [name, v] : names)
    if (v == e) return name;
  return "?";
}

}  // namespace

std::string to_string(Recipe r) { return name_of(r, kRecipes); }
std::string to_string(Scheme s) { return name_of(s, kSchemes); }
std::string to_string(SweepAxis a) { return name_of(a, kAxes); }

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError(fmt::format("unknown key '{}'", key));
  it->second(*this, key, value);
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig c;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    c.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return parse(in);
}

void ExperimentConfig::validate() const {
  params.validate();
  grid.validate();
  moll.validate();
  if (bathymetry != "flat" && bathymetry != "cosine" && bathymetry != "gaussian" && bathymetry != "file")
    throw ConfigError("unknown bathymetry preset '" + bathymetry + "'");
  if (bathymetry == "file" && bathymetry_file.empty()) throw ConfigError("bathymetry.file is required for 'file'");
  if (amplitude < 0 || shear < 0 || density < 0) throw ConfigError("initial-data amplitudes must be non-negative");
  if (modes < 1) throw ConfigError("init.modes must be at least 1");
  if (recipe == Recipe::Streamfunction && grid.d != 1) throw ConfigError("the streamfunction recipe needs d = 1");
  if (recipe == Recipe::WellPrepared && params.delta > params.mu)
    throw ConfigError("well-prepared data need delta <= mu");
  if (!(T > 0)) throw ConfigError("run.T must be positive");
  if (dt < 0) throw ConfigError("run.dt must be non-negative");
  if (!(cfl > 0 && cfl <= 1)) throw ConfigError("run.cfl must lie in (0, 1]");
  if (every < 1) throw ConfigError("run.every must be at least 1");
  if (snapshots < 0) throw ConfigError("run.snapshots must be non-negative");
  if (log_horizon && !(params.eps > 0 && params.eps < 1)) throw ConfigError("log horizon needs 0 < eps < 1");
  if (log_horizon && params.mu > params.eps) throw ConfigError("log horizon needs mu <= eps");
  if (min_slope < 0) throw ConfigError("sweep.min_slope must be non-negative");
  if (!(admissibility.h_min > 0 && admissibility.h_min < admissibility.h_max))
    throw ConfigError("admissibility needs 0 < h_min < h_max");
  if (!(admissibility.c_star > 0)) throw ConfigError("admissibility.c_star must be positive");
  if (axis != SweepAxis::None) {
    if (values.size() < 3) throw ConfigError("a sweep needs at least 3 values");
    if (!std::ranges::all_of(values, [](double v) { return v > 0; }))
      throw ConfigError("sweep values must be positive");
    if (!std::ranges::is_sorted(values, std::greater<>{}) && !std::ranges::is_sorted(values))
      throw ConfigError("sweep values must be sorted");
    if (axis == SweepAxis::Iota3 && scheme != Scheme::Mollified)
      throw ConfigError("an iota3 sweep needs scheme.kind = moll");
    if (axis == SweepAxis::LogHorizon && !std::ranges::all_of(values, [](double v) { return v < 1; }))
      throw ConfigError("log-horizon values are eps and must lie below 1");
  }
}

double ExperimentConfig::horizon() const { return log_horizon ? T * std::log(1.0 / params.eps) : T; }

std::string ExperimentConfig::canonical() const {
  std::string s;
  auto put = [&](const char* k, const auto& v) { s += fmt::format("{} = {}\n", k, v); };
  put("params.eps", params.eps);
  put("params.beta", params.beta);
  put("params.mu", params.mu);
  put("params.delta", params.delta);
  put("params.g", params.g);
  put("params.rho_bar", params.rho_bar);
  put("grid.d", grid.d);
  put("grid.nx", grid.nx);
  put("grid.nr", grid.nr);
  put("grid.L", grid.L);
  put("bathymetry.preset", bathymetry);
  put("bathymetry.amplitude", bathymetry_amplitude);
  put("bathymetry.mode", bathymetry_mode);
  put("bathymetry.width", bathymetry_width);
  put("bathymetry.file", bathymetry_file);
  put("init.recipe", to_string(recipe));
  put("init.amplitude", amplitude);
  put("init.modes", modes);
  put("init.shear", shear);
  put("init.density", density);
  put("scheme.kind", to_string(scheme));
  put("scheme.iota1", moll.iota1);
  put("scheme.iota2", moll.iota2);
  put("scheme.iota3", moll.iota3);
  put("run.T", T);
  put("run.dt", dt);
  put("run.cfl", cfl);
  put("run.every", every);
  put("run.log_horizon", log_horizon);
  put("run.snapshots", snapshots);
  put("run.seed", seed);
  put("sweep.axis", to_string(axis));
  put("sweep.values", fmt::format("{}", fmt::join(values, ", ")));
  put("sweep.delta_tracks_mu", delta_tracks_mu);
  put("sweep.min_slope", min_slope);
  put("admissibility.h_min", admissibility.h_min);
  put("admissibility.h_max", admissibility.h_max);
  put("admissibility.c_star", admissibility.c_star);
  return s;
}

}  // namespace sigmalab
