#include "sigmalab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sigmalab {

namespace {

double hs_sq(const Discretization& D, const StripField& f, int s) {
  const double n = sobolev_norm(D, f, s, std::min(s, 4));
  return n * n;
}

double weighted_sq(const Discretization& D, const StripField& f, const StripField& weight) {
  return strip_integral(D, hadamard(weight, hadamard(f, f)));
}

double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

void EnergyOrders::validate() const {
  if (s0 < 1) throw ConfigError("s0 must be at least 1");
  if (s < s0 + 2) throw ConfigError("s must satisfy s >= s0 + 2");
  if (s0 + 1 > 4 || s > 4) throw ConfigError("orders above 4 exceed the vertical stencils");
}

bool EnergyReport::finite() const {
  for (double v : {E_s, E_low, alinhac_V, alinhac_w, alinhac_rho, surface_term, dispersive_term, vort_norm,
                   shear_ratio, drw_norm, w_norm, taylor_min})
    if (!std::isfinite(v)) return false;
  return true;
}

EnergyReport energy(const Discretization& D, const StripState& s, const DiffeoFields& diffeo, const StripField& P,
                    const PhysParams& p, const EnergyOrders& orders, double iota3) {
  orders.validate();
  if (iota3 < 0.0) throw ConfigError("iota3 must be non-negative");
  require_same_grid(D.grid(), s.grid(), "energy");
  const int low = orders.s0 + 1;
  const int hs = orders.s;
  const double sqmu = std::sqrt(p.mu);

  EnergyReport r;
  r.t = s.t;

  for (const auto& Vi : s.V) r.E_low += hs_sq(D, Vi, low);
  r.E_low += hs_sq(D, sqmu * StripField(s.w), low);
  r.E_low += hs_sq(D, s.rho, low);
  const double eta_low = sobolev_norm(D, s.eta0, low);
  r.E_low += p.g * p.rho_bar * eta_low * eta_low;

  const StripField density = total_density(s.rho, p);
  const StripField jrho = hadamard(diffeo.depth, density);
  for (const auto& Vi : s.V) r.alinhac_V += weighted_sq(D, alinhac_unknown(D, Vi, hs, diffeo), jrho);
  r.alinhac_w = p.mu * weighted_sq(D, alinhac_unknown(D, s.w, hs, diffeo), jrho);
  r.alinhac_rho = p.mu * weighted_sq(D, alinhac_unknown(D, s.rho, hs, diffeo), diffeo.depth);

  const TaylorCoefficient a = taylor_coefficient(D, P, diffeo, p);
  r.taylor_min = a.min();
  const SurfaceField eta_s = lambda_pow(D, s.eta0, hs, true);
  r.surface_term = surface_integral(hadamard(a.a, hadamard(eta_s, eta_s)));
  if (iota3 > 0.0) {
    const double n = sobolev_norm(D, eta_s, 0.5);
    r.dispersive_term = iota3 * n * n;
  }

  const VorticityField omega = vorticity(D, s, diffeo, p);
  double vort_sq = 0.0;
  for (const auto& c : omega.omega_x) vort_sq += hs_sq(D, c, hs - 1);
  if (omega.omega_r) vort_sq += hs_sq(D, *omega.omega_r, hs - 1);
  r.vort_norm = std::sqrt(vort_sq);

  double shear_sq = 0.0;
  for (const auto& Vi : s.V) shear_sq += hs_sq(D, D.dr(Vi), hs - 1);
  r.shear_ratio = std::sqrt(shear_sq) / sqmu;
  r.drw_norm = std::sqrt(hs_sq(D, D.dr(s.w), hs - 1));
  r.w_norm = std::sqrt(hs_sq(D, s.w, hs - 1));

  r.E_s = r.E_low + r.alinhac_V + r.alinhac_w + r.alinhac_rho + r.surface_term + r.dispersive_term + vort_sq;
  return r;
}

EquivalenceCheck equivalence_ratios(const EnergyReport& r) {
  const double root = std::sqrt(std::max(r.E_s, 0.0));
  EquivalenceCheck c;
  c.shear = ratio_or_zero(r.shear_ratio, root);
  c.drw = ratio_or_zero(r.drw_norm, root);
  c.w = ratio_or_zero(r.w_norm, root);
  return c;
}

EquivalenceMonitor::EquivalenceMonitor(const EnergyReport& reference, double factor) {
  if (!(factor >= 1.0)) throw ConfigError("equivalence factor must be at least 1");
  const EquivalenceCheck c = equivalence_ratios(reference);
  shear_ = factor * c.shear;
  drw_ = factor * c.drw;
  w_ = factor * c.w;
}

EquivalenceCheck EquivalenceMonitor::check(const EnergyReport& r) const {
  EquivalenceCheck c = equivalence_ratios(r);
  // Absolute slack keeps the exact-zero reference states (rest, columnar
  // lifts) from flagging round-off.
  constexpr double slack = 1e-12;
  std::ostringstream msg;
  auto test = [&](const char* name, double value, double bound) {
    if (!(value <= bound + slack)) {
      c.pass = false;
      msg << name << " ratio " << value << " exceeds " << bound << "; ";
    }
  };
  test("shear", c.shear, shear_);
  test("d_r w", c.drw, drw_);
  test("w", c.w, w_);
  c.detail = msg.str();
  return c;
}

std::string to_string(BlowupStatus s) {
  switch (s) {
    case BlowupStatus::Continue: return "Continue";
    case BlowupStatus::TaylorDegenerate: return "TaylorDegenerate";
    case BlowupStatus::NormBlowup: return "NormBlowup";
    case BlowupStatus::NonFinite: return "NonFinite";
    case BlowupStatus::DepthDegenerate: return "DepthDegenerate";
    case BlowupStatus::DensityDegenerate: return "DensityDegenerate";
    case BlowupStatus::SolverFailure: return "SolverFailure";
  }
  return "Unknown";
}

BlowupMonitor::BlowupMonitor(const EnergyReport& initial, BlowupThresholds th) : th_(th) {
  if (!(th.growth > 1.0)) throw ConfigError("blow-up growth factor must exceed 1");
  initial_ = norms(initial);
  for (std::size_t i = 2; i < initial_.size(); ++i) initial_[i] = std::max(initial_[i], initial_[0]);
}

std::vector<double> BlowupMonitor::norms(const EnergyReport& r) const {
  return {std::sqrt(std::max(r.E_s, 0.0)), std::sqrt(std::max(r.E_low, 0.0)), r.vort_norm, r.shear_ratio,
          r.w_norm};
}

BlowupStatus BlowupMonitor::check(const EnergyReport& r, const NondegeneracyReport* geometry) const {
  if (!r.finite()) return BlowupStatus::NonFinite;
  if (geometry) {
    if (!geometry->depth_ok) return BlowupStatus::DepthDegenerate;
    if (!geometry->density_ok) return BlowupStatus::DensityDegenerate;
  }
  if (r.taylor_min < 0.5 * th_.c_star) return BlowupStatus::TaylorDegenerate;
  const auto now = norms(r);
  for (std::size_t i = 0; i < now.size(); ++i)
    if (initial_[i] > 0.0 && now[i] > th_.growth * initial_[i]) return BlowupStatus::NormBlowup;
  return BlowupStatus::Continue;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& samples, double noise_floor) {
  if (samples.size() < 3) throw ConfigError("rate fit needs at least three samples");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& [mu, err] : samples) {
    if (!(mu > 0.0)) throw ConfigError("rate fit needs positive mu values");
    lo = std::min(lo, mu);
    hi = std::max(hi, mu);
  }
  if (hi / lo < 100.0 * (1.0 - 1e-12)) throw ConfigError("rate fit samples must span two decades of mu");

  RateFit fit;
  std::vector<double> x, y;
  for (const auto& [mu, err] : samples) {
    if (!std::isfinite(err) || err <= noise_floor) {
      fit.degenerate = true;
      fit.note += "error at noise floor for mu=" + std::to_string(mu) + "; ";
      continue;
    }
    x.push_back(std::log(mu));
    y.push_back(std::log(err));
  }
  const std::size_t n = x.size();
  if (n < 2) {
    fit.degenerate = true;
    fit.slope = fit.intercept = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / double(n));
  fit.slope_stderr = n > 2 ? std::sqrt(ss / double(n - 2) / sxx) : 0.0;
  return fit;
}

double gronwall_rate(const std::vector<double>& times, const std::vector<double>& energies) {
  if (times.size() != energies.size() || times.empty())
    throw ConfigError("gronwall_rate needs matching, non-empty series");
  const double e0 = energies.front();
  if (!(e0 > 0.0)) throw ConfigError("gronwall_rate needs a positive initial energy");
  double k = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double dt = times[i] - times.front();
    if (dt > 0.0) k = std::max(k, std::log(energies[i] / e0) / dt);
  }
  return k;
}

}  // namespace sigmalab
