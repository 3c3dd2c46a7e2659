#include "sigmalab/moll.hpp"

#include <math.h>  // the pchip header calls isnan unqualified

#include <algorithm>
#include <boost/math/interpolators/pchip.hpp>
#include <cmath>
#include <numbers>

namespace sigmalab {

void MollParams::validate() const {
  if (!(iota1 >= 0.0) || !(iota2 >= 0.0) || !(iota3 >= 0.0))
    throw ConfigError("mollification parameters must be non-negative");
}

SlagState SlagState::rest(const StripGrid& g) {
  SlagState s;
  s.V.assign(std::size_t(g.d), StripField(g));
  s.w = StripField(g);
  s.rho = StripField(g);
  s.eta = StripField(g);
  return s;
}

StripState SlagState::fields() const {
  StripState s;
  s.V = V;
  s.w = w;
  s.rho = rho;
  s.eta0 = eta0();
  s.t = t;
  return s;
}

SlagState& SlagState::axpy(double a, const SlagState& o) {
  for (std::size_t i = 0; i < V.size(); ++i) V[i].axpy(a, o.V[i]);
  w.axpy(a, o.w);
  rho.axpy(a, o.rho);
  eta.axpy(a, o.eta);
  return *this;
}

double SlagState::max_abs() const {
  double m = std::max({w.max_abs(), rho.max_abs(), eta.max_abs()});
  for (const auto& v : V) m = std::max(m, v.max_abs());
  return m;
}

bool SlagState::finite() const {
  auto ok = [](std::span<const double> v) { return std::ranges::all_of(v, [](double x) { return std::isfinite(x); }); };
  for (const auto& v : V)
    if (!ok(v.values())) return false;
  return ok(w.values()) && ok(rho.values()) && ok(eta.values());
}

double max_difference(const SlagState& a, const SlagState& b) {
  auto diff = [](const StripField& x, const StripField& y) {
    double m = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) m = std::max(m, std::abs(x[k] - y[k]));
    return m;
  };
  double m = std::max({diff(a.w, b.w), diff(a.rho, b.rho), diff(a.eta, b.eta)});
  for (std::size_t i = 0; i < a.V.size(); ++i) m = std::max(m, diff(a.V[i], b.V[i]));
  return m;
}

StripField linear_profile(const SurfaceField& eta0) {
  const StripGrid& g = eta0.grid();
  StripField out(g);
  for (int j = 0; j < g.slabs(); ++j)
    for (std::size_t i = 0; i < g.nh(); ++i) out(j, i) = (1.0 + g.r(j)) * eta0[i];
  return out;
}

MollSystem::MollSystem(const Discretization& D, Bathymetry bathymetry, PhysParams params, MollParams moll,
                       MollOptions opt)
    : D_(&D), b_(std::move(bathymetry)), p_(params), m_(moll), opt_(opt) {
  p_.validate();
  m_.validate();
  require_same_grid(D.grid(), b_.b().grid(), "MollSystem");
}

DiffeoFields MollSystem::diffeo(const SlagState& s) const {
  DiffeoFields df = build_diffeo_general(*D_, b_, s.eta, p_);
  const double mn = df.depth.min();
  if (mn < opt_.admissibility.h_min)
    throw DegenerateDiffeo("vertical stretching " + std::to_string(mn) + " below " +
                           std::to_string(opt_.admissibility.h_min));
  return df;
}

SlagTendency MollSystem::rhs(const SlagState& s) const {
  const Discretization& D = *D_;
  const StripGrid& g = D.grid();
  require_same_grid(g, s.grid(), "MollSystem::rhs");
  const DiffeoFields df = diffeo(s);
  const StripField density = total_density(s.rho, p_);
  if (density.min() <= 0.0)
    throw DegenerateDensity("rho_bar + eps delta rho reaches " + std::to_string(density.min()));

  auto J1 = [&](const StripField& f) { return mollify(D, f, m_.iota1); };
  auto J2 = [&](const StripField& f) { return mollify(D, f, m_.iota2); };
  std::vector<StripField> carrier;
  for (const auto& v : s.V) carrier.push_back(J2(v));
  // J1 [J2 V . grad J1 f], with the inner J1 skipped for smooth given fields.
  auto transport = [&](const StripField& f, bool inner) {
    const StripField f1 = inner ? J1(f) : f;
    StripField a(g);
    for (int i = 0; i < g.d; ++i) a += hadamard(carrier[std::size_t(i)], D.dx(f1, i));
    return J1(a);
  };

  const SurfaceField eta0 = s.eta0();
  const auto grad_eta = D.gradient(mollify(D, eta0, m_.iota2));
  std::optional<SigmaGradient> disp;
  if (m_.iota3 > 0.0) disp = sigma_grad(D, lambda_pow(D, harmonic_extension(D, eta0), 1.0), df);

  std::vector<StripField> fV;
  for (int i = 0; i < g.d; ++i) {
    StripField f = transport(s.V[std::size_t(i)], true);
    f *= -p_.eps;
    const SurfaceField& ge = grad_eta[std::size_t(i)];
    const StripField dq = disp ? J2(disp->horizontal[std::size_t(i)]) : StripField();
    for (int j = 0; j < g.slabs(); ++j)
      for (std::size_t h = 0; h < g.nh(); ++h) {
        f(j, h) -= p_.g * p_.rho_bar / density(j, h) * ge[h];
        if (disp) f(j, h) -= m_.iota3 / density(j, h) * dq(j, h);
      }
    fV.push_back(std::move(f));
  }
  StripField fw = transport(s.w, true);
  fw *= -p_.eps;
  const StripField dqr = disp ? J2(disp->vertical) : StripField();
  for (std::size_t k = 0; k < g.size(); ++k) {
    fw[k] -= p_.g * p_.delta * s.rho[k] / (p_.mu * density[k]);
    if (disp) fw[k] -= m_.iota3 / (p_.mu * density[k]) * dqr[k];
  }

  SlagTendency out{SlagState::rest(g), StripField(g)};
  SlagState& rate = out.rate;

  // Map: eps d_t eta = w - J2 V . grad(eta_bar + eps eta), pinned at the
  // bottom and in flux form at the surface.
  rate.eta = transport(df.eta_bar, false);
  rate.eta *= -1.0;
  rate.eta.axpy(-p_.eps, transport(s.eta, true));
  rate.eta += J2(s.w);
  std::vector<SurfaceField> flux;
  for (int i = 0; i < g.d; ++i) flux.push_back(D.column_integral(hadamard(df.depth, carrier[std::size_t(i)])));
  rate.eta.set_slab(g.nr, -1.0 * D.divergence(flux));
  rate.eta.set_slab(0, SurfaceField(g));

  // The boundary slabs do not follow the pointwise transport of the map, so
  // the momentum there is corrected back to its Eulerian form.
  auto correction = [&](int j, std::size_t h) {
    double kinematic = s.w(j, h);
    for (int i = 0; i < g.d; ++i)
      kinematic -= carrier[std::size_t(i)](j, h) * df.grad_sum[std::size_t(i)](j, h);
    return p_.eps * (rate.eta(j, h) - kinematic) / df.depth(j, h);
  };
  std::vector<StripField> drV;
  for (const auto& v : s.V) drV.push_back(D.dr(v));
  const StripField drw = D.dr(s.w), drrho = D.dr(s.rho);
  std::vector<double> boundary_shift;
  for (int j : {0, g.nr})
    for (std::size_t h = 0; h < g.nh(); ++h) {
      const double c = correction(j, h);
      boundary_shift.push_back(c);
      for (int i = 0; i < g.d; ++i) fV[std::size_t(i)](j, h) += c * drV[std::size_t(i)](j, h);
      fw(j, h) += c * drw(j, h);
    }

  // The pressure enforces incompressibility of the acceleration at fixed
  // physical position, which differs from d_t at fixed (x, r) by the motion
  // of the map.
  std::vector<StripField> aV = fV;
  StripField aw = fw;
  if (p_.eps != 0.0) {
    StripField shift(g);
    for (std::size_t k = 0; k < g.size(); ++k) shift[k] = p_.eps * rate.eta[k] / df.depth[k];
    for (int i = 0; i < g.d; ++i) aV[std::size_t(i)] -= hadamard(shift, drV[std::size_t(i)]);
    aw -= hadamard(shift, drw);
  }
  out.pressure = solve_pressure(D, assemble_from_forcing(df, density, p_, aV, aw), opt_.pressure);

  rate.V = std::move(fV);
  rate.w = std::move(fw);
  subtract_potential_gradient(D, out.pressure, df, density, p_.mu, rate.V, rate.w);
  rate.rho = transport(s.rho, true);
  rate.rho *= -p_.eps;
  std::size_t n = 0;
  for (int j : {0, g.nr})
    for (std::size_t h = 0; h < g.nh(); ++h) rate.rho(j, h) += boundary_shift[n++] * drrho(j, h);

  if (opt_.dealias) {
    for (auto& v : rate.V) v = D.dealias(v);
    rate.w = D.dealias(rate.w);
    rate.rho = D.dealias(rate.rho);
    rate.eta = D.dealias(rate.eta);
  }
  if (!rate.finite()) throw BlowUpSuspected("non-finite tendency at t = " + std::to_string(s.t));
  return out;
}

double MollSystem::max_dt(const SlagState& s) const {
  const StripGrid& g = D_->grid();
  const DiffeoFields df = diffeo(s);
  double vmax = 0.0;
  for (const auto& v : s.V) vmax = std::max(vmax, v.max_abs());
  const double kmax = std::numbers::pi / g.dx();
  const double stiffness = p_.g + m_.iota3 * std::sqrt(1.0 + kmax * kmax);
  return opt_.cfl * g.dx() / (std::sqrt(stiffness * df.depth.max()) + p_.eps * vmax);
}

SlagState MollSystem::step(const SlagState& s, double dt) const {
  const double limit = max_dt(s);
  if (std::abs(dt) > limit)
    throw CFLViolation("time step " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(limit));
  auto stage = [&](const SlagState& base, double a, const SlagState& k) {
    SlagState x = base;
    x.axpy(a, k);
    return x;
  };
  const SlagState k1 = rhs(s).rate;
  const SlagState k2 = rhs(stage(s, dt / 2, k1)).rate;
  const SlagState k3 = rhs(stage(s, dt / 2, k2)).rate;
  const SlagState k4 = rhs(stage(s, dt, k3)).rate;
  SlagState next = s;
  next.axpy(dt / 6, k1).axpy(dt / 3, k2).axpy(dt / 3, k3).axpy(dt / 6, k4);
  next.t = s.t + dt;
  if (!next.finite()) throw BlowUpSuspected("non-finite state at t = " + std::to_string(next.t));
  return next;
}

EnergyReport MollSystem::energy(const SlagState& s, const EnergyOrders& orders) const {
  const DiffeoFields df = diffeo(s);
  return sigmalab::energy(*D_, s.fields(), df, pressure(s), p_, orders, m_.iota3);
}

double MollSystem::divergence_residual(const SlagState& s) const {
  return sigmalab::divergence_residual(*D_, s.V, s.w, diffeo(s), p_.mu);
}

MollRun run_moll(const MollSystem& sys, SlagState initial, double T, double dt, int energy_every,
                 BlowupThresholds thresholds) {
  if (!(T >= 0.0)) throw ConfigError("horizon must be non-negative");
  if (energy_every < 1) throw ConfigError("energy cadence must be positive");
  if (dt <= 0.0) dt = sys.max_dt(initial);
  const int n = T > 0.0 ? int(std::ceil(T / dt - 1e-12)) : 0;
  const double h = n > 0 ? T / n : 0.0;

  MollRun run;
  run.state = std::move(initial);
  run.energy.push_back(sys.energy(run.state));
  const BlowupMonitor monitor(run.energy.front(), thresholds);
  const double t0 = run.state.t;
  for (int k = 1; k <= n; ++k) {
    try {
      run.state = sys.step(run.state, h);
    } catch (const BlowUpSuspected&) {
      run.status = BlowupStatus::NonFinite;
      return run;
    } catch (const DegenerateDiffeo&) {
      run.status = BlowupStatus::DepthDegenerate;
      return run;
    } catch (const DegenerateDensity&) {
      run.status = BlowupStatus::DensityDegenerate;
      return run;
    }
    run.state.t = t0 + k * h;
    run.steps = k;
    if (k % energy_every == 0 || k == n) {
      run.energy.push_back(sys.energy(run.state));
      run.status = monitor.check(run.energy.back());
      if (run.status != BlowupStatus::Continue) return run;
    }
  }
  return run;
}

namespace {

/// Values of f on the `from` heights of each column, resampled at the `to`
/// heights.
StripField resample(const StripField& f, const StripField& from, const StripField& to) {
  const StripGrid& g = f.grid();
  const int n = g.slabs();
  StripField out(g);
  std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < g.nh(); ++i) {
    for (int j = 0; j < n; ++j) {
      x[std::size_t(j)] = from(j, i);
      y[std::size_t(j)] = f(j, i);
    }
    const double lo = x.front(), hi = x.back();
    const double tol = 1e-12 * (1.0 + std::abs(lo) + std::abs(hi));
    boost::math::interpolators::pchip<std::vector<double>> interp{std::vector<double>(x), std::vector<double>(y)};
    for (int j = 0; j < n; ++j) {
      double z = to(j, i);
      if (z < lo - tol || z > hi + tol)
        throw InterpolationOutOfRange("height " + std::to_string(z) + " outside column [" + std::to_string(lo) +
                                      ", " + std::to_string(hi) + "]");
      z = std::clamp(z, lo, hi);
      out(j, i) = z == lo ? y.front() : z == hi ? y.back() : interp(z);
    }
  }
  return out;
}

}  // namespace

StripState slag_to_sigma(const Discretization& D, const Bathymetry& b, const PhysParams& p, const SlagState& s) {
  const StripField from = build_diffeo_general(D, b, s.eta, p).height();
  const StripField to = build_diffeo(D, b, s.eta0(), p).height();
  StripState out;
  for (const auto& v : s.V) out.V.push_back(resample(v, from, to));
  out.w = resample(s.w, from, to);
  out.rho = resample(s.rho, from, to);
  out.eta0 = s.eta0();
  out.t = s.t;
  return out;
}

SlagState sigma_to_slag(const Discretization& D, const Bathymetry& b, const PhysParams& p, const StripState& s,
                        const std::optional<StripField>& eta) {
  SlagState out;
  out.t = s.t;
  if (!eta) {
    out.V = s.V;
    out.w = s.w;
    out.rho = s.rho;
    out.eta = linear_profile(s.eta0);
    return out;
  }
  const StripGrid& g = D.grid();
  const double scale = 1.0 + s.eta0.max_abs();
  for (std::size_t i = 0; i < g.nh(); ++i)
    if (std::abs((*eta)(g.nr, i) - s.eta0[i]) > 1e-12 * scale || std::abs((*eta)(0, i)) > 1e-12 * scale)
      throw InterpolationOutOfRange("eta must vanish at the bottom and match eta0 at the surface");
  const StripField from = build_diffeo(D, b, s.eta0, p).height();
  const StripField to = build_diffeo_general(D, b, *eta, p).height();
  for (const auto& v : s.V) out.V.push_back(resample(v, from, to));
  out.w = resample(s.w, from, to);
  out.rho = resample(s.rho, from, to);
  out.eta = *eta;
  return out;
}

}  // namespace sigmalab
