#include "sigmalab/shallow_water.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sigmalab {

namespace {

double strip_norm(const Discretization& D, const StripField& f, int s) {
  return sobolev_norm(D, f, s, std::clamp(s, 0, 4));
}

}  // namespace

SWState SWState::rest(const StripGrid& g) {
  SWState s;
  s.V.assign(std::size_t(g.d), SurfaceField(g));
  s.eta = SurfaceField(g);
  return s;
}

SWState& SWState::axpy(double a, const SWState& o) {
  for (std::size_t i = 0; i < V.size(); ++i) V[i].axpy(a, o.V[i]);
  eta.axpy(a, o.eta);
  return *this;
}

double SWState::max_abs() const {
  double m = eta.max_abs();
  for (const auto& v : V) m = std::max(m, v.max_abs());
  return m;
}

bool SWState::finite() const {
  auto ok = [](std::span<const double> v) { return std::ranges::all_of(v, [](double x) { return std::isfinite(x); }); };
  return ok(eta.values()) && std::ranges::all_of(V, [&](const SurfaceField& v) { return ok(v.values()); });
}

SWSystem::SWSystem(const Discretization& D, Bathymetry bathymetry, PhysParams params, SWOptions opt)
    : D_(&D), b_(std::move(bathymetry)), p_(params), opt_(opt) {
  p_.validate();
  require_same_grid(D.grid(), b_.b().grid(), "SWSystem");
}

SurfaceField SWSystem::depth(const SWState& s) const {
  SurfaceField h(D_->grid(), 1.0);
  h.axpy(-p_.beta, b_.b());
  h.axpy(p_.eps, s.eta);
  return h;
}

SWState SWSystem::rhs(const SWState& s) const {
  const Discretization& D = *D_;
  const StripGrid& g = D.grid();
  require_same_grid(g, s.grid(), "SWSystem::rhs");
  const SurfaceField H = depth(s);
  if (H.min() < opt_.h_min) throw DegenerateDepth("shallow-water depth reaches " + std::to_string(H.min()));

  SWState rate = SWState::rest(g);
  std::vector<SurfaceField> flux;
  for (const auto& v : s.V) flux.push_back(hadamard(H, v));
  rate.eta = -1.0 * D.divergence(flux);

  const auto grad_eta = D.gradient(s.eta);
  for (int i = 0; i < g.d; ++i) {
    SurfaceField& r = rate.V[std::size_t(i)];
    for (int j = 0; j < g.d; ++j) r.axpy(-p_.eps, hadamard(s.V[std::size_t(j)], D.dx(s.V[std::size_t(i)], j)));
    r.axpy(-p_.g, grad_eta[std::size_t(i)]);
  }
  if (opt_.dealias) {
    rate.eta = D.dealias(rate.eta);
    for (auto& v : rate.V) v = D.dealias(v);
  }
  if (!rate.finite()) throw BlowUpSuspected("non-finite shallow-water tendency at t = " + std::to_string(s.t));
  return rate;
}

double SWSystem::max_dt(const SWState& s) const {
  double vmax = 0.0;
  for (const auto& v : s.V) vmax = std::max(vmax, v.max_abs());
  const double hmax = std::max(depth(s).max(), 0.0);
  return opt_.cfl * D_->grid().dx() / (std::sqrt(p_.g * hmax) + p_.eps * vmax);
}

SWState SWSystem::step(const SWState& s, double dt) const {
  const double limit = max_dt(s);
  if (std::abs(dt) > limit)
    throw CFLViolation("time step " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(limit));
  auto stage = [&](double a, const SWState& k) {
    SWState x = s;
    x.axpy(a, k);
    return x;
  };
  const SWState k1 = rhs(s);
  const SWState k2 = rhs(stage(dt / 2, k1));
  const SWState k3 = rhs(stage(dt / 2, k2));
  const SWState k4 = rhs(stage(dt, k3));
  SWState next = s;
  next.axpy(dt / 6, k1).axpy(dt / 3, k2).axpy(dt / 3, k3).axpy(dt / 6, k4);
  next.t = s.t + dt;
  if (!next.finite()) throw BlowUpSuspected("non-finite shallow-water state at t = " + std::to_string(next.t));
  return next;
}

double SWSystem::mass(const SWState& s) const { return surface_integral(depth(s)); }

double SWSystem::energy(const SWState& s) const {
  SurfaceField density(D_->grid());
  for (const auto& v : s.V) density += hadamard(v, v);
  density = hadamard(depth(s), density);
  density.axpy(p_.g, hadamard(s.eta, s.eta));
  return 0.5 * surface_integral(density);
}

double SWSystem::regularity(const SWState& s, double order) const {
  double n = sobolev_norm(*D_, s.eta, order);
  for (const auto& v : s.V) n = std::hypot(n, sobolev_norm(*D_, v, order));
  return n;
}

StripState lift_sw(const Discretization& D, const SWState& sw, const Bathymetry& b, const PhysParams& p) {
  const StripGrid& g = D.grid();
  require_same_grid(g, sw.grid(), "lift_sw");
  StripState s = StripState::rest(g);
  s.eta0 = sw.eta;
  SurfaceField bottom(g), stretch(g, 1.0);
  for (int i = 0; i < g.d; ++i) {
    s.V[std::size_t(i)] = StripField::columnar(sw.V[std::size_t(i)]);
    bottom.axpy(p.beta, hadamard(sw.V[std::size_t(i)], b.grad()[std::size_t(i)]));
  }
  stretch.axpy(-p.beta, b.b());
  stretch.axpy(p.eps, sw.eta);
  const SurfaceField column = hadamard(stretch, D.divergence(std::span<const SurfaceField>(sw.V)));
  for (int j = 0; j < g.slabs(); ++j)
    for (std::size_t i = 0; i < g.nh(); ++i) s.w(j, i) = bottom[i] - (g.r(j) + 1.0) * column[i];
  s.t = sw.t;
  return s;
}

double ComparisonReport::closeness() const { return std::hypot(err_V, err_w) + err_eta + rho_norm + shear; }

bool ComparisonReport::finite() const {
  return std::isfinite(err_V) && std::isfinite(err_eta) && std::isfinite(err_w) && std::isfinite(shear) &&
         std::isfinite(rho_norm);
}

ComparisonReport compare(const Discretization& D, const StripState& euler, const SWState& sw, const Bathymetry& b,
                         const PhysParams& p, int s) {
  require_same_grid(euler.grid(), sw.grid(), "compare");
  require_same_grid(D.grid(), euler.grid(), "compare");
  if (s < 1 || s > 4) throw ConfigError("comparison order must lie in [1, 4]");
  const StripState lift = lift_sw(D, sw, b, p);
  const double sm = std::sqrt(p.mu);
  ComparisonReport r;
  r.t = euler.t;
  double shear = 0.0;
  for (std::size_t i = 0; i < euler.V.size(); ++i) {
    r.err_V = std::hypot(r.err_V, strip_norm(D, euler.V[i] - lift.V[i], s));
    shear = std::hypot(shear, strip_norm(D, D.dr(euler.V[i]), s - 1));
  }
  r.err_eta = sobolev_norm(D, euler.eta0 - sw.eta, s);
  r.err_w = sm * strip_norm(D, euler.w - lift.w, s);
  r.shear = shear / sm;
  r.rho_norm = sm * strip_norm(D, euler.rho, s);
  return r;
}

PreparedData well_prepared_init(const EulerSystem& sys, const SWState& sw, double shear_amp, double rho_amp, int s) {
  const Discretization& D = sys.disc();
  const StripGrid& g = D.grid();
  const PhysParams& p = sys.params();
  if (p.delta > p.mu) throw ConfigError("well-prepared data need delta <= mu");
  if (shear_amp < 0.0 || rho_amp < 0.0) throw ConfigError("perturbation amplitudes must be non-negative");
  if (shear_amp > 0.0 && g.d != 1) throw ConfigError("the shear perturbation is defined for d = 1");

  PreparedData out;
  out.state = lift_sw(D, sw, sys.bathymetry(), p);
  const double sm = std::sqrt(p.mu);
  const double k = 2.0 * std::numbers::pi / g.L;

  if (shear_amp > 0.0) {
    const SurfaceField& b = sys.bathymetry().b();
    auto psi = [&](double x, double z) {
      const auto i = std::size_t(std::lround(x / g.dx())) % g.nh();
      const double above = z + 1.0 - p.beta * b[i];
      return 0.5 * std::cos(k * x) * above * above;
    };
    const StripState unit = init_from_streamfunction(sys, psi, StripField(g), sw.eta);
    const double unit_shear = strip_norm(D, D.dr(unit.V[0]), s - 1) / sm;
    const double a = shear_amp * sm / unit_shear;
    out.state.V[0].axpy(a, unit.V[0]);
    out.state.w.axpy(a, unit.w);
  }
  if (rho_amp > 0.0) {
    StripField rho(g);
    for (int j = 0; j < g.slabs(); ++j)
      for (std::size_t i = 0; i < g.nh(); ++i) rho(j, i) = std::sin(k * g.x(i, 0)) * std::pow(1.0 + g.r(j), 2);
    out.state.rho = (rho_amp / strip_norm(D, rho, s)) * rho;
  }
  if (shear_amp > 0.0 || rho_amp > 0.0) out.state = sys.project(out.state);

  out.report = compare(D, out.state, sw, sys.bathymetry(), p, s);
  out.closeness = out.report.closeness();
  if (!(out.closeness <= sm))
    throw PreparationFailed("closeness " + std::to_string(out.closeness) + " exceeds sqrt(mu) = " +
                            std::to_string(sm));
  return out;
}

}  // namespace sigmalab
