#include "sigmalab/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace sigmalab {

namespace {

double rms(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return v.empty() ? 0.0 : std::sqrt(s / double(v.size()));
}

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Sigma-coordinate gradient rotated by +90 degrees: (-d_2 f, d_1 f).
std::vector<StripField> perp_grad(const SigmaGradient& sg) {
  return {-1.0 * sg.horizontal[1], sg.horizontal[0]};
}

StripField ratio(const StripField& rho, const StripField& density) {
  StripField q(rho.grid());
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = rho[k] / density[k];
  return q;
}

}  // namespace

void subtract_potential_gradient(const Discretization& D, const StripField& P, const DiffeoFields& diffeo,
                                 const StripField& density, double mu, std::vector<StripField>& V, StripField& w) {
  const StripGrid& g = D.grid();
  const StripField Pr = D.dr(P);
  for (int i = 0; i < g.d; ++i) {
    const StripField Pi = D.dx(P, i);
    const StripField& G = diffeo.grad_sum[std::size_t(i)];
    StripField& Vi = V[std::size_t(i)];
    for (std::size_t k = 0; k < g.size(); ++k) Vi[k] -= (Pi[k] - G[k] * Pr[k] / diffeo.depth[k]) / density[k];
  }
  for (std::size_t k = 0; k < g.size(); ++k) w[k] -= Pr[k] / (mu * diffeo.depth[k] * density[k]);
}

StripField discrete_divergence(const Discretization& D, std::span<const StripField> V, const StripField& w,
                               const DiffeoFields& diffeo) {
  const StripGrid& g = D.grid();
  StripField vertical = w;
  StripField out(g);
  for (int i = 0; i < g.d; ++i) {
    out += D.dx(hadamard(diffeo.depth, V[std::size_t(i)]), i);
    vertical -= hadamard(diffeo.grad_sum[std::size_t(i)], V[std::size_t(i)]);
  }
  out += D.dr(vertical);
  for (std::size_t k = 0; k < g.size(); ++k) out[k] /= diffeo.depth[k];
  return out;
}

double bottom_normal_flux(const Discretization& D, std::span<const StripField> V, const StripField& w,
                          const DiffeoFields& diffeo) {
  double m = 0.0;
  for (std::size_t i = 0; i < D.grid().nh(); ++i) {
    double f = w(0, i);
    for (int dir = 0; dir < D.grid().d; ++dir)
      f -= diffeo.grad_sum[std::size_t(dir)](0, i) * V[std::size_t(dir)](0, i);
    m = std::max(m, std::abs(f));
  }
  return m;
}

double divergence_residual(const Discretization& D, std::span<const StripField> V, const StripField& w,
                           const DiffeoFields& diffeo, double mu) {
  const StripGrid& g = D.grid();
  const StripField div = discrete_divergence(D, V, w, diffeo);
  const auto interior = div.values().subspan(g.nh(), g.nh() * std::size_t(g.nr - 1));
  double unorm = std::sqrt(mu) * rms(w.values());
  for (const auto& v : V) unorm = std::hypot(unorm, rms(v.values()));
  if (unorm == 0.0) return 0.0;
  return (rms(interior) + bottom_normal_flux(D, V, w, diffeo)) / unorm;
}

VorticityField vorticity(const Discretization& D, const StripState& s, const DiffeoFields& diffeo,
                         const PhysParams& p) {
  const double sm = std::sqrt(p.mu);
  VorticityField out;
  if (D.grid().d == 1) {
    StripField om = sigma_dr(D, s.V[0], diffeo);
    om *= 1.0 / sm;
    om.axpy(-sm, sigma_dx(D, s.w, 0, diffeo));
    out.omega_x.push_back(std::move(om));
    return out;
  }
  const auto gw = perp_grad(sigma_grad(D, s.w, diffeo));
  const StripField r1 = sigma_dr(D, s.V[0], diffeo), r2 = sigma_dr(D, s.V[1], diffeo);
  StripField o1 = (-1.0 / sm) * r2, o2 = (1.0 / sm) * r1;
  o1.axpy(-sm, gw[0]);
  o2.axpy(-sm, gw[1]);
  out.omega_x = {std::move(o1), std::move(o2)};
  out.omega_r = sigma_dx(D, s.V[1], 0, diffeo) - sigma_dx(D, s.V[0], 1, diffeo);
  return out;
}

VorticityField vorticity_source(const Discretization& D, const StripState& s, const StripField& P,
                                const DiffeoFields& diffeo, const PhysParams& p) {
  const StripGrid& g = D.grid();
  const StripField q = ratio(s.rho, total_density(s.rho, p));
  StripField Pi = P;
  Pi += StripField::columnar(p.g * p.rho_bar * s.eta0);
  const SigmaGradient gq = sigma_grad(D, q, diffeo);
  const SigmaGradient gPi = sigma_grad(D, Pi, diffeo);
  const StripField Pr = sigma_dr(D, P, diffeo);
  const double c = p.eps / p.rho_bar;

  std::vector<StripField> hq = gq.horizontal, hPi = gPi.horizontal;
  if (g.d == 2) {
    hq = perp_grad(gq);
    hPi = perp_grad(gPi);
  }
  VorticityField out;
  for (int i = 0; i < g.d; ++i) {
    StripField f = p.g * hq[std::size_t(i)];
    f.axpy(c, hadamard(gq.vertical, hPi[std::size_t(i)]));
    f.axpy(-c, hadamard(hq[std::size_t(i)], Pr));
    out.omega_x.push_back(std::move(f));
  }
  if (g.d == 2) {
    StripField f(g);
    for (int i = 0; i < 2; ++i) f += hadamard(hq[std::size_t(i)], gPi.horizontal[std::size_t(i)]);
    f *= std::sqrt(p.mu) * c;
    out.omega_r = std::move(f);
  }
  return out;
}

EulerSystem::EulerSystem(const Discretization& D, Bathymetry bathymetry, PhysParams params, DynamicsOptions opt)
    : D_(&D), b_(std::move(bathymetry)), p_(params), opt_(opt) {
  p_.validate();
  require_same_grid(D.grid(), b_.b().grid(), "EulerSystem");
}

DiffeoFields EulerSystem::diffeo(const StripState& s) const { return build_diffeo(*D_, b_, s.eta0, p_); }

StripField EulerSystem::pressure(const StripState& s) const {
  const DiffeoFields df = diffeo(s);
  return solve_pressure(*D_, assemble_pressure_problem(*D_, s, df, p_), opt_.pressure);
}

Tendency EulerSystem::rhs(const StripState& s) const {
  const Discretization& D = *D_;
  const StripGrid& g = D.grid();
  const DiffeoFields df = diffeo(s);
  const StripField density = total_density(s.rho, p_);
  if (density.min() <= 0.0)
    throw DegenerateDensity("rho_bar + eps delta rho reaches " + std::to_string(density.min()));

  const Forcing F = euler_forcing(D, s, df, p_);
  const EllipticProblem prob = assemble_from_forcing(df, density, p_, F.V, F.w);
  Tendency out{StripState::rest(g), solve_pressure(D, prob, opt_.pressure)};
  StripState& rate = out.rate;
  rate.V = F.V;
  rate.w = F.w;
  subtract_potential_gradient(D, out.pressure, df, density, p_.mu, rate.V, rate.w);

  std::vector<SurfaceField> flux;
  for (int i = 0; i < g.d; ++i) flux.push_back(D.column_integral(hadamard(df.depth, s.V[std::size_t(i)])));
  rate.eta0 = -1.0 * D.divergence(flux);

  rate.rho = sigma_advection(D, s, df, s.rho);
  rate.rho *= -p_.eps;

  if (p_.eps != 0.0) {
    // d_t at fixed r differs from d_t at fixed z by eps (d_t eta / J) d_r.
    StripField shift(g);
    for (int j = 0; j < g.slabs(); ++j)
      for (std::size_t i = 0; i < g.nh(); ++i)
        shift(j, i) = p_.eps * (1.0 + g.r(j)) * rate.eta0[i] / df.depth(j, i);
    for (int i = 0; i < g.d; ++i) rate.V[std::size_t(i)] += hadamard(shift, D.dr(s.V[std::size_t(i)]));
    rate.w += hadamard(shift, D.dr(s.w));
    rate.rho += hadamard(shift, D.dr(s.rho));
  }

  if (opt_.dealias) {
    for (auto& v : rate.V) v = D.dealias(v);
    rate.w = D.dealias(rate.w);
    rate.rho = D.dealias(rate.rho);
    rate.eta0 = D.dealias(rate.eta0);
  }
  if (!rate.finite()) throw BlowUpSuspected("non-finite tendency at t = " + std::to_string(s.t));
  return out;
}

double EulerSystem::max_dt(const StripState& s) const {
  const StripGrid& g = D_->grid();
  const DiffeoFields df = diffeo(s);
  double vmax = 0.0;
  for (const auto& v : s.V) vmax = std::max(vmax, v.max_abs());
  const double horizontal = g.dx() / (std::sqrt(p_.g * df.depth.max()) + p_.eps * vmax);
  const double vertical = g.dr() * df.depth.min() / (p_.eps * s.w.max_abs() + 1e-30);
  return opt_.cfl * std::min(horizontal, vertical);
}

StripState EulerSystem::step(const StripState& s, double dt) const {
  const double limit = max_dt(s);
  if (std::abs(dt) > limit)
    throw CFLViolation("time step " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(limit));
  auto stage = [&](const StripState& base, double a, const StripState& k) {
    StripState x = base;
    x.axpy(a, k);
    return x;
  };
  const StripState k1 = rhs(s).rate;
  const StripState k2 = rhs(stage(s, dt / 2, k1)).rate;
  const StripState k3 = rhs(stage(s, dt / 2, k2)).rate;
  const StripState k4 = rhs(stage(s, dt, k3)).rate;
  StripState next = s;
  next.axpy(dt / 6, k1).axpy(dt / 3, k2).axpy(dt / 3, k3).axpy(dt / 6, k4);
  next.t = s.t + dt;
  if (!next.finite()) throw BlowUpSuspected("non-finite state at t = " + std::to_string(next.t));
  return opt_.project ? project(next) : next;
}

StripState EulerSystem::project(const StripState& s) const {
  const Discretization& D = *D_;
  const StripGrid& g = D.grid();
  const DiffeoFields df = diffeo(s);
  const StripField density = total_density(s.rho, p_);
  EllipticProblem prob = elliptic_coefficients(df, density, p_.mu);
  const double sm = std::sqrt(p_.mu);
  for (std::size_t k = 0; k < g.size(); ++k) {
    double GV = 0.0;
    for (int i = 0; i < g.d; ++i) {
      const double v = s.V[std::size_t(i)][k];
      prob.R[std::size_t(i)][k] = sm * df.depth[k] * v;
      GV += df.grad_sum[std::size_t(i)][k] * v;
    }
    prob.R[std::size_t(g.d)][k] = p_.mu * (s.w[k] - GV);
  }

  double unorm = sm * l2(s.w.values());
  for (const auto& v : s.V) unorm = std::hypot(unorm, l2(v.values()));
  const double bnorm = l2(elliptic_rhs(D, prob));
  const double target = 1e-12 * p_.mu * unorm;
  if (bnorm <= target) return s;

  SolveOptions opt = opt_.pressure;
  opt.form = FluxForm::conservative;
  opt.tol = std::clamp(target / bnorm, 1e-11, opt_.pressure.tol);
  const StripField phi = solve_pressure(D, prob, opt);
  StripState out = s;
  subtract_potential_gradient(D, phi, df, density, p_.mu, out.V, out.w);
  return out;
}

StripField EulerSystem::divergence(const StripState& s) const {
  return discrete_divergence(*D_, s.V, s.w, diffeo(s));
}

double EulerSystem::bottom_flux(const StripState& s) const { return bottom_normal_flux(*D_, s.V, s.w, diffeo(s)); }

double EulerSystem::divergence_residual(const StripState& s) const {
  return sigmalab::divergence_residual(*D_, s.V, s.w, diffeo(s), p_.mu);
}

double EulerSystem::fluid_volume(const StripState& s) const {
  SurfaceField h(D_->grid(), 1.0);
  h.axpy(-p_.beta, b_.b());
  h.axpy(p_.eps, s.eta0);
  return surface_integral(h);
}

StripState init_from_streamfunction(const EulerSystem& sys, const std::function<double(double, double)>& psi,
                                    const StripField& rho0, const SurfaceField& eta0) {
  const Discretization& D = sys.disc();
  const StripGrid& g = D.grid();
  if (g.d != 1) throw InvalidStreamfunction("streamfunction initialization needs d = 1");
  StripState s = StripState::rest(g);
  s.eta0 = eta0;
  s.rho = rho0;
  const DiffeoFields df = sys.diffeo(s);
  const StripField z = df.height();
  StripField Psi(g);
  for (int j = 0; j < g.slabs(); ++j)
    for (std::size_t i = 0; i < g.nh(); ++i) Psi(j, i) = psi(g.x(i, 0), z(j, i));
  const auto bottom = Psi.slab(0);
  const auto [lo, hi] = std::ranges::minmax_element(bottom);
  if (*hi - *lo > 1e-10 * (1.0 + Psi.max_abs()))
    throw InvalidStreamfunction("streamfunction varies by " + std::to_string(*hi - *lo) + " along the bottom");
  s.V[0] = sigma_dr(D, Psi, df);
  s.w = -1.0 * sigma_dx(D, Psi, 0, df);
  return s;
}

}  // namespace sigmalab
