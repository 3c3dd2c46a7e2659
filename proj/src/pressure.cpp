#include "sigmalab/pressure.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>

#include "sigmalab/krylov.hpp"

namespace sigmalab {

double EllipticProblem::min_eigenvalue() const {
  double m = INFINITY;
  for (std::size_t k = 0; k < a_hh.size(); ++k) {
    const double a = a_hh[k], e = a_rr[k];
    double c2 = 0.0;
    for (const auto& c : a_hr) c2 += c[k] * c[k];
    const double lo = 0.5 * ((a + e) - std::sqrt((a - e) * (a - e) + 4.0 * c2));
    m = std::min(m, lo);
  }
  return m;
}

void EllipticProblem::check_spd() const {
  const double m = min_eigenvalue();
  if (!(m > 0.0)) throw IllConditioned("pressure matrix not positive definite (min eigenvalue " + std::to_string(m) + ")");
}

EllipticProblem elliptic_coefficients(const DiffeoFields& diffeo, const StripField& density, double mu) {
  const StripGrid& g = density.grid();
  require_same_grid(g, diffeo.depth.grid(), "elliptic_coefficients");
  EllipticProblem prob;
  prob.mu = mu;
  prob.a_hh = StripField(g);
  prob.a_rr = StripField(g);
  prob.a_hr.assign(std::size_t(g.d), StripField(g));
  prob.R.assign(std::size_t(g.d) + 1, StripField(g));
  const double sm = std::sqrt(mu);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double kinv = 1.0 / density[k], J = diffeo.depth[k];
    double G2 = 0.0;
    for (int i = 0; i < g.d; ++i) {
      const double Gi = diffeo.grad_sum[std::size_t(i)][k];
      G2 += Gi * Gi;
      prob.a_hr[std::size_t(i)][k] = -sm * kinv * Gi;
    }
    prob.a_hh[k] = kinv * J;
    prob.a_rr[k] = kinv * (1.0 + mu * G2) / J;
  }
  return prob;
}

EllipticProblem assemble_from_forcing(const DiffeoFields& diffeo, const StripField& density,
                                      const PhysParams& p, const std::vector<StripField>& F_V,
                                      const StripField& F_w) {
  EllipticProblem prob = elliptic_coefficients(diffeo, density, p.mu);
  const StripGrid& g = density.grid();
  const double sm = std::sqrt(p.mu);
  for (std::size_t k = 0; k < g.size(); ++k) {
    double GF = 0.0;
    for (int i = 0; i < g.d; ++i) {
      const double f = F_V[std::size_t(i)][k];
      GF += diffeo.grad_sum[std::size_t(i)][k] * f;
      prob.R[std::size_t(i)][k] = sm * diffeo.depth[k] * f;
    }
    prob.R[std::size_t(g.d)][k] = p.mu * (F_w[k] - GF);
  }
  return prob;
}

/// Written as V.grad f + ((w - G.V)/J) d_r f.
StripField sigma_advection(const Discretization& D, const StripState& s, const DiffeoFields& diffeo,
                           const StripField& f) {
  const int d = D.grid().d;
  const StripField fr = D.dr(f);
  StripField out(f.grid());
  for (int i = 0; i < d; ++i) out += hadamard(s.V[std::size_t(i)], D.dx(f, i));
  for (std::size_t k = 0; k < out.size(); ++k) {
    double vert = s.w[k];
    for (int i = 0; i < d; ++i) vert -= diffeo.grad_sum[std::size_t(i)][k] * s.V[std::size_t(i)][k];
    out[k] += vert / diffeo.depth[k] * fr[k];
  }
  return out;
}

Forcing euler_forcing(const Discretization& D, const StripState& s, const DiffeoFields& diffeo,
                      const PhysParams& p) {
  const StripGrid& g = D.grid();
  const StripField dens = total_density(s.rho, p);
  Forcing F;
  const auto grad_eta = D.gradient(s.eta0);
  for (int i = 0; i < g.d; ++i) {
    StripField fv = sigma_advection(D, s, diffeo, s.V[std::size_t(i)]);
    fv *= -p.eps;
    for (int j = 0; j < g.slabs(); ++j)
      for (std::size_t h = 0; h < g.nh(); ++h)
        fv(j, h) -= p.g * p.rho_bar / dens(j, h) * grad_eta[std::size_t(i)][h];
    F.V.push_back(std::move(fv));
  }
  F.w = sigma_advection(D, s, diffeo, s.w);
  F.w *= -p.eps;
  for (std::size_t k = 0; k < g.size(); ++k) F.w[k] -= p.g * p.delta * s.rho[k] / (p.mu * dens[k]);
  return F;
}

EllipticProblem assemble_pressure_problem(const Discretization& D, const StripState& s,
                                          const DiffeoFields& diffeo, const PhysParams& p) {
  const StripField dens = total_density(s.rho, p);
  if (dens.min() <= 0.0) throw DegenerateDensity("rho_bar + eps delta rho reaches " + std::to_string(dens.min()));
  const Forcing F = euler_forcing(D, s, diffeo, p);
  return assemble_from_forcing(diffeo, dens, p, F.V, F.w);
}

void apply_elliptic(const Discretization& D, const EllipticProblem& prob, FluxForm form,
                    std::span<const double> Pv, std::span<double> outv) {
  const StripGrid& g = D.grid();
  const int d = g.d, top = g.nr;
  const double sm = std::sqrt(prob.mu);
  StripField P(g);
  std::ranges::copy(Pv, P.values().begin());
  const StripField Pr = D.dr(P);
  std::vector<StripField> Ph = D.gradient(P);
  for (auto& f : Ph) f *= sm;

  StripField out(g);
  for (int i = 0; i < d; ++i) {
    StripField flux = hadamard(prob.a_hh, Ph[std::size_t(i)]);
    flux += hadamard(prob.a_hr[std::size_t(i)], Pr);
    out.axpy(sm, D.dx(flux, i));
  }
  StripField fr = hadamard(prob.a_rr, Pr);
  for (int i = 0; i < d; ++i) fr += hadamard(prob.a_hr[std::size_t(i)], Ph[std::size_t(i)]);
  if (form == FluxForm::conservative) {
    out += D.dr(fr);
  } else {
    StripField cross(g);
    for (int i = 0; i < d; ++i) cross += hadamard(prob.a_hr[std::size_t(i)], Ph[std::size_t(i)]);
    out += D.dr(cross);
    out += hadamard(prob.a_rr, D.drr(P));
    out += hadamard(D.dr(prob.a_rr), Pr);
  }
  std::ranges::copy(fr.slab(0), out.slab(0).begin());
  std::ranges::copy(P.slab(top), out.slab(top).begin());
  std::ranges::copy(out.values(), outv.begin());
}

std::vector<double> elliptic_rhs(const Discretization& D, const EllipticProblem& prob) {
  const StripGrid& g = D.grid();
  const double sm = std::sqrt(prob.mu);
  StripField rhs = D.dr(prob.R[std::size_t(g.d)]);
  for (int i = 0; i < g.d; ++i) rhs.axpy(sm, D.dx(prob.R[std::size_t(i)], i));
  std::ranges::copy(prob.R[std::size_t(g.d)].slab(0), rhs.slab(0).begin());
  for (double& v : rhs.slab(g.nr)) v = 0.0;
  return {rhs.values().begin(), rhs.values().end()};
}

namespace {

/// Exact inverse, mode by mode, of the operator with horizontally averaged
/// a_hh, a_rr and the cross terms dropped.
class ModePreconditioner {
 public:
  ModePreconditioner(const Discretization& D, const EllipticProblem& prob, FluxForm form) : D_(D) {
    const StripGrid& g = D.grid();
    const int n = g.nr + 1;
    std::vector<double> ahh(std::size_t(n), 0.0), arr(std::size_t(n), 0.0);
    for (int j = 0; j < n; ++j) {
      for (double v : prob.a_hh.slab(j)) ahh[std::size_t(j)] += v;
      for (double v : prob.a_rr.slab(j)) arr[std::size_t(j)] += v;
      ahh[std::size_t(j)] /= double(g.nh());
      arr[std::size_t(j)] /= double(g.nh());
    }
    const VerticalStencil& d1 = D.vertical(1);
    const VerticalStencil& d2 = D.vertical(2);
    std::vector<double> darr(std::size_t(n), 0.0);
    for (int j = 0; j < n; ++j) {
      const auto w = d1.weights(j);
      for (std::size_t q = 0; q < w.size(); ++q) darr[std::size_t(j)] += w[q] * arr[std::size_t(d1.start(j)) + q];
    }

    std::map<long, std::size_t> slot;
    key_.resize(D.modes());
    for (std::size_t m = 0; m < D.modes(); ++m) {
      long key = 0;
      for (int dir = 0; dir < g.d; ++dir) {
        const int k = D.mode_index(m, dir);
        if (2 * std::abs(k) != g.nx) key += long(k) * k;
      }
      auto [it, fresh] = slot.try_emplace(key, lus_.size());
      key_[m] = it->second;
      if (!fresh) continue;
      const double kappa2 = std::pow(2.0 * M_PI / g.L, 2) * double(key);
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
      for (int j = 1; j < n - 1; ++j) {
        M(j, j) -= prob.mu * kappa2 * ahh[std::size_t(j)];
        if (form == FluxForm::compact) {
          const auto w2 = d2.weights(j);
          for (std::size_t q = 0; q < w2.size(); ++q) M(j, d2.start(j) + int(q)) += arr[std::size_t(j)] * w2[q];
          const auto w1 = d1.weights(j);
          for (std::size_t q = 0; q < w1.size(); ++q) M(j, d1.start(j) + int(q)) += darr[std::size_t(j)] * w1[q];
        } else {
          const auto w1 = d1.weights(j);
          for (std::size_t q = 0; q < w1.size(); ++q) {
            const int pnode = d1.start(j) + int(q);
            const double c = w1[q] * arr[std::size_t(pnode)];
            const auto wp = d1.weights(pnode);
            for (std::size_t q2 = 0; q2 < wp.size(); ++q2) M(j, d1.start(pnode) + int(q2)) += c * wp[q2];
          }
        }
      }
      const auto w0 = d1.weights(0);
      for (std::size_t q = 0; q < w0.size(); ++q) M(0, d1.start(0) + int(q)) = arr[0] * w0[q];
      M(n - 1, n - 1) = 1.0;
      lus_.emplace_back(M);
    }
  }

  void apply(std::span<const double> in, std::span<double> out) const {
    const StripGrid& g = D_.grid();
    const int n = g.nr + 1;
    const std::size_t nm = D_.modes(), nh = g.nh();
    std::vector<cplx> spec(nm * std::size_t(n));
    for (int j = 0; j < n; ++j)
      D_.forward(in.subspan(std::size_t(j) * nh, nh), std::span<cplx>(spec.data() + std::size_t(j) * nm, nm));
    Eigen::MatrixXd rhs(n, 2);
    for (std::size_t m = 0; m < nm; ++m) {
      for (int j = 0; j < n; ++j) {
        rhs(j, 0) = spec[std::size_t(j) * nm + m].real();
        rhs(j, 1) = spec[std::size_t(j) * nm + m].imag();
      }
      const Eigen::MatrixXd sol = lus_[key_[m]].solve(rhs);
      for (int j = 0; j < n; ++j) spec[std::size_t(j) * nm + m] = cplx(sol(j, 0), sol(j, 1));
    }
    for (int j = 0; j < n; ++j)
      D_.inverse(std::span<const cplx>(spec.data() + std::size_t(j) * nm, nm), out.subspan(std::size_t(j) * nh, nh));
  }

 private:
  const Discretization& D_;
  std::vector<std::size_t> key_;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lus_;
};

}  // namespace

StripField solve_pressure(const Discretization& D, const EllipticProblem& prob, const SolveOptions& opt,
                          SolveStats* stats) {
  const StripGrid& g = D.grid();
  require_same_grid(g, prob.grid(), "solve_pressure");
  prob.check_spd();
  const std::vector<double> b = elliptic_rhs(D, prob);
  StripField P(g);
  const int cap = opt.max_iter > 0 ? opt.max_iter
                                   : int(std::ceil(10.0 * std::sqrt(double(g.nh()) * double(g.nr))));
  KrylovResult kr;
  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  if (bnorm > 0.0) {
    const ModePreconditioner pc(D, prob, opt.form);
    const LinearMap A = [&](std::span<const double> x, std::span<double> y) {
      apply_elliptic(D, prob, opt.form, x, y);
    };
    const LinearMap M = [&](std::span<const double> x, std::span<double> y) { pc.apply(x, y); };
    kr = gmres(A, M, b, P.values(), opt.tol, cap, opt.restart);
    if (!kr.converged)
      throw NoConvergence("pressure solve stopped at relative residual " + std::to_string(kr.rel_residual) +
                          " after " + std::to_string(kr.iterations) + " iterations");
  }
  for (double& v : P.slab(g.nr)) v = 0.0;
  if (stats) {
    stats->iterations = kr.iterations;
    stats->rel_residual = kr.rel_residual;
    stats->history = std::move(kr.history);
  }
  return P;
}

TaylorCoefficient taylor_coefficient(const Discretization& D, const StripField& P, const DiffeoFields& diffeo,
                                     const PhysParams& p) {
  const int top = D.grid().nr;
  const SurfaceField pr = D.vertical(1).apply_at(P, top);
  TaylorCoefficient tc{SurfaceField(D.grid(), p.g * p.rho_bar)};
  for (std::size_t i = 0; i < pr.size(); ++i) tc.a[i] -= p.eps / diffeo.depth(top, i) * pr[i];
  return tc;
}

SurfaceField taylor_time_derivative(const std::vector<TaylorCoefficient>& history, double dt) {
  const std::size_t n = history.size();
  if (n < 2) throw InsufficientHistory("need at least two Taylor coefficients");
  if (!(dt > 0.0)) throw InsufficientHistory("time step must be positive");
  const SurfaceField& a0 = history[n - 1].a;
  const SurfaceField& a1 = history[n - 2].a;
  SurfaceField out(a0.grid());
  if (n == 2) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a0[i] - a1[i]) / dt;
  } else {
    const SurfaceField& a2 = history[n - 3].a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (3 * a0[i] - 4 * a1[i] + a2[i]) / (2 * dt);
  }
  return out;
}

}  // namespace sigmalab
