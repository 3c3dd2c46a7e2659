#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "sigmalab/pressure.hpp"

using namespace testing;

namespace {

struct Setup {
  StripGrid g;
  Discretization D;
  Bathymetry b;
  Setup(StripGrid grid, double bump) : g(grid), D(grid), b(Bathymetry::cosine_bump(D, bump)) {}
};

double rel_l2(const Discretization& D, const StripField& a, const StripField& b) {
  return sobolev_norm(D, a - b, 0, 0) / sobolev_norm(D, b, 0, 0);
}

}  // namespace

TEST_CASE("assembly at rest and for a uniform density anomaly") {
  Setup s(StripGrid{1, 32, 2 * pi, 16}, 0.0);
  PhysParams p;
  p.rho_bar = 2.0;
  p.delta = 0.3;
  p.eps = 0.5;
  StripState st = StripState::rest(s.g);
  auto diffeo = build_diffeo(s.D, s.b, st.eta0, p);
  auto prob = assemble_pressure_problem(s.D, st, diffeo, p);
  CHECK(max_diff(prob.a_hh, StripField(s.g, 0.5)) < 1e-15);
  CHECK(max_diff(prob.a_rr, StripField(s.g, 0.5)) < 1e-15);
  CHECK(prob.a_hr[0].max_abs() == 0.0);
  for (const auto& r : prob.R) CHECK(r.max_abs() == 0.0);
  CHECK(solve_pressure(s.D, prob).max_abs() == 0.0);

  const double rho0 = 0.8;
  st.rho = StripField(s.g, rho0);
  prob = assemble_pressure_problem(s.D, st, diffeo, p);
  const double dens = p.rho_bar + p.eps * p.delta * rho0;
  CHECK(prob.R[0].max_abs() == 0.0);
  CHECK(max_diff(prob.R[1], StripField(s.g, -p.g * p.delta * rho0 / dens)) < 1e-15);

  // hydrostatic column: P = -g delta rho0 r
  const auto P = solve_pressure(s.D, prob);
  const auto exact = strip(s.g, [&](double, double r) { return -p.g * p.delta * rho0 * r; });
  CHECK(max_diff(P, exact) < 1e-11);
  const auto a = taylor_coefficient(s.D, P, diffeo, p);
  CHECK(a.min() == doctest::Approx(p.g * p.rho_bar + p.eps * p.g * p.delta * rho0).epsilon(1e-10));
}

TEST_CASE("two-point problem with constant vertical data") {
  Setup s(StripGrid{1, 16, 2 * pi, 16}, 0.0);
  PhysParams p;
  p.rho_bar = 1.5;
  const auto diffeo = build_diffeo(s.D, s.b, SurfaceField(s.g), p);
  auto prob = elliptic_coefficients(diffeo, StripField(s.g, p.rho_bar), p.mu);
  const double c = 0.7;
  prob.R[1] = StripField(s.g, c);
  const auto P = solve_pressure(s.D, prob);
  CHECK(max_diff(P, strip(s.g, [&](double, double r) { return p.rho_bar * c * r; })) < 1e-12);
  CHECK(trace(P, Boundary::surface).max_abs() == 0.0);
}

TEST_CASE("assembled coefficients and sources match a term-by-term oracle") {
  Setup s(StripGrid{1, 32, 2 * pi, 16}, 0.4);
  PhysParams p;
  p.eps = 0.3;
  p.beta = 0.5;
  p.delta = 0.2;
  p.mu = 0.3;
  p.g = 1.3;
  p.rho_bar = 1.1;
  StripState st = StripState::rest(s.g);
  auto eta = [](double x) { return 0.4 * std::sin(x); };
  auto deta = [](double x) { return 0.4 * std::cos(x); };
  auto vf = [](double x, double r) { return std::cos(x) * (r + 1) * (r + 1); };
  auto vx = [](double x, double r) { return -std::sin(x) * (r + 1) * (r + 1); };
  auto vr = [](double x, double r) { return 2 * std::cos(x) * (r + 1); };
  auto wf = [](double x, double r) { return std::sin(2 * x) * r; };
  auto wx = [](double x, double r) { return 2 * std::cos(2 * x) * r; };
  auto wr = [](double x, double) { return std::sin(2 * x); };
  auto rf = [](double x, double r) { return std::cos(3 * x) * r * r; };
  st.eta0 = surface(s.g, eta);
  st.V[0] = strip(s.g, vf);
  st.w = strip(s.g, wf);
  st.rho = strip(s.g, rf);
  const auto diffeo = build_diffeo(s.D, s.b, st.eta0, p);
  const auto prob = assemble_pressure_problem(s.D, st, diffeo, p);

  double worst = 0.0;
  for (int j = 0; j < s.g.slabs(); ++j)
    for (std::size_t i = 0; i < s.g.nh(); ++i) {
      const double x = s.g.x(i, 0), r = s.g.r(j);
      const double b = 0.4 * std::cos(x), db = -0.4 * std::sin(x);
      const double J = 1 - p.beta * b + p.eps * eta(x);
      const double G = -r * p.beta * db + p.eps * (1 + r) * deta(x);
      const double rho = p.rho_bar + p.eps * p.delta * rf(x, r);
      const double sm = std::sqrt(p.mu);
      const double ahh = J / rho, ahr = -sm * G / rho, arr = (1 + p.mu * G * G) / (J * rho);
      const double V = vf(x, r), w = wf(x, r);
      const double omega = (w - G * V) / J;
      const double FV = -p.eps * (V * vx(x, r) + omega * vr(x, r)) - p.g * p.rho_bar / rho * deta(x);
      const double Fw = -p.eps * (V * wx(x, r) + omega * wr(x, r)) - p.g * p.delta * rf(x, r) / (p.mu * rho);
      const double Rh = sm * J * FV, Rr = p.mu * (Fw - G * FV);
      worst = std::max({worst, std::abs(prob.a_hh(j, i) - ahh), std::abs(prob.a_hr[0](j, i) - ahr),
                        std::abs(prob.a_rr(j, i) - arr), std::abs(prob.R[0](j, i) - Rh),
                        std::abs(prob.R[1](j, i) - Rr)});
    }
  CHECK(worst < 1e-12);
}

namespace {

struct MmsResult {
  double error;
  int iterations;
};

MmsResult manufactured(int nr, double mu, int d = 1, int nx = 32, FluxForm form = FluxForm::compact) {
  const StripGrid g{d, nx, 2 * pi, nr};
  Discretization D(g);
  PhysParams p;
  p.eps = 0.4;
  p.beta = 0.6;
  p.delta = 0.5;
  p.mu = mu;
  const auto b = Bathymetry::cosine_bump(D, 0.5);
  SurfaceField eta0(g);
  for (std::size_t i = 0; i < g.nh(); ++i) eta0[i] = 0.5 * std::sin(g.x(i, 0) + 0.4);
  const auto diffeo = build_diffeo(D, b, eta0, p);
  StripField rho(g);
  for (int j = 0; j < g.slabs(); ++j)
    for (std::size_t i = 0; i < g.nh(); ++i) rho(j, i) = std::cos(g.x(i, 0)) * g.r(j);
  auto prob = elliptic_coefficients(diffeo, total_density(rho, p), mu);
  StripField Pstar(g), Px(g), Py(g), Pr(g);
  for (int j = 0; j < g.slabs(); ++j)
    for (std::size_t i = 0; i < g.nh(); ++i) {
      const double x = g.x(i, 0), y = d == 2 ? g.x(i, 1) : 0.0, r = g.r(j);
      const double ys = d == 2 ? std::cos(y) : 1.0;
      Pstar(j, i) = std::sin(x) * std::sin(pi * r / 2) * ys;
      Px(j, i) = std::cos(x) * std::sin(pi * r / 2) * ys;
      Py(j, i) = d == 2 ? -std::sin(x) * std::sin(pi * r / 2) * std::sin(y) : 0.0;
      Pr(j, i) = std::sin(x) * pi / 2 * std::cos(pi * r / 2) * ys;
    }
  const double sm = std::sqrt(mu);
  std::vector<StripField> gh{Px, Py};
  for (std::size_t k = 0; k < g.size(); ++k) {
    double rr = prob.a_rr[k] * Pr[k];
    for (int i = 0; i < d; ++i) {
      prob.R[std::size_t(i)][k] = prob.a_hh[k] * sm * gh[std::size_t(i)][k] + prob.a_hr[std::size_t(i)][k] * Pr[k];
      rr += prob.a_hr[std::size_t(i)][k] * sm * gh[std::size_t(i)][k];
    }
    prob.R[std::size_t(d)][k] = rr;
  }
  SolveStats stats;
  SolveOptions opt;
  opt.tol = nr <= 64 ? 1e-12 : 1e-10;
  opt.form = form;
  const auto P = solve_pressure(D, prob, opt, &stats);
  return {rel_l2(D, P, Pstar), stats.iterations};
}

}  // namespace

TEST_CASE("manufactured solution converges at fourth order, uniformly in mu") {
  std::vector<int> iterations;
  for (double mu : {1.0, 1e-2, 1e-4}) {
    std::vector<double> errors, fine;
    for (int nr : {16, 32, 64}) {
      const auto m = manufactured(nr, mu);
      errors.push_back(m.error);
      iterations.push_back(m.iterations);
    }
    for (int nr : {64, 128, 256}) fine.push_back(manufactured(nr, mu).error);
    MESSAGE("mu=" << mu << " errors " << errors[0] << " " << errors[1] << " " << errors[2] << " then " << fine[1]
                  << " " << fine[2]);
    CHECK(fitted_order(errors) > 3.5);
    CHECK(order(fine[1], fine[2]) > 3.5);
  }
  const auto [lo, hi] = std::minmax_element(iterations.begin(), iterations.end());
  CHECK(*hi < 2 * *lo);
}

TEST_CASE("conservative flux form is also fourth order") {
  std::vector<double> errors;
  for (int nr : {16, 32, 64, 128}) errors.push_back(manufactured(nr, 1e-2, 1, 32, FluxForm::conservative).error);
  MESSAGE("conservative errors " << errors[0] << " " << errors[1] << " " << errors[2] << " " << errors[3]);
  CHECK(fitted_order(errors) > 3.5);
}

TEST_CASE("two horizontal dimensions") {
  const auto a = manufactured(16, 0.1, 2, 16), b = manufactured(32, 0.1, 2, 16);
  MESSAGE("d=2 errors " << a.error << " " << b.error);
  CHECK(order(a.error, b.error) > 3.5);
}

TEST_CASE("pressure matrix stays positive definite on admissible states") {
  const StripGrid g{1, 32, 2 * pi, 16};
  Discretization D(g);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    PhysParams p;
    p.eps = u(rng);
    p.beta = u(rng);
    p.delta = u(rng);
    p.mu = std::pow(10.0, -3 * u(rng));
    const auto b = Bathymetry::cosine_bump(D, 0.4 * u(rng));
    RandomModes em(4, rng), rm(4, rng);
    const auto eta0 = surface(g, [&](double x) { return 0.3 * em(x, g.L); });
    const auto rho = strip(g, [&](double x, double r) { return rm(x, g.L) * (1 + r); });
    const auto diffeo = build_diffeo(D, b, eta0, p);
    const auto dens = total_density(rho, p);
    const auto prob = elliptic_coefficients(diffeo, dens, p.mu);
    const double bound = 1.0 / dens.max() * std::min(diffeo.depth.min(), 1.0 / diffeo.depth.max());
    CHECK(prob.min_eigenvalue() > 0.0);
    CHECK(prob.min_eigenvalue() > 0.1 * bound);
  }
}

TEST_CASE("Taylor coefficient and its time derivative") {
  const StripGrid g{1, 16, 2 * pi, 8};
  Discretization D(g);
  PhysParams p;
  p.g = 2.0;
  p.rho_bar = 1.5;
  const auto diffeo = build_diffeo(D, Bathymetry::flat(D), SurfaceField(g), p);
  CHECK(max_diff(taylor_coefficient(D, StripField(g), diffeo, p).a, SurfaceField(g, 3.0)) == 0.0);
  p.eps = 0.0;
  const auto P = strip(g, [](double x, double r) { return std::sin(x) * r * r; });
  CHECK(max_diff(taylor_coefficient(D, P, diffeo, p).a, SurfaceField(g, 3.0)) == 0.0);

  std::vector<TaylorCoefficient> hist;
  CHECK_THROWS_AS(taylor_time_derivative(hist, 0.1), InsufficientHistory);
  hist.push_back({SurfaceField(g, 3.0)});
  CHECK_THROWS_AS(taylor_time_derivative(hist, 0.1), InsufficientHistory);
  hist.push_back({SurfaceField(g, 3.0)});
  CHECK(taylor_time_derivative(hist, 0.1).max_abs() == 0.0);
  hist.clear();
  for (int n = 0; n < 4; ++n) hist.push_back({SurfaceField(g, 3.0 + 0.7 * 0.1 * n)});
  CHECK(max_diff(taylor_time_derivative(hist, 0.1), SurfaceField(g, 0.7)) < 1e-12);
}

TEST_CASE("non-hydrostatic pressure vanishes at least like sqrt(mu)") {
  std::vector<double> lm, lp;
  for (double mu : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const StripGrid g{1, 32, 2 * pi, 16};
    Discretization D(g);
    PhysParams p;
    p.eps = 0.1;
    p.beta = 0.3;
    p.mu = mu;
    p.delta = mu;
    const auto b = Bathymetry::cosine_bump(D, 0.5);
    StripState st = StripState::rest(g);
    st.eta0 = surface(g, [](double x) { return 0.2 * std::cos(x); });
    st.V[0] = strip(g, [](double x, double) { return 0.1 * std::sin(x); });
    st.rho = strip(g, [](double x, double r) { return std::cos(x) * (1 + r); });
    const auto diffeo = build_diffeo(D, b, st.eta0, p);
    const auto P = solve_pressure(D, assemble_pressure_problem(D, st, diffeo, p));
    const auto sg = sigma_grad(D, P, diffeo);
    const double n = std::sqrt(mu) * sobolev_norm(D, sg.horizontal[0], 0, 0) + sobolev_norm(D, sg.vertical, 0, 0);
    lm.push_back(std::log(mu));
    lp.push_back(std::log(n));
  }
  const double slope = (lp.front() - lp.back()) / (lm.front() - lm.back());
  MESSAGE("pressure-gradient slope in mu " << slope);
  CHECK(slope > 0.45);
}
