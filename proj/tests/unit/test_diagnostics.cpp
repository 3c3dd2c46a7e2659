#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "sigmalab/diagnostics.hpp"

using namespace testing;

namespace {

PhysParams params(double eps, double beta, double mu, double delta) {
  PhysParams p;
  p.eps = eps;
  p.beta = beta;
  p.mu = mu;
  p.delta = delta;
  return p;
}

EnergyReport energy_of(const EulerSystem& sys, const StripState& s, double iota3 = 0.0) {
  const auto diffeo = sys.diffeo(s);
  return energy(sys.disc(), s, diffeo, sys.pressure(s), sys.params(), {}, iota3);
}

/// ||V, sqrt(mu) w, sqrt(mu) rho||_{H^s}^2 + ||omega||_{H^{s-1}}^2 + |eta0|_{H^s}^2.
double reference_norm(const EulerSystem& sys, const StripState& s) {
  const auto& D = sys.disc();
  const double mu = sys.params().mu;
  auto sq = [&](const StripField& f, int k) {
    const double n = sobolev_norm(D, f, k, k);
    return n * n;
  };
  double q = 0.0;
  for (const auto& Vi : s.V) q += sq(Vi, 4);
  q += mu * sq(s.w, 4) + mu * sq(s.rho, 4);
  for (const auto& c : vorticity(D, s, sys.diffeo(s), sys.params()).omega_x) q += sq(c, 3);
  const double e = sobolev_norm(D, s.eta0, 4);
  return q + e * e;
}

/// Incompressible state from a random streamfunction vanishing on the flat bottom.
StripState random_state(const EulerSystem& sys, std::mt19937_64& rng, double amp) {
  const auto& g = sys.disc().grid();
  RandomModes a(3, rng), b(3, rng), rho(3, rng), eta(3, rng);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  const double scale = amp * u(rng);
  auto psi = [&](double x, double z) {
    return scale * (z + 1) * (z + 1) * (a(x, g.L) + (z + 1) * b(x, g.L));
  };
  const StripField rho0 = strip(g, [&](double x, double r) { return amp * (1 + r * r) * rho(x, g.L); });
  const SurfaceField eta0 = surface(g, [&](double x) { return amp * eta(x, g.L); });
  return init_from_streamfunction(sys, psi, rho0, eta0);
}

}  // namespace

TEST_CASE("energy vanishes at rest and the monitors accept it") {
  const StripGrid g{1, 32, 2 * pi, 12};
  Discretization D(g);
  EulerSystem sys(D, Bathymetry::cosine_bump(D, 0.3), params(0.2, 0.5, 0.1, 0.05));
  const StripState rest = StripState::rest(g);
  const EnergyReport r = energy_of(sys, rest);
  CHECK(r.E_s == 0.0);
  CHECK(r.E_low == 0.0);
  CHECK(r.vort_norm == 0.0);
  CHECK(r.taylor_min == doctest::Approx(1.0));
  CHECK(r.finite());
  CHECK(EquivalenceMonitor(r).check(r).pass);
  CHECK(BlowupMonitor(r).check(r) == BlowupStatus::Continue);
}

TEST_CASE("single surface mode matches the closed form") {
  const StripGrid g{1, 64, 2 * pi, 12};
  Discretization D(g);
  PhysParams p = params(0.1, 0.0, 0.3, 0.0);
  p.g = 2.0;
  p.rho_bar = 1.5;
  const double A = 0.01;
  for (int k : {1, 3}) {
    StripState s = StripState::rest(g);
    s.eta0 = surface(g, [&](double x) { return A * std::cos(k * x); });
    const auto diffeo = build_diffeo(D, Bathymetry::flat(D), s.eta0, p);
    const EnergyReport r = energy(D, s, diffeo, StripField(g), p);
    const double kk = 1.0 + k * k;
    const double half = A * A * g.L / 2;
    CHECK(r.E_low == doctest::Approx(p.g * p.rho_bar * half * std::pow(kk, 3)).epsilon(1e-12));
    CHECK(r.surface_term == doctest::Approx(p.g * p.rho_bar * half * k * k * std::pow(kk, 3)).epsilon(1e-12));
    CHECK(r.E_s == doctest::Approx(p.g * p.rho_bar * half * std::pow(kk, 4)).epsilon(1e-12));
    CHECK(r.vort_norm == 0.0);
    CHECK(r.alinhac_V == 0.0);

    const EnergyReport rd = energy(D, s, diffeo, StripField(g), p, {}, 0.2);
    CHECK(rd.dispersive_term ==
          doctest::Approx(0.2 * half * k * k * std::pow(kk, 3) * std::sqrt(kk)).epsilon(1e-12));
  }
}

TEST_CASE("energy is equivalent to the Sobolev norms on random states") {
  const StripGrid g{1, 32, 2 * pi, 16};
  Discretization D(g);
  EulerSystem sys(D, Bathymetry::flat(D), params(0.1, 0.0, 0.1, 0.05));
  std::mt19937_64 rng(20240611);
  std::vector<double> ratios;
  for (int n = 0; n < 100; ++n) {
    const StripState s = random_state(sys, rng, 0.05);
    const EnergyReport r = energy_of(sys, s);
    REQUIRE(r.taylor_min > 0.5);
    ratios.push_back(r.E_s / reference_norm(sys, s));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.begin() + 50);
  const double C = std::max(*hi, 1.0 / *lo);
  MESSAGE("fitted equivalence constant " << C);
  CHECK(C < 1e3);
  for (std::size_t n = 50; n < ratios.size(); ++n) {
    CHECK(ratios[n] <= 2 * C);
    CHECK(ratios[n] >= 1 / (2 * C));
  }
}

TEST_CASE("energy depends continuously on the state") {
  const StripGrid g{1, 32, 2 * pi, 12};
  Discretization D(g);
  EulerSystem sys(D, Bathymetry::flat(D), params(0.1, 0.0, 0.2, 0.05));
  std::mt19937_64 rng(7);
  const StripState base = random_state(sys, rng, 0.05);
  const StripState dir = random_state(sys, rng, 0.05);
  const double E0 = energy_of(sys, base).E_s;
  std::vector<double> change;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    StripState s = base;
    s.axpy(h, dir);
    change.push_back(std::abs(energy_of(sys, s).E_s - E0));
  }
  CHECK(change[0] < 0.1 * E0);
  CHECK(change[1] / change[2] == doctest::Approx(10.0).epsilon(0.05));
  CHECK(change[0] / change[1] == doctest::Approx(10.0).epsilon(0.1));
}

TEST_CASE("equivalence ratios stay within 4x along a vortical run") {
  const StripGrid g{1, 32, 2 * pi, 16};
  Discretization D(g);
  EulerSystem sys(D, Bathymetry::flat(D), params(0.2, 0.0, 0.1, 0.05));
  std::mt19937_64 rng(11);
  StripState s = random_state(sys, rng, 0.1);

  const EnergyReport r0 = energy_of(sys, s);
  REQUIRE(r0.shear_ratio > 0.0);
  const EquivalenceMonitor eq(r0);
  const BlowupMonitor bm(r0);
  const double dt = 0.5 * sys.max_dt(s);
  for (int n = 0; n < 20; ++n) {
    s = sys.step(s, dt);
    const EnergyReport r = energy_of(sys, s);
    const auto c = eq.check(r);
    CHECK_MESSAGE(c.pass, c.detail);
    CHECK(bm.check(r) == BlowupStatus::Continue);
  }
}

TEST_CASE("columnar state has zero shear ratio") {
  const StripGrid g{1, 32, 2 * pi, 12};
  Discretization D(g);
  EulerSystem sys(D, Bathymetry::flat(D), params(0.1, 0.0, 0.1, 0.0));
  StripState s = StripState::rest(g);
  s.V[0] = StripField(g, 0.4);
  const EnergyReport r = energy_of(sys, s);
  // Round-off of the r-stencils applied to a constant, amplified by d_r^4.
  CHECK(r.shear_ratio < 1e-8);
  CHECK(equivalence_ratios(r).shear < 1e-8);
}

TEST_CASE("blow-up thresholds") {
  EnergyReport r;
  r.E_s = 2.0;
  r.E_low = 1.0;
  r.vort_norm = 0.5;
  r.shear_ratio = 0.1;
  r.w_norm = 0.2;
  r.taylor_min = 1.0;
  const BlowupMonitor m(r, {0.1, 0.1, 10.0});
  CHECK(m.check(r) == BlowupStatus::Continue);

  EnergyReport low = r;
  low.taylor_min = 0.049;
  CHECK(m.check(low) == BlowupStatus::TaylorDegenerate);
  low.taylor_min = 0.051;
  CHECK(m.check(low) == BlowupStatus::Continue);

  EnergyReport spike = r;
  spike.vort_norm = 10 * std::sqrt(r.E_s) * 1.01;
  CHECK(m.check(spike) == BlowupStatus::NormBlowup);
  spike.vort_norm = 10 * std::sqrt(r.E_s) * 0.99;
  CHECK(m.check(spike) == BlowupStatus::Continue);

  EnergyReport quiet = r;
  quiet.shear_ratio = 1e-10;
  const BlowupMonitor from_zero(quiet, {0.1, 0.1, 10.0});
  CHECK(from_zero.check(r) == BlowupStatus::Continue);
  spike = r;
  spike = r;
  spike.E_s *= 400;
  CHECK(m.check(spike) == BlowupStatus::NormBlowup);

  EnergyReport bad = r;
  bad.w_norm = std::numeric_limits<double>::quiet_NaN();
  CHECK(m.check(bad) == BlowupStatus::NonFinite);

  NondegeneracyReport geo;
  geo.depth_ok = false;
  geo.density_ok = true;
  CHECK(m.check(r, &geo) == BlowupStatus::DepthDegenerate);
  geo.depth_ok = true;
  geo.density_ok = false;
  CHECK(m.check(r, &geo) == BlowupStatus::DensityDegenerate);
  CHECK(to_string(BlowupStatus::TaylorDegenerate) == "TaylorDegenerate");
}

TEST_CASE("rate fits") {
  std::vector<std::pair<double, double>> half, one;
  for (double mu : {1e-1, 1e-2, 1e-3, 1e-4}) {
    half.emplace_back(mu, 3.0 * std::sqrt(mu));
    one.emplace_back(mu, 0.7 * mu);
  }
  const RateFit a = fit_rate(half);
  CHECK(a.slope == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::exp(a.intercept) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(a.residual < 1e-12);
  CHECK(!a.degenerate);
  CHECK(fit_rate(one).slope == doctest::Approx(1.0).epsilon(1e-12));

  auto noisy = one;
  noisy.back().second = 1e-16;
  const RateFit d = fit_rate(noisy);
  CHECK(d.degenerate);
  CHECK(d.slope == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(fit_rate({{1e-1, 1.0}, {1e-2, 0.1}}), ConfigError);
  CHECK_THROWS_AS(fit_rate({{1e-1, 1.0}, {5e-2, 0.5}, {2e-2, 0.2}}), ConfigError);
}

TEST_CASE("Gronwall rate of an exponential series") {
  std::vector<double> t, e;
  for (int n = 0; n <= 10; ++n) {
    t.push_back(0.1 * n);
    e.push_back(3.0 * std::exp(2.0 * t.back()));
  }
  CHECK(gronwall_rate(t, e) == doctest::Approx(2.0).epsilon(1e-12));
  e[5] *= 2;
  CHECK(gronwall_rate(t, e) > 2.0);
}
