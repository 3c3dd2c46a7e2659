#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "helpers.hpp"
#include "sigmalab/geometry.hpp"

using namespace testing;

TEST_CASE("parameter validation") {
  PhysParams p;
  CHECK_NOTHROW(p.validate());
  p.mu = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.eps = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS((StripGrid{1, 12, 1.0, 16}.validate()), ConfigError);
  CHECK_THROWS_AS((StripGrid{1, 16, 1.0, 4}.validate()), ConfigError);
}

TEST_CASE("build_diffeo examples") {
  const StripGrid g{1, 32, 2 * pi, 16};
  Discretization D(g);
  PhysParams p;

  const auto flat = build_diffeo(D, Bathymetry::flat(D), SurfaceField(g), p);
  CHECK(max_diff(flat.eta_bar, strip(g, [](double, double r) { return r; })) == 0.0);
  CHECK(flat.eta.max_abs() == 0.0);
  CHECK(max_diff(flat.depth, StripField(g, 1.0)) == 0.0);

  p.beta = 1.0;
  p.eps = 0.0;
  const auto bump = Bathymetry::cosine_bump(D, 0.3);
  const auto dif = build_diffeo(D, bump, SurfaceField(g), p);
  CHECK(max_diff(dif.depth, strip(g, [](double x, double) { return 1 - 0.3 * std::cos(x); })) < 1e-15);
  CHECK(dif.depth.min() == doctest::Approx(0.7).epsilon(1e-14));

  p.eps = 0.05;
  const auto deep = Bathymetry::from_values(D, SurfaceField(g, 1.2));
  CHECK_THROWS_AS(build_diffeo(D, deep, surface(g, [](double x) { return std::sin(x); }), p),
                  DegenerateDepth);
  CHECK_THROWS_AS(deep.check(1.0, 0.1), DegenerateDepth);

  p.eps = 0.4;
  p.beta = 0.7;
  const auto eta0 = surface(g, [](double x) { return 0.3 * std::sin(x) - 0.2 * std::cos(3 * x); });
  const auto cur = build_diffeo(D, bump, eta0, p);
  double worst = 0.0;
  for (int j = 0; j < g.slabs(); ++j)
    for (std::size_t i = 0; i < g.nh(); ++i)
      worst = std::max(worst, std::abs(cur.h_bar(j, i) + p.eps * cur.h(j, i) -
                                       (1 - p.beta * bump.b()[i] + p.eps * eta0[i])));
  CHECK(worst < 1e-15);
}

TEST_CASE("bathymetry presets and file loading") {
  const StripGrid g{1, 16, 4.0, 8};
  Discretization D(g);
  const auto ridge = Bathymetry::gaussian_ridge(D, 0.5, 0.5);
  CHECK(ridge.b().max() == doctest::Approx(0.5));
  CHECK(ridge.min_depth(1.0) == doctest::Approx(0.5));

  const std::string path = "bathy_test.txt";
  {
    std::ofstream out(path);
    out.precision(17);
    out << "# x b\n";
    for (int i = 0; i < 64; ++i) out << 4.0 * i / 64 << " " << 0.1 * std::sin(2 * pi * i / 64) << "\n";
  }
  const auto file = Bathymetry::from_file(D, path);
  std::remove(path.c_str());
  const auto exact = surface(g, [](double x) { return 0.1 * std::sin(2 * pi * x / 4.0); });
  CHECK(max_diff(file.b(), exact) < 1e-12);
  CHECK_THROWS_AS(Bathymetry::from_file(D, "no/such/file"), ConfigError);
}

TEST_CASE("sigma gradient examples") {
  const StripGrid g{1, 32, 2 * pi, 16};
  Discretization D(g);
  PhysParams p;
  const auto f = strip(g, [](double x, double r) { return std::sin(x) * r * r + std::cos(2 * x); });
  const auto flat = build_diffeo(D, Bathymetry::flat(D), SurfaceField(g), p);
  const auto sg = sigma_grad(D, f, flat);
  CHECK(max_diff(sg.horizontal[0], D.dx(f, 0)) == 0.0);
  CHECK(max_diff(sg.vertical, D.dr(f)) == 0.0);

  p.eps = 0.3;
  p.beta = 0.6;
  const auto b = Bathymetry::cosine_bump(D, 0.5);
  const auto eta0 = surface(g, [](double x) { return 0.4 * std::sin(x + 0.3); });
  const auto diffeo = build_diffeo(D, b, eta0, p);
  const auto r = strip(g, [](double, double rr) { return rr; });
  const auto gr = sigma_grad(D, r, diffeo);
  StripField ex_h(g), ex_v(g);
  for (std::size_t k = 0; k < ex_h.size(); ++k) {
    ex_h[k] = -diffeo.grad_sum[0][k] / diffeo.depth[k];
    ex_v[k] = 1.0 / diffeo.depth[k];
  }
  CHECK(max_diff(gr.horizontal[0], ex_h) < 1e-12);
  CHECK(max_diff(gr.vertical, ex_v) < 1e-12);

  const auto gz = sigma_grad(D, diffeo.height(), diffeo);
  CHECK(gz.horizontal[0].max_abs() < 1e-12);
  CHECK(max_diff(gz.vertical, StripField(g, 1.0)) < 1e-12);
}

TEST_CASE("pullback identity converges at fourth order in r") {
  PhysParams p;
  p.eps = 0.3;
  p.beta = 0.5;
  auto F = [](double x, double z) { return std::sin(x) * std::cos(2 * z) + z * z * z; };
  auto Fx = [](double x, double z) { return std::cos(x) * std::cos(2 * z); };
  auto Fz = [](double x, double z) { return -2 * std::sin(x) * std::sin(2 * z) + 3 * z * z; };
  double eh[3], ev[3];
  for (int q = 0; q < 3; ++q) {
    const StripGrid g{1, 32, 2 * pi, 16 << q};
    Discretization D(g);
    const auto b = Bathymetry::cosine_bump(D, 0.5);
    const auto eta0 = surface(g, [](double x) { return 0.5 * std::cos(x - 1.0); });
    const auto diffeo = build_diffeo(D, b, eta0, p);
    const auto z = diffeo.height();
    StripField f(g), fx(g), fz(g);
    for (int j = 0; j < g.slabs(); ++j)
      for (std::size_t i = 0; i < g.nh(); ++i) {
        const double x = g.x(i, 0), zz = z(j, i);
        f(j, i) = F(x, zz);
        fx(j, i) = Fx(x, zz);
        fz(j, i) = Fz(x, zz);
      }
    const auto sg = sigma_grad(D, f, diffeo);
    eh[q] = max_diff(sg.horizontal[0], fx);
    ev[q] = max_diff(sg.vertical, fz);
  }
  MESSAGE("pullback errors " << eh[0] << " " << eh[1] << " " << eh[2]);
  CHECK(order(eh[1], eh[2]) > 3.5);
  CHECK(order(ev[1], ev[2]) > 3.5);
}

TEST_CASE("Alinhac good unknown") {
  const StripGrid g{1, 32, 2 * pi, 16};
  Discretization D(g);
  PhysParams p;
  const double s = 3.0;
  const auto f = strip(g, [](double x, double r) { return std::sin(x) * r * r + std::cos(2 * x) * r; });
  const auto flat = build_diffeo(D, Bathymetry::flat(D), SurfaceField(g), p);
  CHECK(max_diff(alinhac_unknown(D, f, s, flat), lambda_pow(D, f, s, true)) < 1e-13);

  p.eps = 0.5;
  p.beta = 0.5;
  const auto b = Bathymetry::cosine_bump(D, 0.4, 2);
  const auto eta0 = surface(g, [](double x) { return 0.3 * std::cos(x); });
  const auto diffeo = build_diffeo(D, b, eta0, p);
  const auto fx = strip(g, [](double x, double) { return std::sin(3 * x); });
  CHECK(max_diff(alinhac_unknown(D, fx, s, diffeo), lambda_pow(D, fx, s, true)) < 1e-12);

  // term-by-term oracle: single-mode eta0 over a flat bottom, f = sin(x) r
  p.beta = 0.0;
  const double a = 0.3, m = 2.0;
  const auto eta_m = surface(g, [&](double x) { return a * std::cos(m * x); });
  const auto dm = build_diffeo(D, Bathymetry::flat(D), eta_m, p);
  const auto fr = strip(g, [](double x, double r) { return std::sin(x) * r; });
  const auto oracle = strip(g, [&](double x, double r) {
    const double lam_f = std::pow(2.0, (s - 1) / 2) * std::sin(x) * r;
    const double lam_z = p.eps * (1 + r) * a * m * std::pow(1 + m * m, (s - 1) / 2) * std::cos(m * x);
    return lam_f - lam_z / (1 + p.eps * a * std::cos(m * x)) * std::sin(x);
  });
  CHECK(max_diff(alinhac_unknown(D, fr, s, dm), oracle) < 1e-12);
}

TEST_CASE("Alinhac commutator is linear in the geometry amplitude") {
  const StripGrid g{1, 64, 2 * pi, 32};
  Discretization D(g);
  const double s = 3.0;
  const auto f = strip(g, [](double x, double r) { return std::cos(x) * (r + 1) * (r + 1) + std::sin(2 * x) * r; });
  auto bshape = surface(g, [](double x) { return std::cos(x) + 0.5 * std::sin(2 * x); });
  auto eshape = surface(g, [](double x) { return std::sin(x) - 0.3 * std::cos(3 * x); });
  bshape *= 1.0 / sobolev_norm(D, bshape, s);
  eshape *= 1.0 / sobolev_norm(D, eshape, s);
  const auto b = Bathymetry::from_values(D, bshape);
  std::vector<double> ts, res;
  for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
    PhysParams p;
    p.eps = p.beta = t;
    const auto diffeo = build_diffeo(D, b, eshape, p);
    const auto fs = alinhac_unknown(D, f, s, diffeo);
    const auto lhs = sigma_grad(D, f, diffeo);
    const auto rhs = sigma_grad(D, fs, diffeo);
    const double e = sobolev_norm(D, lambda_pow(D, lhs.horizontal[0], s, true) - rhs.horizontal[0], 0, 0) +
                     sobolev_norm(D, lambda_pow(D, lhs.vertical, s, true) - rhs.vertical, 0, 0);
    ts.push_back(std::log(t));
    res.push_back(std::log(e));
  }
  const double slope = (res.front() - res.back()) / (ts.front() - ts.back());
  MESSAGE("Alinhac residual slope " << slope);
  CHECK(slope > 0.9);
  CHECK(slope < 1.1);
}

TEST_CASE("non-degeneracy report") {
  const StripGrid g{1, 32, 2 * pi, 8};
  Discretization D(g);
  PhysParams p;
  p.eps = 0.5;
  p.delta = 0.5;
  p.beta = 1.0;
  const Admissibility adm;
  const auto rest = build_diffeo(D, Bathymetry::flat(D), SurfaceField(g), p);
  auto rep = check_nondegeneracy(StripField(g), rest, p, adm);
  CHECK(rep.min_density == 1.0);
  CHECK(rep.min_depth == 1.0);
  CHECK(rep.depth_ok);
  CHECK(rep.density_ok);

  rep = check_nondegeneracy(StripField(g, -p.rho_bar / (p.eps * p.delta)), rest, p, adm);
  CHECK(rep.min_density == doctest::Approx(0.0));
  CHECK_FALSE(rep.density_ok);

  const auto bump = Bathymetry::cosine_bump(D, 0.5);
  const auto shallow = build_diffeo(D, bump, surface(g, [](double x) { return -0.9 * std::cos(x); }), p);
  rep = check_nondegeneracy(StripField(g), shallow, p, adm);
  CHECK(rep.min_depth == doctest::Approx(0.05));
  CHECK_FALSE(rep.depth_ok);
  CHECK_THROWS_AS(build_diffeo(D, bump, surface(g, [](double x) { return -1.2 * std::cos(x); }), p),
                  DegenerateDepth);
}
