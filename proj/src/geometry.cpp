#include "sigmalab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sigmalab {

void PhysParams::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
  };
  unit(eps, "eps");
  unit(beta, "beta");
  unit(delta, "delta");
  if (!(mu > 0.0 && mu <= 1.0)) throw ConfigError("mu must lie in (0,1]");
  if (!(g > 0.0)) throw ConfigError("g must be positive");
  if (!(rho_bar > 0.0)) throw ConfigError("rho_bar must be positive");
}

Bathymetry Bathymetry::from_values(const Discretization& D, SurfaceField b) {
  require_same_grid(b.grid(), D.grid(), "Bathymetry");
  Bathymetry out;
  out.grad_ = D.gradient(b);
  out.b_ = std::move(b);
  return out;
}

Bathymetry Bathymetry::flat(const Discretization& D) { return from_values(D, SurfaceField(D.grid())); }

Bathymetry Bathymetry::cosine_bump(const Discretization& D, double amplitude, int mode) {
  const StripGrid& g = D.grid();
  SurfaceField b(g);
  const double k = 2.0 * std::numbers::pi * mode / g.L;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double v = amplitude;
    for (int dir = 0; dir < g.d; ++dir) v *= std::cos(k * g.x(i, dir));
    b[i] = v;
  }
  return from_values(D, std::move(b));
}

Bathymetry Bathymetry::gaussian_ridge(const Discretization& D, double amplitude, double width) {
  const StripGrid& g = D.grid();
  SurfaceField b(g);
  for (std::size_t i = 0; i < b.size(); ++i) {
    double q = 0.0;
    for (int dir = 0; dir < g.d; ++dir) {
      const double dx = g.x(i, dir) - 0.5 * g.L;
      q += dx * dx;
    }
    b[i] = amplitude * std::exp(-q / (width * width));
  }
  return from_values(D, std::move(b));
}

Bathymetry Bathymetry::from_file(const Discretization& D, const std::string& path) {
  const StripGrid& g = D.grid();
  if (g.d != 1) throw ConfigError("bathymetry files are supported for d = 1 only");
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bathymetry file " + path);
  std::vector<std::pair<double, double>> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double x, v;
    if (!(ls >> x >> v)) throw ConfigError("malformed bathymetry line: " + line);
    x = std::fmod(x, g.L);
    if (x < 0) x += g.L;
    pts.emplace_back(x, v);
  }
  if (pts.size() < 2) throw ConfigError("bathymetry file needs at least two samples");
  std::ranges::sort(pts);
  SurfaceField b(g);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double x = g.x(i, 0);
    auto hi = std::ranges::upper_bound(pts, x, {}, &std::pair<double, double>::first);
    const auto& right = hi == pts.end() ? pts.front() : *hi;
    const auto& left = hi == pts.begin() ? pts.back() : *(hi - 1);
    double xl = left.first, xr = right.first;
    if (hi == pts.begin()) xl -= g.L;
    if (hi == pts.end()) xr += g.L;
    const double t = xr > xl ? (x - xl) / (xr - xl) : 0.0;
    b[i] = (1.0 - t) * left.second + t * right.second;
  }
  return from_values(D, std::move(b));
}

double Bathymetry::min_depth(double beta) const { return 1.0 - beta * b_.max(); }

void Bathymetry::check(double beta, double h_min) const {
  const double m = beta >= 0 ? 1.0 - beta * b_.max() : 1.0 - beta * b_.min();
  if (m < h_min)
    throw DegenerateDepth("still-water depth 1 - beta b reaches " + std::to_string(m));
}

StripField DiffeoFields::height() const {
  StripField z = eta_bar;
  z.axpy(eps, eta);
  return z;
}

DiffeoFields build_diffeo(const Discretization& D, const Bathymetry& b, const SurfaceField& eta0,
                          const PhysParams& p) {
  const StripGrid& g = D.grid();
  require_same_grid(eta0.grid(), g, "build_diffeo");
  DiffeoFields out;
  out.eps = p.eps;
  out.eta_bar = StripField(g);
  out.eta = StripField(g);
  out.h_bar = StripField(g);
  out.h = StripField(g);
  out.depth = StripField(g);
  out.grad_sum.assign(std::size_t(g.d), StripField(g));
  const SurfaceField& bb = b.b();
  const auto& eta_grad = D.gradient(eta0);
  for (int j = 0; j < g.slabs(); ++j) {
    const double r = g.r(j);
    for (std::size_t i = 0; i < g.nh(); ++i) {
      const double hb = 1.0 - p.beta * bb[i];
      out.eta_bar(j, i) = r * hb;
      out.eta(j, i) = (1.0 + r) * eta0[i];
      out.h_bar(j, i) = hb;
      out.h(j, i) = eta0[i];
      out.depth(j, i) = hb + p.eps * eta0[i];
      for (int dir = 0; dir < g.d; ++dir)
        out.grad_sum[std::size_t(dir)](j, i) =
            -r * p.beta * b.grad()[std::size_t(dir)][i] + p.eps * (1.0 + r) * eta_grad[std::size_t(dir)][i];
    }
  }
  const double mn = out.depth.min();
  if (mn <= 0.0) throw DegenerateDepth("1 - beta b + eps eta0 reaches " + std::to_string(mn));
  return out;
}

DiffeoFields build_diffeo_general(const Discretization& D, const Bathymetry& b, const StripField& eta,
                                  const PhysParams& p) {
  const StripGrid& g = D.grid();
  require_same_grid(eta.grid(), g, "build_diffeo_general");
  DiffeoFields out;
  out.eps = p.eps;
  out.eta = eta;
  out.eta_bar = StripField(g);
  out.h_bar = StripField(g);
  for (int j = 0; j < g.slabs(); ++j)
    for (std::size_t i = 0; i < g.nh(); ++i) {
      const double hb = 1.0 - p.beta * b.b()[i];
      out.eta_bar(j, i) = g.r(j) * hb;
      out.h_bar(j, i) = hb;
    }
  out.h = D.dr(eta);
  out.depth = out.h_bar;
  out.depth.axpy(p.eps, out.h);
  out.grad_sum = D.gradient(out.height());
  const double mn = out.depth.min();
  if (mn <= 0.0) throw DegenerateDiffeo("vertical stretching of the map reaches " + std::to_string(mn));
  return out;
}

StripField sigma_dr(const Discretization& D, const StripField& f, const DiffeoFields& diffeo) {
  StripField out = D.dr(f);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] /= diffeo.depth[k];
  return out;
}

StripField sigma_dx(const Discretization& D, const StripField& f, int dir, const DiffeoFields& diffeo) {
  StripField out = D.dx(f, dir);
  const StripField fr = D.dr(f);
  const StripField& G = diffeo.grad_sum[std::size_t(dir)];
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= G[k] / diffeo.depth[k] * fr[k];
  return out;
}

SigmaGradient sigma_grad(const Discretization& D, const StripField& f, const DiffeoFields& diffeo) {
  require_same_grid(f.grid(), diffeo.depth.grid(), "sigma_grad");
  SigmaGradient out;
  const StripField fr = D.dr(f);
  for (int dir = 0; dir < D.grid().d; ++dir) {
    StripField h = D.dx(f, dir);
    const StripField& G = diffeo.grad_sum[std::size_t(dir)];
    for (std::size_t k = 0; k < h.size(); ++k) h[k] -= G[k] / diffeo.depth[k] * fr[k];
    out.horizontal.push_back(std::move(h));
  }
  out.vertical = fr;
  for (std::size_t k = 0; k < fr.size(); ++k) out.vertical[k] /= diffeo.depth[k];
  return out;
}

StripField alinhac_unknown(const Discretization& D, const StripField& f, double s,
                           const DiffeoFields& diffeo) {
  StripField out = lambda_pow(D, f, s, true);
  const StripField lz = lambda_pow(D, diffeo.height(), s, true);
  const StripField fr = D.dr(f);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= lz[k] / diffeo.depth[k] * fr[k];
  return out;
}

StripField total_density(const StripField& rho, const PhysParams& p) {
  StripField out(rho.grid(), p.rho_bar);
  out.axpy(p.eps * p.delta, rho);
  return out;
}

NondegeneracyReport check_nondegeneracy(const StripField& rho, const DiffeoFields& diffeo,
                                        const PhysParams& p, const Admissibility& adm) {
  NondegeneracyReport r;
  r.min_depth = diffeo.depth.min();
  r.max_depth = diffeo.depth.max();
  r.min_density = total_density(rho, p).min();
  r.depth_ok = r.min_depth >= adm.h_min && r.max_depth <= adm.h_max;
  r.density_ok = r.min_density >= adm.c_star;
  return r;
}

}  // namespace sigmalab
