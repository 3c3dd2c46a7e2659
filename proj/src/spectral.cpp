#include "sigmalab/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "sigmalab/geometry.hpp"

namespace sigmalab {

std::vector<double> fornberg_weights(double z, std::span<const double> x, int m) {
  const int n = int(x.size()) - 1;
  std::vector<std::vector<double>> c(x.size(), std::vector<double>(std::size_t(m) + 1, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[std::size_t(i)] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[std::size_t(i)] - x[std::size_t(j)];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) w[i] = c[i][std::size_t(m)];
  return w;
}

VerticalStencil::VerticalStencil(int nr, int m, int p) : m_(m) {
  const int centered = 2 * ((m + p - 1) / 2) + 1;
  const int half = centered / 2;
  const int one_sided = m + p;
  if (one_sided > nr + 1)
    throw InsufficientResolution("vertical stencil of order " + std::to_string(m) +
                                 " needs at least " + std::to_string(one_sided - 1) + " intervals");
  const double scale = std::pow(double(nr), m);
  start_.resize(std::size_t(nr) + 1);
  w_.resize(std::size_t(nr) + 1);
  for (int j = 0; j <= nr; ++j) {
    int s, n;
    if (j - half >= 0 && j + half <= nr) {
      s = j - half;
      n = centered;
    } else if (j < half) {
      s = 0;
      n = one_sided;
    } else {
      s = nr - one_sided + 1;
      n = one_sided;
    }
    std::vector<double> nodes(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) nodes[std::size_t(q)] = double(s + q);
    auto w = fornberg_weights(double(j), nodes, m);
    for (double& v : w) v *= scale;
    start_[std::size_t(j)] = s;
    w_[std::size_t(j)] = std::move(w);
  }
}

StripField VerticalStencil::apply(const StripField& f) const {
  StripField out(f.grid());
  const std::size_t nh = f.slab_size();
  for (int j = 0; j < f.slabs(); ++j) {
    auto o = out.slab(j);
    const auto& w = w_[std::size_t(j)];
    for (std::size_t q = 0; q < w.size(); ++q) {
      const auto in = f.slab(start_[std::size_t(j)] + int(q));
      const double c = w[q];
      for (std::size_t i = 0; i < nh; ++i) o[i] += c * in[i];
    }
  }
  return out;
}

SurfaceField VerticalStencil::apply_at(const StripField& f, int j) const {
  SurfaceField out(f.grid());
  const auto& w = w_[std::size_t(j)];
  for (std::size_t q = 0; q < w.size(); ++q) {
    const auto in = f.slab(start_[std::size_t(j)] + int(q));
    for (std::size_t i = 0; i < in.size(); ++i) out[i] += w[q] * in[i];
  }
  return out;
}

struct Discretization::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Discretization::Discretization(const StripGrid& g) : grid_(g), plans_(std::make_unique<Plans>()) {
  grid_.validate();
  const int n = g.nx;
  const int nhalf = n / 2 + 1;
  nmodes_ = g.d == 1 ? std::size_t(nhalf) : std::size_t(n) * nhalf;
  xi_abs_.resize(nmodes_);
  mult_.resize(nmodes_);
  index_sq_.resize(nmodes_);
  keep_.resize(nmodes_);
  for (std::size_t m = 0; m < nmodes_; ++m) {
    int sq = 0;
    bool keep = true;
    for (int dir = 0; dir < g.d; ++dir) {
      const int k = mode_index(m, dir);
      sq += k * k;
      if (3 * std::abs(k) > n) keep = false;
    }
    index_sq_[m] = sq;
    xi_abs_[m] = 2.0 * std::numbers::pi / g.L * std::sqrt(double(sq));
    keep_[m] = keep;
    const int last = int(m % std::size_t(nhalf));
    mult_[m] = (last == 0 || last == n / 2) ? 1.0 : 2.0;
  }
  for (int m = 1; m <= 4; ++m) stencils_.emplace_back(g.nr, m, 4);
  const double h = g.dr();
  trap_.assign(std::size_t(g.nr) + 1, h);
  trap_.front() = trap_.back() = 0.5 * h;
  greg_.assign(std::size_t(g.nr) + 1, h);
  const double ends[3] = {3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0};
  for (int q = 0; q < 3; ++q) {
    greg_[std::size_t(q)] = ends[q] * h;
    greg_[std::size_t(g.nr - q)] = ends[q] * h;
  }

  std::vector<double> rbuf(g.nh());
  std::vector<cplx> cbuf(nmodes_);
  auto* rp = rbuf.data();
  auto* cp = reinterpret_cast<fftw_complex*>(cbuf.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  if (g.d == 1) {
    plans_->r2c = fftw_plan_dft_r2c_1d(n, rp, cp, flags);
    plans_->c2r = fftw_plan_dft_c2r_1d(n, cp, rp, flags);
  } else {
    plans_->r2c = fftw_plan_dft_r2c_2d(n, n, rp, cp, flags);
    plans_->c2r = fftw_plan_dft_c2r_2d(n, n, cp, rp, flags);
  }
}

Discretization::~Discretization() {
  std::lock_guard lock(planner_mutex());
  if (plans_->r2c) fftw_destroy_plan(plans_->r2c);
  if (plans_->c2r) fftw_destroy_plan(plans_->c2r);
}

int Discretization::mode_index(std::size_t m, int dir) const {
  const int n = grid_.nx;
  const std::size_t nhalf = std::size_t(n / 2 + 1);
  if (grid_.d == 1) return int(m);
  if (dir == 1) return int(m % nhalf);
  const int ix = int(m / nhalf);
  return ix <= n / 2 ? ix : ix - n;
}

double Discretization::wavenumber(std::size_t m, int dir) const {
  return 2.0 * std::numbers::pi / grid_.L * mode_index(m, dir);
}

double Discretization::derivative_symbol(std::size_t m, int dir) const {
  const int k = mode_index(m, dir);
  if (std::abs(k) * 2 == grid_.nx) return 0.0;
  return 2.0 * std::numbers::pi / grid_.L * k;
}

void Discretization::forward(std::span<const double> in, std::span<cplx> out) const {
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void Discretization::inverse(std::span<const cplx> in, std::span<double> out) const {
  std::vector<cplx> tmp(in.begin(), in.end());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(tmp.data()), out.data());
  const double s = 1.0 / double(grid_.nh());
  for (double& v : out) v *= s;
}

std::vector<double> Discretization::symbol(const std::function<double(double)>& of_xi) const {
  std::vector<double> s(nmodes_);
  for (std::size_t m = 0; m < nmodes_; ++m) s[m] = of_xi(xi_abs_[m]);
  return s;
}

namespace {

template <class F>
void transform_slab(const Discretization& D, std::span<const double> in, std::span<double> out,
                    F&& per_mode) {
  std::vector<cplx> c(D.modes());
  D.forward(in, c);
  for (std::size_t m = 0; m < c.size(); ++m) c[m] = per_mode(m, c[m]);
  D.inverse(c, out);
}

}  // namespace

SurfaceField Discretization::apply_symbol(const SurfaceField& f, std::span<const double> sym) const {
  SurfaceField out(f.grid());
  transform_slab(*this, f.values(), out.values(), [&](std::size_t m, cplx v) { return v * sym[m]; });
  return out;
}

StripField Discretization::apply_symbol(const StripField& f, std::span<const double> sym) const {
  StripField out(f.grid());
  for (int j = 0; j < f.slabs(); ++j)
    transform_slab(*this, f.slab(j), out.slab(j), [&](std::size_t m, cplx v) { return v * sym[m]; });
  return out;
}

SurfaceField Discretization::dx(const SurfaceField& f, int dir) const {
  SurfaceField out(f.grid());
  transform_slab(*this, f.values(), out.values(),
                 [&](std::size_t m, cplx v) { return cplx(0.0, derivative_symbol(m, dir)) * v; });
  return out;
}

StripField Discretization::dx(const StripField& f, int dir) const {
  StripField out(f.grid());
  for (int j = 0; j < f.slabs(); ++j)
    transform_slab(*this, f.slab(j), out.slab(j),
                   [&](std::size_t m, cplx v) { return cplx(0.0, derivative_symbol(m, dir)) * v; });
  return out;
}

std::vector<SurfaceField> Discretization::gradient(const SurfaceField& f) const {
  std::vector<SurfaceField> g;
  for (int dir = 0; dir < grid_.d; ++dir) g.push_back(dx(f, dir));
  return g;
}

std::vector<StripField> Discretization::gradient(const StripField& f) const {
  std::vector<StripField> g;
  for (int dir = 0; dir < grid_.d; ++dir) g.push_back(dx(f, dir));
  return g;
}

SurfaceField Discretization::divergence(std::span<const SurfaceField> f) const {
  SurfaceField out(grid_);
  for (int dir = 0; dir < grid_.d; ++dir) out += dx(f[std::size_t(dir)], dir);
  return out;
}

StripField Discretization::divergence(std::span<const StripField> f) const {
  StripField out(grid_);
  for (int dir = 0; dir < grid_.d; ++dir) out += dx(f[std::size_t(dir)], dir);
  return out;
}

SurfaceField Discretization::dealias(const SurfaceField& f) const {
  SurfaceField out(f.grid());
  transform_slab(*this, f.values(), out.values(),
                 [&](std::size_t m, cplx v) { return keep_[m] ? v : cplx(0.0); });
  return out;
}

StripField Discretization::dealias(const StripField& f) const {
  StripField out(f.grid());
  for (int j = 0; j < f.slabs(); ++j)
    transform_slab(*this, f.slab(j), out.slab(j),
                   [&](std::size_t m, cplx v) { return keep_[m] ? v : cplx(0.0); });
  return out;
}

const VerticalStencil& Discretization::vertical(int m) const {
  if (m < 1 || m > int(stencils_.size()))
    throw InsufficientResolution("vertical derivatives beyond order 4 are not supported");
  return stencils_[std::size_t(m - 1)];
}

SurfaceField Discretization::column_integral(const StripField& f) const {
  SurfaceField out(grid_);
  for (int j = 0; j < f.slabs(); ++j) out.axpy(greg_[std::size_t(j)], f.slab_field(j));
  return out;
}

double Discretization::parseval(std::span<const double> f, std::span<const double> sym) const {
  std::vector<cplx> c(nmodes_);
  forward(f, c);
  double s = 0.0;
  for (std::size_t m = 0; m < nmodes_; ++m) s += mult_[m] * sym[m] * std::norm(c[m]);
  const double n = double(grid_.nh());
  return s * grid_.area() / (n * n);
}

double cutoff_bump(double t) {
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  auto psi = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
  const double a = psi(2.0 - t), b = psi(t - 1.0);
  return a / (a + b);
}

namespace {
std::vector<double> lambda_symbol(const Discretization& D, double s, bool dotted) {
  if (dotted) return D.symbol([s](double xi) { return xi * std::pow(1.0 + xi * xi, 0.5 * (s - 1.0)); });
  return D.symbol([s](double xi) { return std::pow(1.0 + xi * xi, 0.5 * s); });
}
std::vector<double> mollifier_symbol(const Discretization& D, double iota) {
  return D.symbol([iota](double xi) { return cutoff_bump(iota * xi); });
}
}  // namespace

SurfaceField lambda_pow(const Discretization& D, const SurfaceField& f, double s, bool dotted) {
  return D.apply_symbol(f, lambda_symbol(D, s, dotted));
}
StripField lambda_pow(const Discretization& D, const StripField& f, double s, bool dotted) {
  return D.apply_symbol(f, lambda_symbol(D, s, dotted));
}

SurfaceField mollify(const Discretization& D, const SurfaceField& f, double iota) {
  if (iota == 0.0) return f;
  return D.apply_symbol(f, mollifier_symbol(D, iota));
}
StripField mollify(const Discretization& D, const StripField& f, double iota) {
  if (iota == 0.0) return f;
  return D.apply_symbol(f, mollifier_symbol(D, iota));
}

StripField harmonic_extension(const Discretization& D, const SurfaceField& eta0) {
  const StripGrid& g = D.grid();
  StripField out(g);
  std::vector<cplx> c(D.modes()), cj(D.modes());
  D.forward(eta0.values(), c);
  for (int j = 0; j < g.slabs(); ++j) {
    const double r = g.r(j);
    for (std::size_t m = 0; m < c.size(); ++m) {
      const double a = D.xi_abs(m);
      // cosh(a(r+1))/cosh(a) without overflow
      const double ratio = (std::exp(a * r) + std::exp(-a * (r + 2.0))) / (1.0 + std::exp(-2.0 * a));
      cj[m] = c[m] * ratio;
    }
    D.inverse(cj, out.slab(j));
  }
  return out;
}

double sobolev_norm(const Discretization& D, const StripField& f, double s, int k) {
  if (k < 0) throw InsufficientResolution("negative vertical order");
  if (k > 4) throw InsufficientResolution("vertical order above 4 exceeds the stencil support");
  const auto trap = D.trapezoid();
  double total = 0.0;
  for (int l = 0; l <= k; ++l) {
    const StripField g = l == 0 ? f : D.vertical(l).apply(f);
    const auto sym = D.symbol([e = s - l](double xi) { return std::pow(1.0 + xi * xi, e); });
    double sq = 0.0;
    for (int j = 0; j < g.slabs(); ++j) sq += trap[std::size_t(j)] * D.parseval(g.slab(j), sym);
    total += std::sqrt(sq);
  }
  return total;
}

double sobolev_norm(const Discretization& D, const SurfaceField& f, double s) {
  const auto sym = D.symbol([s](double xi) { return std::pow(1.0 + xi * xi, s); });
  return std::sqrt(D.parseval(f.values(), sym));
}

SurfaceField trace(const StripField& f, Boundary at) {
  return f.slab_field(at == Boundary::bottom ? 0 : f.slabs() - 1);
}

double surface_integral(const SurfaceField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell();
}

double strip_integral(const Discretization& D, const StripField& f) {
  const auto trap = D.trapezoid();
  double s = 0.0;
  for (int j = 0; j < f.slabs(); ++j) {
    double sj = 0.0;
    for (double v : f.slab(j)) sj += v;
    s += trap[std::size_t(j)] * sj;
  }
  return s * f.grid().cell();
}

double ibp_residual(const Discretization& D, std::span<const StripField> F, const StripField& g,
                    const DiffeoFields& diffeo) {
  const int d = D.grid().d;
  if (int(F.size()) != d + 1) throw GridMismatch("ibp_residual: F needs d+1 components");
  const StripField& J = diffeo.depth;
  const StripField& Fr = F[std::size_t(d)];

  StripField div = sigma_dr(D, Fr, diffeo);
  for (int i = 0; i < d; ++i) div += sigma_dx(D, F[std::size_t(i)], i, diffeo);
  const double lhs = strip_integral(D, hadamard(hadamard(J, g), div));

  StripField adj = hadamard(Fr, sigma_dr(D, g, diffeo));
  for (int i = 0; i < d; ++i) adj += hadamard(F[std::size_t(i)], sigma_dx(D, g, i, diffeo));
  double rhs = -strip_integral(D, hadamard(J, adj));

  const int top = D.grid().nr;
  for (int j : {top, 0}) {
    SurfaceField flux = F[std::size_t(d)].slab_field(j);
    for (int i = 0; i < d; ++i)
      flux.axpy(-1.0, hadamard(F[std::size_t(i)].slab_field(j), diffeo.grad_sum[std::size_t(i)].slab_field(j)));
    const double b = surface_integral(hadamard(flux, g.slab_field(j)));
    rhs += j == top ? b : -b;
  }
  return std::abs(lhs - rhs);
}

}  // namespace sigmalab
