/// Fourier machinery in the horizontal, finite-difference stencils in r,
/// quadrature on the strip, and the Sobolev-type norms built from them.
#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "sigmalab/grid.hpp"

namespace sigmalab {

using cplx = std::complex<double>;

/// Finite-difference weights for the m-th derivative at z on arbitrary nodes.
std::vector<double> fornberg_weights(double z, std::span<const double> nodes, int m);

/// Row-wise stencil for the m-th r-derivative on the uniform r-grid:
/// centered where it fits, one-sided against the boundaries.
class VerticalStencil {
 public:
  VerticalStencil(int nr, int derivative, int accuracy = 4);

  int derivative() const { return m_; }
  int start(int j) const { return start_[std::size_t(j)]; }
  std::span<const double> weights(int j) const { return w_[std::size_t(j)]; }

  StripField apply(const StripField& f) const;
  /// Derivative at slab j only.
  SurfaceField apply_at(const StripField& f, int j) const;

 private:
  int m_;
  std::vector<int> start_;
  std::vector<std::vector<double>> w_;
};

/// Everything that depends only on the grid: FFT plans, wave numbers,
/// vertical stencils and quadrature weights. Const member functions are safe
/// to call from several threads at once.
class Discretization {
 public:
  explicit Discretization(const StripGrid& g);
  ~Discretization();
  Discretization(const Discretization&) = delete;
  Discretization& operator=(const Discretization&) = delete;

  const StripGrid& grid() const { return grid_; }

  // Fourier layout (real-to-complex, last direction halved).
  std::size_t modes() const { return nmodes_; }
  int mode_index(std::size_t m, int dir) const;
  double wavenumber(std::size_t m, int dir) const;
  /// Symbol of d/dx_dir divided by i (zero on the Nyquist line).
  double derivative_symbol(std::size_t m, int dir) const;
  double xi_abs(std::size_t m) const { return xi_abs_[m]; }
  /// Integer |index|^2 shared by all modes with the same |xi|.
  int index_sq(std::size_t m) const { return index_sq_[m]; }
  /// Weight of the mode in a Parseval sum over the half spectrum.
  double multiplicity(std::size_t m) const { return mult_[m]; }
  bool dealias_keep(std::size_t m) const { return keep_[m]; }

  void forward(std::span<const double> in, std::span<cplx> out) const;
  /// Normalized inverse transform.
  void inverse(std::span<const cplx> in, std::span<double> out) const;

  /// Tabulate a radial real symbol over the modes.
  std::vector<double> symbol(const std::function<double(double)>& of_xi) const;
  SurfaceField apply_symbol(const SurfaceField& f, std::span<const double> sym) const;
  StripField apply_symbol(const StripField& f, std::span<const double> sym) const;

  SurfaceField dx(const SurfaceField& f, int dir) const;
  StripField dx(const StripField& f, int dir) const;
  std::vector<SurfaceField> gradient(const SurfaceField& f) const;
  std::vector<StripField> gradient(const StripField& f) const;
  SurfaceField divergence(std::span<const SurfaceField> f) const;
  StripField divergence(std::span<const StripField> f) const;
  SurfaceField dealias(const SurfaceField& f) const;
  StripField dealias(const StripField& f) const;

  /// m-th r-derivative stencil, 1 <= m <= 4.
  const VerticalStencil& vertical(int m) const;
  StripField dr(const StripField& f) const { return vertical(1).apply(f); }
  StripField drr(const StripField& f) const { return vertical(2).apply(f); }

  /// Trapezoid weights in r (sum to 1), used by norms and strip integrals.
  std::span<const double> trapezoid() const { return trap_; }
  /// Fourth-order end-corrected weights in r, used for column integrals.
  std::span<const double> gregory() const { return greg_; }
  /// \int_{-1}^0 f dr per column.
  SurfaceField column_integral(const StripField& f) const;

  /// Sum over the half spectrum of mult * sym * |f_hat|^2, scaled so that
  /// sym == 1 gives the L2(T^d) norm squared.
  double parseval(std::span<const double> f, std::span<const double> sym) const;

 private:
  struct Plans;
  StripGrid grid_;
  std::size_t nmodes_ = 0;
  std::vector<double> xi_abs_, mult_;
  std::vector<int> index_sq_;
  std::vector<char> keep_;
  std::vector<VerticalStencil> stencils_;
  std::vector<double> trap_, greg_;
  std::unique_ptr<Plans> plans_;
};

/// Smooth cutoff, 1 on [0,1], 0 on [2,inf).
double cutoff_bump(double t);

SurfaceField lambda_pow(const Discretization& D, const SurfaceField& f, double s, bool dotted = false);
StripField lambda_pow(const Discretization& D, const StripField& f, double s, bool dotted = false);

SurfaceField mollify(const Discretization& D, const SurfaceField& f, double iota);
StripField mollify(const Discretization& D, const StripField& f, double iota);

/// Harmonic extension with Dirichlet data at r=0 and zero Neumann at r=-1.
StripField harmonic_extension(const Discretization& D, const SurfaceField& eta0);

/// Sum_{l<=k} ||Lambda^{s-l} d_r^l f||_{L2(S)}.
double sobolev_norm(const Discretization& D, const StripField& f, double s, int k);
/// |f|_{H^s(T^d)}.
double sobolev_norm(const Discretization& D, const SurfaceField& f, double s);

enum class Boundary { bottom, surface };
SurfaceField trace(const StripField& f, Boundary at);

double strip_integral(const Discretization& D, const StripField& f);
double surface_integral(const SurfaceField& f);

struct DiffeoFields;
/// Defect of the discrete integration-by-parts identity on the strip for a
/// (d+1)-vector field F (horizontal components first) and a scalar g.
double ibp_residual(const Discretization& D, std::span<const StripField> F, const StripField& g,
                    const DiffeoFields& diffeo);

}  // namespace sigmalab
