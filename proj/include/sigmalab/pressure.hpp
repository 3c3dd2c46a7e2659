/// The anisotropic elliptic problem for the pressure, its solver, and the
/// Rayleigh-Taylor coefficient.
#pragma once

#include <vector>

#include "sigmalab/geometry.hpp"
#include "sigmalab/state.hpp"

namespace sigmalab {

/// div_mu (A grad_mu P - R) = 0 in the strip, P = 0 at r = 0, and
/// e_r . (A grad_mu P - R) = 0 at r = -1, with grad_mu = (sqrt(mu) grad_x, d_r).
/// A = [[a_hh I, a_hr], [a_hr^T, a_rr]].
struct EllipticProblem {
  double mu = 1.0;
  StripField a_hh;
  std::vector<StripField> a_hr;
  StripField a_rr;
  std::vector<StripField> R;  ///< d horizontal components, then the vertical one

  const StripGrid& grid() const { return a_hh.grid(); }
  /// Smallest eigenvalue of A over all nodes.
  double min_eigenvalue() const;
  /// Throws IllConditioned unless A is positive definite at every node.
  void check_spd() const;
};

/// How the divergence of the flux is discretized.
/// compact: r-derivatives of a_rr d_r P expanded with the second-derivative
///   stencil (fourth order, used for the pressure);
/// conservative: d_r applied to the assembled vertical flux, the exact
///   discrete composition of divergence and gradient (used for projection).
enum class FluxForm { compact, conservative };

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 0;  ///< 0 selects 10 sqrt(n_h n_r)
  int restart = 60;
  FluxForm form = FluxForm::compact;
};

struct SolveStats {
  int iterations = 0;
  double rel_residual = 0.0;
  std::vector<double> history;
};

/// Coefficients A for density `density` (rho_bar + eps delta rho); R is zero.
EllipticProblem elliptic_coefficients(const DiffeoFields& diffeo, const StripField& density, double mu);

/// R = (sqrt(mu) J F_V, mu (F_w - G.F_V)) for non-pressure accelerations
/// (F_V, F_w) of the sigma-frame momentum equations.
EllipticProblem assemble_from_forcing(const DiffeoFields& diffeo, const StripField& density,
                                      const PhysParams& p, const std::vector<StripField>& F_V,
                                      const StripField& F_w);

/// V.grad^phi f + w d_r^phi f for the velocity carried by s.
StripField sigma_advection(const Discretization& D, const StripState& s, const DiffeoFields& diffeo,
                           const StripField& f);

/// Non-pressure accelerations of the sigma-coordinate Euler system.
struct Forcing {
  std::vector<StripField> V;
  StripField w;
};
Forcing euler_forcing(const Discretization& D, const StripState& s, const DiffeoFields& diffeo,
                      const PhysParams& p);

EllipticProblem assemble_pressure_problem(const Discretization& D, const StripState& s,
                                          const DiffeoFields& diffeo, const PhysParams& p);

/// Discrete operator and right-hand side (rows: bottom condition at slab 0,
/// interior equation, Dirichlet row at the surface).
void apply_elliptic(const Discretization& D, const EllipticProblem& prob, FluxForm form,
                    std::span<const double> P, std::span<double> out);
std::vector<double> elliptic_rhs(const Discretization& D, const EllipticProblem& prob);

StripField solve_pressure(const Discretization& D, const EllipticProblem& prob, const SolveOptions& opt = {},
                          SolveStats* stats = nullptr);

struct TaylorCoefficient {
  SurfaceField a;
  double min() const { return a.min(); }
};

TaylorCoefficient taylor_coefficient(const Discretization& D, const StripField& P, const DiffeoFields& diffeo,
                                     const PhysParams& p);

/// Backward difference in time of the last stored coefficients (second order
/// with three or more entries).
SurfaceField taylor_time_derivative(const std::vector<TaylorCoefficient>& history, double dt);

}  // namespace sigmalab
