/// Nonlinear shallow-water system, its lift to the strip, and the distance
/// between a strip solution and a shallow-water one.
#pragma once

#include <vector>

#include "sigmalab/dynamics.hpp"

namespace sigmalab {

struct SWState {
  std::vector<SurfaceField> V;
  SurfaceField eta;
  double t = 0.0;

  static SWState rest(const StripGrid& g);
  const StripGrid& grid() const { return eta.grid(); }
  SWState& axpy(double a, const SWState& o);
  double max_abs() const;
  bool finite() const;
};

struct SWOptions {
  bool dealias = true;
  double cfl = 0.4;
  double h_min = 0.1;
};

class SWSystem {
 public:
  SWSystem(const Discretization& D, Bathymetry bathymetry, PhysParams params, SWOptions opt = {});

  const Discretization& disc() const { return *D_; }
  const PhysParams& params() const { return p_; }
  const Bathymetry& bathymetry() const { return b_; }

  /// 1 - beta b + eps eta.
  SurfaceField depth(const SWState& s) const;
  /// d_t eta = -div(H V), d_t V = -eps V.grad V - g grad eta. Throws
  /// DegenerateDepth when H drops below h_min.
  SWState rhs(const SWState& s) const;
  /// Classical RK4. Throws CFLViolation when |dt| exceeds max_dt.
  SWState step(const SWState& s, double dt) const;
  double max_dt(const SWState& s) const;

  /// \int H dx.
  double mass(const SWState& s) const;
  /// \int H |V|^2 / 2 + g eta^2 / 2 dx.
  double energy(const SWState& s) const;
  /// |(V, eta)|_{H^order}.
  double regularity(const SWState& s, double order) const;

 private:
  const Discretization* D_;
  Bathymetry b_;
  PhysParams p_;
  SWOptions opt_;
};

/// Columnar V, w_sw = beta V.grad b - (r + 1) H div V, rho = 0, eta0 = eta.
StripState lift_sw(const Discretization& D, const SWState& sw, const Bathymetry& b, const PhysParams& p);

struct ComparisonReport {
  double err_V = 0.0;     ///< ||V - V_sw||_{H^s(S)}
  double err_eta = 0.0;   ///< |eta0 - eta_sw|_{H^s}
  double err_w = 0.0;     ///< sqrt(mu) ||w - w_sw||_{H^s(S)}
  double shear = 0.0;     ///< ||d_r V||_{H^{s-1}} / sqrt(mu)
  double rho_norm = 0.0;  ///< sqrt(mu) ||rho||_{H^s}
  double t = 0.0;

  /// ||(V - V_sw, sqrt(mu)(w - w_sw))||_{H^s} + |eta0 - eta_sw|_{H^s}
  /// + ||sqrt(mu) rho||_{H^s} + ||d_r V||_{H^{s-1}} / sqrt(mu).
  double closeness() const;
  bool finite() const;
};

ComparisonReport compare(const Discretization& D, const StripState& euler, const SWState& sw, const Bathymetry& b,
                         const PhysParams& p, int s = 4);

struct PreparedData {
  StripState state;
  ComparisonReport report;
  double closeness = 0.0;
};

/// Lift of sw plus a shear perturbation from the streamfunction
/// cos(x)(z + 1 - beta b)^2 scaled so that ||d_r V||_{H^{s-1}}/sqrt(mu) is
/// shear_amp sqrt(mu), and a density sin(x)(1 + r)^2 scaled so that
/// ||rho||_{H^s} = rho_amp; projected divergence-free when either amplitude
/// is non-zero. Throws ConfigError unless delta <= mu (and for a shear on
/// d = 2), and PreparationFailed when the closeness exceeds sqrt(mu).
PreparedData well_prepared_init(const EulerSystem& sys, const SWState& sw, double shear_amp, double rho_amp,
                                int s = 4);

}  // namespace sigmalab
