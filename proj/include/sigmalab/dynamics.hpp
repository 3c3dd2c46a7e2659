/// Tendencies, vorticity, time stepping and discrete incompressibility for the
/// sigma-coordinate Euler system.
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sigmalab/pressure.hpp"

namespace sigmalab {

/// omega_x: d components (one scalar when d = 1); omega_r: d = 2 only.
struct VorticityField {
  std::vector<StripField> omega_x;
  std::optional<StripField> omega_r;
};

/// (1/sqrt(mu)) d_r V^perp - sqrt(mu) grad^perp w and grad^perp . V, all
/// derivatives taken along the sigma-coordinate map. For d = 1 the single
/// component is (1/sqrt(mu)) d_r V - sqrt(mu) d_x w.
VorticityField vorticity(const Discretization& D, const StripState& s, const DiffeoFields& diffeo,
                         const PhysParams& p);

/// Baroclinic source F; the vorticity equation carries it as (delta/sqrt(mu)) F.
VorticityField vorticity_source(const Discretization& D, const StripState& s, const StripField& P,
                                const DiffeoFields& diffeo, const PhysParams& p);

/// (V, w) -= (1/density) (grad^phi P, d_r^phi P / mu).
void subtract_potential_gradient(const Discretization& D, const StripField& P, const DiffeoFields& diffeo,
                                 const StripField& density, double mu, std::vector<StripField>& V, StripField& w);

/// (1/J)(div(J V) + d_r(w - G.V)) on every slab.
StripField discrete_divergence(const Discretization& D, std::span<const StripField> V, const StripField& w,
                               const DiffeoFields& diffeo);
/// max |w - G.V| on the bottom.
double bottom_normal_flux(const Discretization& D, std::span<const StripField> V, const StripField& w,
                          const DiffeoFields& diffeo);
/// L2 norm of the divergence over the interior slabs plus the bottom normal
/// flux, relative to ||(V, sqrt(mu) w)||.
double divergence_residual(const Discretization& D, std::span<const StripField> V, const StripField& w,
                           const DiffeoFields& diffeo, double mu);

struct DynamicsOptions {
  bool dealias = true;
  bool project = true;
  double cfl = 0.4;
  SolveOptions pressure{1e-10, 0, 60, FluxForm::conservative};
};

/// Tendencies together with the pressure that produced them.
struct Tendency {
  StripState rate;
  StripField pressure;
};

class EulerSystem {
 public:
  EulerSystem(const Discretization& D, Bathymetry bathymetry, PhysParams params, DynamicsOptions opt = {});

  const Discretization& disc() const { return *D_; }
  const PhysParams& params() const { return p_; }
  const Bathymetry& bathymetry() const { return b_; }
  const DynamicsOptions& options() const { return opt_; }

  DiffeoFields diffeo(const StripState& s) const;
  StripField pressure(const StripState& s) const;
  Tendency rhs(const StripState& s) const;

  /// Classical RK4 followed by projection. Throws CFLViolation when |dt|
  /// exceeds max_dt.
  StripState step(const StripState& s, double dt) const;
  double max_dt(const StripState& s) const;

  /// Removes the discrete divergence and restores bottom impermeability.
  StripState project(const StripState& s) const;
  /// (1/J)(div(J V) + d_r(w - G.V)) on every slab.
  StripField divergence(const StripState& s) const;
  /// L2 norm of the divergence over the interior slabs and of the bottom
  /// normal flux, relative to ||(V, sqrt(mu) w)||.
  double divergence_residual(const StripState& s) const;
  /// max |w - beta grad b . V| on the bottom.
  double bottom_flux(const StripState& s) const;
  /// \int (1 - beta b + eps eta0) dx.
  double fluid_volume(const StripState& s) const;

 private:
  const Discretization* D_;
  Bathymetry b_;
  PhysParams p_;
  DynamicsOptions opt_;
};

/// Eulerian streamfunction psi(x, z) (d = 1): V = d_z psi, w = -d_x psi,
/// evaluated through the map built from eta0. Throws InvalidStreamfunction
/// unless psi is constant along the bottom.
StripState init_from_streamfunction(const EulerSystem& sys, const std::function<double(double, double)>& psi,
                                    const StripField& rho0, const SurfaceField& eta0);

}  // namespace sigmalab
