/// Semi-Lagrangian coordinates and the mollified system with dispersive
/// surface regularization, run as an independent integrator.
#pragma once

#include <optional>
#include <vector>

#include "sigmalab/diagnostics.hpp"

namespace sigmalab {

/// Horizontal mollification scales (iota1 on the transported field, iota2 on
/// the transporting velocity and the forcing) and the dispersion strength
/// iota3. Zero switches the corresponding regularization off.
struct MollParams {
  double iota1 = 0.0;
  double iota2 = 0.0;
  double iota3 = 0.0;
  void validate() const;
};

/// (V, w, rho) on semi-Lagrangian coordinates whose map is carried by the
/// general field eta: height = eta_bar + eps eta. The surface slab of eta is
/// the free surface eta0.
struct SlagState {
  std::vector<StripField> V;
  StripField w;
  StripField rho;
  StripField eta;
  double t = 0.0;

  static SlagState rest(const StripGrid& g);
  const StripGrid& grid() const { return w.grid(); }
  SurfaceField eta0() const { return eta.slab_field(grid().nr); }
  /// The fields as a sigma-coordinate state (same nodes, eta0 from eta).
  StripState fields() const;

  SlagState& axpy(double a, const SlagState& o);
  double max_abs() const;
  bool finite() const;
};

double max_difference(const SlagState& a, const SlagState& b);

struct MollOptions {
  bool dealias = true;
  double cfl = 0.4;
  SolveOptions pressure{1e-10, 0, 60, FluxForm::conservative};
  Admissibility admissibility{};
};

struct SlagTendency {
  SlagState rate;
  StripField pressure;
};

class MollSystem {
 public:
  MollSystem(const Discretization& D, Bathymetry bathymetry, PhysParams params, MollParams moll,
             MollOptions opt = {});

  const Discretization& disc() const { return *D_; }
  const PhysParams& params() const { return p_; }
  const MollParams& moll() const { return m_; }
  const Bathymetry& bathymetry() const { return b_; }

  /// Throws DegenerateDiffeo when the vertical stretching drops below h_min.
  DiffeoFields diffeo(const SlagState& s) const;
  SlagTendency rhs(const SlagState& s) const;
  StripField pressure(const SlagState& s) const { return rhs(s).pressure; }

  /// Classical RK4. Throws CFLViolation when |dt| exceeds max_dt.
  SlagState step(const SlagState& s, double dt) const;
  /// Gravity and dispersion wave speeds plus horizontal transport.
  double max_dt(const SlagState& s) const;

  /// Energy with the extra iota3 half-derivative surface term.
  EnergyReport energy(const SlagState& s, const EnergyOrders& orders = {}) const;
  /// Relative L2 norm of the divergence along the map over interior slabs.
  double divergence_residual(const SlagState& s) const;

 private:
  const Discretization* D_;
  Bathymetry b_;
  PhysParams p_;
  MollParams m_;
  MollOptions opt_;
};

struct MollRun {
  SlagState state;
  std::vector<EnergyReport> energy;
  BlowupStatus status = BlowupStatus::Continue;
  int steps = 0;
};

/// RK4 to time T with the largest uniform step not above dt (dt <= 0 selects
/// the CFL step of the initial state). The energy is recorded every
/// `energy_every` steps and at the end; the run halts on a blow-up flag.
MollRun run_moll(const MollSystem& sys, SlagState initial, double T, double dt = 0.0, int energy_every = 10,
                 BlowupThresholds thresholds = {});

/// Resamples the fields onto the linear-in-r map of eta0 (monotone cubic per
/// column). Throws InterpolationOutOfRange when a target height leaves the
/// column.
StripState slag_to_sigma(const Discretization& D, const Bathymetry& b, const PhysParams& p, const SlagState& s);

/// Inverse resampling onto the map carried by eta; without eta the two maps
/// coincide and the fields are copied.
SlagState sigma_to_slag(const Discretization& D, const Bathymetry& b, const PhysParams& p, const StripState& s,
                        const std::optional<StripField>& eta = std::nullopt);

/// (1 + r) eta0.
StripField linear_profile(const SurfaceField& eta0);

}  // namespace sigmalab
