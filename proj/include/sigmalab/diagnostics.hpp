/// Energy functional, its equivalence bounds, blow-up monitoring and rate fits.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sigmalab/dynamics.hpp"

namespace sigmalab {

struct EnergyOrders {
  int s = 4;
  int s0 = 2;
  void validate() const;
};

struct EnergyReport {
  double E_s = 0.0;
  double E_low = 0.0;
  /// Squared weighted L2 norms of the good unknowns of V, sqrt(mu) w, sqrt(mu) rho.
  double alinhac_V = 0.0;
  double alinhac_w = 0.0;
  double alinhac_rho = 0.0;
  /// |sqrt(a) Lambda-dot^s eta0|^2.
  double surface_term = 0.0;
  /// iota3 |Lambda^{1/2} Lambda-dot^s eta0|^2 (mollified scheme only).
  double dispersive_term = 0.0;
  double vort_norm = 0.0;    ///< ||omega||_{H^{s-1}}
  double shear_ratio = 0.0;  ///< ||d_r V||_{H^{s-1}} / sqrt(mu)
  double drw_norm = 0.0;     ///< ||d_r w||_{H^{s-1}}
  double w_norm = 0.0;       ///< ||w||_{H^{s-1}}
  double taylor_min = 0.0;
  double t = 0.0;

  bool finite() const;
};

/// Every term of the energy for the state on the map `diffeo`, with the
/// Taylor weight computed from the pressure P.
EnergyReport energy(const Discretization& D, const StripState& s, const DiffeoFields& diffeo, const StripField& P,
                    const PhysParams& p, const EnergyOrders& orders = {}, double iota3 = 0.0);

/// Ratios of shear, d_r w and w to sqrt(E_s), compared against constants
/// fitted on a reference report.
struct EquivalenceCheck {
  double shear = 0.0, drw = 0.0, w = 0.0;
  bool pass = true;
  std::string detail;
};

class EquivalenceMonitor {
 public:
  /// Constants are `factor` times the ratios of the reference report.
  EquivalenceMonitor(const EnergyReport& reference, double factor = 4.0);
  EquivalenceCheck check(const EnergyReport& r) const;

 private:
  double shear_, drw_, w_;
};

EquivalenceCheck equivalence_ratios(const EnergyReport& r);

/// SolverFailure: the pressure solve or a coordinate change failed.
enum class BlowupStatus {
  Continue,
  TaylorDegenerate,
  NormBlowup,
  NonFinite,
  DepthDegenerate,
  DensityDegenerate,
  SolverFailure
};
std::string to_string(BlowupStatus s);

struct BlowupThresholds {
  double c_star = 0.1;
  double h_min = 0.1;
  double growth = 10.0;
};

/// NormBlowup fires when sqrt(E_s), sqrt(E_low) or one of the vorticity,
/// shear and w norms exceeds `growth` times its reference: the initial value,
/// floored at the initial sqrt(E_s) for the three component norms.
class BlowupMonitor {
 public:
  BlowupMonitor(const EnergyReport& initial, BlowupThresholds th = {});
  BlowupStatus check(const EnergyReport& r, const NondegeneracyReport* geometry = nullptr) const;
  const BlowupThresholds& thresholds() const { return th_; }

 private:
  std::vector<double> norms(const EnergyReport& r) const;
  std::vector<double> initial_;
  BlowupThresholds th_;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< RMS deviation of log(error) from the fitted line
  double slope_stderr = 0.0;
  bool degenerate = false;
  std::string note;
};

/// Least squares of log(error) against log(mu). Needs three samples spanning
/// two decades; errors at or below `noise_floor` set the degenerate flag.
RateFit fit_rate(const std::vector<std::pair<double, double>>& samples, double noise_floor = 1e-13);

/// max over t > 0 of log(E(t)/E(0)) / t.
double gronwall_rate(const std::vector<double>& times, const std::vector<double>& energies);

}  // namespace sigmalab
