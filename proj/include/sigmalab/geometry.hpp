/// Physical parameters, bathymetry, the sigma-coordinate map and the
/// differential operators it induces on the flat strip.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sigmalab/spectral.hpp"

namespace sigmalab {

struct PhysParams {
  double eps = 0.1;
  double beta = 0.0;
  double mu = 0.1;
  double delta = 0.0;
  double g = 1.0;
  double rho_bar = 1.0;

  void validate() const;
  double eps_or_beta() const { return std::max(eps, beta); }
};

/// Lower/upper depth bounds and the floor for density and Taylor coefficient.
struct Admissibility {
  double h_min = 0.1;
  double h_max = 10.0;
  double c_star = 0.1;
};

class Bathymetry {
 public:
  static Bathymetry flat(const Discretization& D);
  /// amplitude * prod_dir cos(2 pi mode x_dir / L)
  static Bathymetry cosine_bump(const Discretization& D, double amplitude, int mode = 1);
  /// amplitude * exp(-|x - center|^2 / width^2), centered in the box.
  static Bathymetry gaussian_ridge(const Discretization& D, double amplitude, double width);
  /// Two whitespace-separated columns (x, b); periodic linear resampling onto
  /// the grid. Lines starting with '#' are skipped. d = 1 only.
  static Bathymetry from_file(const Discretization& D, const std::string& path);
  static Bathymetry from_values(const Discretization& D, SurfaceField b);

  const SurfaceField& b() const { return b_; }
  const std::vector<SurfaceField>& grad() const { return grad_; }
  /// min over the grid of 1 - beta b.
  double min_depth(double beta) const;
  /// Throws DegenerateDepth when 1 - beta b < h_min somewhere.
  void check(double beta, double h_min) const;

 private:
  SurfaceField b_;
  std::vector<SurfaceField> grad_;
};

/// Metric data of the map (x,r) -> (x, eta_bar + eps eta).
struct DiffeoFields {
  StripField eta_bar;
  StripField eta;
  StripField h_bar;
  StripField h;
  std::vector<StripField> grad_sum;  ///< horizontal gradient of eta_bar + eps eta
  StripField depth;                  ///< h_bar + eps h
  std::optional<StripField> dt_eta;
  double eps = 0.0;

  /// eta_bar + eps eta, the physical height of each node.
  StripField height() const;
};

/// Linear-in-r map eta = (1+r) eta0.
DiffeoFields build_diffeo(const Discretization& D, const Bathymetry& b, const SurfaceField& eta0,
                          const PhysParams& p);
/// Map carried by an arbitrary eta field (semi-Lagrangian scheme).
DiffeoFields build_diffeo_general(const Discretization& D, const Bathymetry& b, const StripField& eta,
                                  const PhysParams& p);

struct SigmaGradient {
  std::vector<StripField> horizontal;
  StripField vertical;
};

SigmaGradient sigma_grad(const Discretization& D, const StripField& f, const DiffeoFields& diffeo);
StripField sigma_dx(const Discretization& D, const StripField& f, int dir, const DiffeoFields& diffeo);
StripField sigma_dr(const Discretization& D, const StripField& f, const DiffeoFields& diffeo);

/// Lambda-dot^s f - (Lambda-dot^s height / depth) d_r f.
StripField alinhac_unknown(const Discretization& D, const StripField& f, double s,
                           const DiffeoFields& diffeo);

struct NondegeneracyReport {
  double min_depth = 0.0;
  double max_depth = 0.0;
  double min_density = 0.0;
  bool depth_ok = false;
  bool density_ok = false;
};

NondegeneracyReport check_nondegeneracy(const StripField& rho, const DiffeoFields& diffeo,
                                        const PhysParams& p, const Admissibility& adm);

/// rho_bar + eps delta rho.
StripField total_density(const StripField& rho, const PhysParams& p);

}  // namespace sigmalab
