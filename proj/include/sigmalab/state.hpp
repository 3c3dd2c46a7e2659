/// Prognostic state of the sigma-coordinate solver.
#pragma once

#include <vector>

#include "sigmalab/grid.hpp"

namespace sigmalab {

/// (V, w, rho, eta0) at time t. The same type carries tendencies.
struct StripState {
  std::vector<StripField> V;
  StripField w;
  StripField rho;
  SurfaceField eta0;
  double t = 0.0;

  static StripState rest(const StripGrid& g);
  const StripGrid& grid() const { return w.grid(); }

  /// Field-wise this += a*o; time is left alone.
  StripState& axpy(double a, const StripState& o);
  StripState& operator*=(double a);
  /// Largest |value| over every field.
  double max_abs() const;
  bool finite() const;
};

/// Largest field-wise L-infinity difference.
double max_difference(const StripState& a, const StripState& b);

}  // namespace sigmalab
