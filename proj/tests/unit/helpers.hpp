// Field builders and small numeric helpers shared by the unit tests.
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "sigmalab/grid.hpp"
#include "sigmalab/spectral.hpp"

namespace testing {

using namespace sigmalab;
inline constexpr double pi = std::numbers::pi;

template <class F>
SurfaceField surface(const StripGrid& g, F&& f) {
  SurfaceField out(g);
  for (std::size_t i = 0; i < g.nh(); ++i) out[i] = f(g.x(i, 0));
  return out;
}

template <class F>
StripField strip(const StripGrid& g, F&& f) {
  StripField out(g);
  for (int j = 0; j < g.slabs(); ++j)
    for (std::size_t i = 0; i < g.nh(); ++i) out(j, i) = f(g.x(i, 0), g.r(j));
  return out;
}

inline double max_diff(const StripField& a, const StripField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double max_diff(const SurfaceField& a, const SurfaceField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

/// Observed order from errors at successive halvings of the mesh size.
inline double order(double coarse, double fine) { return std::log2(coarse / fine); }

/// Least-squares order from errors at successive halvings of the mesh size.
inline double fitted_order(const std::vector<double>& errors) {
  const double n = double(errors.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    const double x = double(k), y = -std::log2(errors[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Random trigonometric polynomial in x of degree <= kmax with unit-scale
/// coefficients, returned as coefficient pairs.
struct RandomModes {
  std::vector<double> a, b;
  RandomModes(int kmax, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k <= kmax; ++k) {
      a.push_back(u(rng) / (1.0 + k * k));
      b.push_back(k == 0 ? 0.0 : u(rng) / (1.0 + k * k));
    }
  }
  double operator()(double x, double L) const {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double t = 2.0 * pi * double(k) * x / L;
      s += a[k] * std::cos(t) + b[k] * std::sin(t);
    }
    return s;
  }
};

}  // namespace testing
