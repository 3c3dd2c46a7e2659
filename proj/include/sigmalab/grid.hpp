/// Strip mesh T^d x [-1,0] and the two field containers living on it.
#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "sigmalab/errors.hpp"

namespace sigmalab {

/// Periodic in the horizontal (period L per direction, n_x points each),
/// uniform in r with n_r intervals. Slab j sits at r = -1 + j/n_r, so slab 0
/// is the bottom and slab n_r the surface.
struct StripGrid {
  int d = 1;
  int nx = 64;
  double L = 2.0 * std::numbers::pi;
  int nr = 16;

  void validate() const;
  std::size_t nh() const { return d == 1 ? std::size_t(nx) : std::size_t(nx) * nx; }
  int slabs() const { return nr + 1; }
  std::size_t size() const { return nh() * std::size_t(slabs()); }
  double dr() const { return 1.0 / nr; }
  double r(int j) const { return j == nr ? 0.0 : -1.0 + j * dr(); }
  double dx() const { return L / nx; }
  /// Coordinate along direction `dir` of horizontal node `i` (row-major,
  /// direction 0 varies slowest).
  double x(std::size_t i, int dir) const {
    const std::size_t ix = d == 1 ? i : (dir == 0 ? i / nx : i % nx);
    return dx() * double(ix);
  }
  /// Horizontal cell measure dx^d.
  double cell() const { return std::pow(dx(), d); }
  double area() const { return std::pow(L, d); }

  bool operator==(const StripGrid&) const = default;
};

/// Real values on the horizontal grid.
class SurfaceField {
 public:
  SurfaceField() = default;
  explicit SurfaceField(const StripGrid& g, double fill = 0.0) : grid_(g), v_(g.nh(), fill) {}

  const StripGrid& grid() const { return grid_; }
  std::size_t size() const { return v_.size(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  std::span<double> values() { return v_; }
  std::span<const double> values() const { return v_; }

  double mean() const;
  double max_abs() const;
  double min() const;
  double max() const;

  SurfaceField& operator+=(const SurfaceField& o);
  SurfaceField& operator-=(const SurfaceField& o);
  SurfaceField& operator*=(double a);
  /// this += a*o
  SurfaceField& axpy(double a, const SurfaceField& o);

 private:
  StripGrid grid_;
  std::vector<double> v_;
};

/// Real values on all strip nodes, stored slab by slab (n_r+1 slabs of nh).
class StripField {
 public:
  StripField() = default;
  explicit StripField(const StripGrid& g, double fill = 0.0) : grid_(g), v_(g.size(), fill) {}

  const StripGrid& grid() const { return grid_; }
  std::size_t size() const { return v_.size(); }
  std::size_t slab_size() const { return grid_.nh(); }
  int slabs() const { return grid_.slabs(); }

  double& operator()(int j, std::size_t i) { return v_[std::size_t(j) * grid_.nh() + i]; }
  double operator()(int j, std::size_t i) const { return v_[std::size_t(j) * grid_.nh() + i]; }
  double& operator[](std::size_t k) { return v_[k]; }
  double operator[](std::size_t k) const { return v_[k]; }

  std::span<double> slab(int j) { return {v_.data() + std::size_t(j) * grid_.nh(), grid_.nh()}; }
  std::span<const double> slab(int j) const {
    return {v_.data() + std::size_t(j) * grid_.nh(), grid_.nh()};
  }
  std::span<double> values() { return v_; }
  std::span<const double> values() const { return v_; }

  /// Copy of slab j as a surface field.
  SurfaceField slab_field(int j) const;
  void set_slab(int j, const SurfaceField& f);
  /// r-independent extension of a surface field.
  static StripField columnar(const SurfaceField& f);

  double max_abs() const;
  double min() const;
  double max() const;

  StripField& operator+=(const StripField& o);
  StripField& operator-=(const StripField& o);
  StripField& operator*=(double a);
  StripField& axpy(double a, const StripField& o);

 private:
  StripGrid grid_;
  std::vector<double> v_;
};

StripField operator+(StripField a, const StripField& b);
StripField operator-(StripField a, const StripField& b);
StripField operator*(double s, StripField a);
SurfaceField operator+(SurfaceField a, const SurfaceField& b);
SurfaceField operator-(SurfaceField a, const SurfaceField& b);
SurfaceField operator*(double s, SurfaceField a);

/// Pointwise product.
StripField hadamard(const StripField& a, const StripField& b);
/// Multiply every slab of a strip field by a surface field.
StripField hadamard(const StripField& a, const SurfaceField& b);
SurfaceField hadamard(const SurfaceField& a, const SurfaceField& b);

/// Throws GridMismatch unless both grids agree.
void require_same_grid(const StripGrid& a, const StripGrid& b, const char* where);

}  // namespace sigmalab
