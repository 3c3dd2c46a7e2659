#include "sigmalab/grid.hpp"

#include <algorithm>
#include <string>

namespace sigmalab {

void StripGrid::validate() const {
  if (d != 1 && d != 2) throw ConfigError("grid.d must be 1 or 2");
  if (nx < 8 || (nx & (nx - 1)) != 0) throw ConfigError("grid.nx must be a power of two >= 8");
  if (nr < 8) throw ConfigError("grid.nr must be >= 8");
  if (!(L > 0.0)) throw ConfigError("grid.L must be positive");
}

void require_same_grid(const StripGrid& a, const StripGrid& b, const char* where) {
  if (!(a == b)) throw GridMismatch(std::string(where) + ": fields live on different grids");
}

namespace {
template <class V>
double max_abs_of(const V& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}
}  // namespace

double SurfaceField::mean() const {
  double s = 0.0;
  for (double x : v_) s += x;
  return v_.empty() ? 0.0 : s / double(v_.size());
}
double SurfaceField::max_abs() const { return max_abs_of(v_); }
double SurfaceField::min() const { return *std::min_element(v_.begin(), v_.end()); }
double SurfaceField::max() const { return *std::max_element(v_.begin(), v_.end()); }

SurfaceField& SurfaceField::operator+=(const SurfaceField& o) {
  require_same_grid(grid_, o.grid_, "SurfaceField::+=");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}
SurfaceField& SurfaceField::operator-=(const SurfaceField& o) {
  require_same_grid(grid_, o.grid_, "SurfaceField::-=");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}
SurfaceField& SurfaceField::operator*=(double a) {
  for (double& x : v_) x *= a;
  return *this;
}
SurfaceField& SurfaceField::axpy(double a, const SurfaceField& o) {
  require_same_grid(grid_, o.grid_, "SurfaceField::axpy");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * o.v_[i];
  return *this;
}

SurfaceField StripField::slab_field(int j) const {
  SurfaceField f(grid_);
  std::ranges::copy(slab(j), f.values().begin());
  return f;
}

void StripField::set_slab(int j, const SurfaceField& f) {
  if (f.size() != grid_.nh()) throw GridMismatch("StripField::set_slab");
  std::ranges::copy(f.values(), slab(j).begin());
}

StripField StripField::columnar(const SurfaceField& f) {
  StripField out(f.grid());
  for (int j = 0; j < out.slabs(); ++j) out.set_slab(j, f);
  return out;
}

double StripField::max_abs() const { return max_abs_of(v_); }
double StripField::min() const { return *std::min_element(v_.begin(), v_.end()); }
double StripField::max() const { return *std::max_element(v_.begin(), v_.end()); }

StripField& StripField::operator+=(const StripField& o) {
  require_same_grid(grid_, o.grid_, "StripField::+=");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}
StripField& StripField::operator-=(const StripField& o) {
  require_same_grid(grid_, o.grid_, "StripField::-=");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}
StripField& StripField::operator*=(double a) {
  for (double& x : v_) x *= a;
  return *this;
}
StripField& StripField::axpy(double a, const StripField& o) {
  require_same_grid(grid_, o.grid_, "StripField::axpy");
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * o.v_[i];
  return *this;
}

StripField operator+(StripField a, const StripField& b) { return a += b; }
StripField operator-(StripField a, const StripField& b) { return a -= b; }
StripField operator*(double s, StripField a) { return a *= s; }
SurfaceField operator+(SurfaceField a, const SurfaceField& b) { return a += b; }
SurfaceField operator-(SurfaceField a, const SurfaceField& b) { return a -= b; }
SurfaceField operator*(double s, SurfaceField a) { return a *= s; }

StripField hadamard(const StripField& a, const StripField& b) {
  require_same_grid(a.grid(), b.grid(), "hadamard");
  StripField out(a.grid());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

StripField hadamard(const StripField& a, const SurfaceField& b) {
  require_same_grid(a.grid(), b.grid(), "hadamard");
  StripField out(a.grid());
  const std::size_t nh = a.slab_size();
  for (int j = 0; j < a.slabs(); ++j)
    for (std::size_t i = 0; i < nh; ++i) out(j, i) = a(j, i) * b[i];
  return out;
}

SurfaceField hadamard(const SurfaceField& a, const SurfaceField& b) {
  require_same_grid(a.grid(), b.grid(), "hadamard");
  SurfaceField out(a.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace sigmalab
