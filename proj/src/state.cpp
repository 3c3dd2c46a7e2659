#include "sigmalab/state.hpp"

#include <algorithm>
#include <cmath>

namespace sigmalab {

StripState StripState::rest(const StripGrid& g) {
  StripState s;
  s.V.assign(std::size_t(g.d), StripField(g));
  s.w = StripField(g);
  s.rho = StripField(g);
  s.eta0 = SurfaceField(g);
  return s;
}

StripState& StripState::axpy(double a, const StripState& o) {
  for (std::size_t i = 0; i < V.size(); ++i) V[i].axpy(a, o.V[i]);
  w.axpy(a, o.w);
  rho.axpy(a, o.rho);
  eta0.axpy(a, o.eta0);
  return *this;
}

StripState& StripState::operator*=(double a) {
  for (auto& v : V) v *= a;
  w *= a;
  rho *= a;
  eta0 *= a;
  return *this;
}

double StripState::max_abs() const {
  double m = std::max({w.max_abs(), rho.max_abs(), eta0.max_abs()});
  for (const auto& v : V) m = std::max(m, v.max_abs());
  return m;
}

bool StripState::finite() const {
  auto ok = [](std::span<const double> v) { return std::ranges::all_of(v, [](double x) { return std::isfinite(x); }); };
  return ok(w.values()) && ok(rho.values()) && ok(eta0.values()) &&
         std::ranges::all_of(V, [&](const StripField& f) { return ok(f.values()); });
}

namespace {
template <class F>
double field_diff(const F& a, const F& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}
}  // namespace

double max_difference(const StripState& a, const StripState& b) {
  double m = std::max({field_diff(a.w, b.w), field_diff(a.rho, b.rho), field_diff(a.eta0, b.eta0)});
  for (std::size_t i = 0; i < a.V.size(); ++i) m = std::max(m, field_diff(a.V[i], b.V[i]));
  return m;
}

}  // namespace sigmalab
