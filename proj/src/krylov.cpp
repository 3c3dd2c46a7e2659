#include "sigmalab/krylov.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace sigmalab {

KrylovResult gmres(const LinearMap& A, const LinearMap& precond, std::span<const double> b,
                   std::span<double> x, double tol, int max_iter, int restart) {
  using Vec = Eigen::VectorXd;
  const Eigen::Index n = Eigen::Index(b.size());
  KrylovResult res;
  const Vec bv = Eigen::Map<const Vec>(b.data(), n);
  const double bnorm = bv.norm();
  Eigen::Map<Vec> xv(x.data(), n);
  if (bnorm == 0.0) {
    xv.setZero();
    res.converged = true;
    return res;
  }

  Vec r(n), tmp(n), z(n);
  auto apply = [&](const LinearMap& op, const Vec& in, Vec& out) {
    op(std::span<const double>(in.data(), std::size_t(n)), std::span<double>(out.data(), std::size_t(n)));
  };
  auto residual = [&] {
    apply(A, xv, tmp);
    r = bv - tmp;
    return r.norm();
  };

  double beta = residual();
  res.rel_residual = beta / bnorm;
  const int m = restart;
  std::vector<Vec> Vk(std::size_t(m) + 1, Vec(n)), Zk(static_cast<std::size_t>(m), Vec(n));
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  Vec cs(m), sn(m), g(m + 1);

  while (res.rel_residual > tol && res.iterations < max_iter) {
    Vk[0] = r / beta;
    g.setZero();
    g(0) = beta;
    H.setZero();
    int k = 0;
    for (; k < m && res.iterations < max_iter; ++k) {
      apply(precond, Vk[std::size_t(k)], Zk[std::size_t(k)]);
      apply(A, Zk[std::size_t(k)], tmp);
      for (int i = 0; i <= k; ++i) {
        H(i, k) = Vk[std::size_t(i)].dot(tmp);
        tmp -= H(i, k) * Vk[std::size_t(i)];
      }
      H(k + 1, k) = tmp.norm();
      if (H(k + 1, k) > 0.0) Vk[std::size_t(k) + 1] = tmp / H(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs(i) * H(i, k) + sn(i) * H(i + 1, k);
        H(i + 1, k) = -sn(i) * H(i, k) + cs(i) * H(i + 1, k);
        H(i, k) = t;
      }
      const double den = std::hypot(H(k, k), H(k + 1, k));
      cs(k) = den == 0.0 ? 1.0 : H(k, k) / den;
      sn(k) = den == 0.0 ? 0.0 : H(k + 1, k) / den;
      H(k, k) = den;
      H(k + 1, k) = 0.0;
      g(k + 1) = -sn(k) * g(k);
      g(k) = cs(k) * g(k);
      ++res.iterations;
      res.rel_residual = std::abs(g(k + 1)) / bnorm;
      res.history.push_back(res.rel_residual);
      if (res.rel_residual <= tol) {
        ++k;
        break;
      }
    }
    const Vec y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    for (int i = 0; i < k; ++i) xv += y(i) * Zk[std::size_t(i)];
    beta = residual();
    res.rel_residual = beta / bnorm;
    if (!std::isfinite(beta)) break;
  }
  res.converged = res.rel_residual <= tol;
  return res;
}

}  // namespace sigmalab
