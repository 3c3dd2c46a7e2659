/// Restarted GMRES with right preconditioning.
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace sigmalab {

using LinearMap = std::function<void(std::span<const double> in, std::span<double> out)>;

struct KrylovResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
  std::vector<double> history;  ///< relative residual after each iteration
};

/// Solves A x = b starting from x. The stopping test is on ||b - A x|| / ||b||.
KrylovResult gmres(const LinearMap& A, const LinearMap& precond, std::span<const double> b,
                   std::span<double> x, double tol, int max_iter, int restart);

}  // namespace sigmalab
