#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace waveinv {

using Vec = std::vector<double>;
using LinearOperator = std::function<void(const Vec& in, Vec& out)>;

enum class StagnationMetric : std::uint8_t { residual, objective };

struct CgOptions {
  double tol = 1e-8;          // on the preconditioned residual, relative to the initial one
  int max_iter = 200;
  // Stops when the tracked quantity (best residual so far, or the objective)
  // decreased by less than stagnation_ratio over stagnation_window iterations.
  int stagnation_window = 10;
  double stagnation_ratio = 1e-3;
  StagnationMetric metric = StagnationMetric::residual;
  double objective_offset = 0.0;  // added to every recorded objective value
};

struct CgResult {
  Vec x;
  int iterations = 0;
  bool converged = false;
  bool stagnated = false;
  std::vector<double> objective;  // offset + 1/2 x^T A x - b^T x per iterate, starting with x0
  std::vector<double> residual;   // preconditioned residual norm per iterate
};

/// Preconditioned conjugate gradients for SPD A. `on_step(alpha)` is called
/// after each update x += alpha * p, right after A was applied to p.
CgResult pcg(const LinearOperator& A, const Vec& b, const LinearOperator& precond, Vec x0, const CgOptions& opt,
             const std::function<void(double alpha)>& on_step = {});

double dot(const Vec& a, const Vec& b);
void axpy(double a, const Vec& x, Vec& y);

}  // namespace waveinv
