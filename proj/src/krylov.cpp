#include "waveinv/krylov.hpp"

#include <algorithm>
#include <cmath>

#include "waveinv/error.hpp"

namespace waveinv {

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

CgResult pcg(const LinearOperator& A, const Vec& b, const LinearOperator& precond, Vec x0, const CgOptions& opt,
             const std::function<void(double)>& on_step) {
  const std::size_t n = b.size();
  if (x0.empty()) x0.assign(n, 0.0);
  if (x0.size() != n) throw PreconditionError("initial guess has the wrong size");
  CgResult res;
  res.x = std::move(x0);
  Vec r(n), z(n), p(n), Ap(n);
  A(res.x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  auto objective = [&]() { return opt.objective_offset - 0.5 * (dot(b, res.x) + dot(r, res.x)); };
  precond(r, z);
  double rz = dot(r, z);
  const double r0 = std::sqrt(std::max(rz, 0.0));
  res.objective.push_back(objective());
  res.residual.push_back(r0);
  if (r0 == 0.0) {
    res.converged = true;
    return res;
  }
  p = z;
  for (int k = 1; k <= opt.max_iter; ++k) {
    A(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) throw NumericalError("operator is not positive definite along the search direction", "cg");
    const double alpha = rz / pAp;
    axpy(alpha, p, res.x);
    axpy(-alpha, Ap, r);
    if (on_step) on_step(alpha);
    precond(r, z);
    const double rz_new = dot(r, z);
    const double rn = std::sqrt(std::max(rz_new, 0.0));
    res.iterations = k;
    res.objective.push_back(objective());
    res.residual.push_back(rn);
    if (rn <= opt.tol * r0) {
      res.converged = true;
      return res;
    }
    const int w = opt.stagnation_window;
    if (w > 0 && k >= w) {
      bool stalled = false;
      if (opt.metric == StagnationMetric::residual) {
        const double before = *std::min_element(res.residual.begin(), res.residual.end() - w);
        const double now = std::min(before, *std::min_element(res.residual.end() - w, res.residual.end()));
        stalled = now >= (1.0 - opt.stagnation_ratio) * before;
      } else {
        const double before = res.objective[k - w];
        stalled = before - res.objective[k] < opt.stagnation_ratio * std::abs(before);
      }
      if (stalled) {
        res.stagnated = true;
        return res;
      }
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return res;
}

}  // namespace waveinv
