#pragma once

// Semilinear problem u_tt - div(sigma grad u) + f(x, t, u) = 0 solved by the
// quotient fixed-point iteration, with an independent explicit solver used as
// a cross-check.

#include <vector>

#include "waveinv/field.hpp"
#include "waveinv/nonlinearity.hpp"
#include "waveinv/wave.hpp"

namespace waveinv {

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history;  // relative L2(Q) change per iteration
  double max_amplitude = 0.0;
};

struct SemilinearOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double blowup_cap = 1e6;
  /// Throw NumericalError when max_iter is reached instead of returning converged=false.
  bool throw_on_max_iter = true;
};

struct SemilinearData {
  const BoundaryTrace* dirichlet = nullptr;
  const Spatial* phi = nullptr;
  const Spatial* psi = nullptr;
};

struct SemilinearSolution {
  Field u;
  SolveReport report;
};

/// One application of the fixed-point map: solve the linear problem with
/// potential a_z = (f(z) - f(0)) / z and source -f(0).
Field picard_map(const Field& z, const Nonlinearity& f, const GridPtr& grid, const Sigma& sigma,
                 const SemilinearData& data);

/// Potential a_z and source -f(., ., 0) sampled on the grid.
Field quotient_potential(const Field& z, const Nonlinearity& f);
Field zero_state_source(const GridPtr& grid, const Nonlinearity& f);

SemilinearSolution solve_semilinear(const GridPtr& grid, const Sigma& sigma, const Nonlinearity& f,
                                    const SemilinearData& data, const SemilinearOptions& opt = {});

/// Explicit leapfrog with f evaluated pointwise at the current level.
Field solve_semilinear_direct(const GridPtr& grid, const Sigma& sigma, const Nonlinearity& f,
                              const SemilinearData& data, double blowup_cap = 1e6);

/// f_s(x, t, u(x, t)) sampled on the grid.
Field linearized_potential(const Field& u, const Nonlinearity& f);

/// max_t ||(u, u_t)(t)||_{H1 x L2} + ||sigma grad u . nu||_{L2(Sigma)} of the computed solution.
double estimate_energy_bound(const GridPtr& grid, const Sigma& sigma, const Nonlinearity& f,
                             const SemilinearData& data, const SemilinearOptions& opt = {});

/// Largest scale s in (0, s_max] for which the fixed point converges on
/// s * (h, phi, psi); geometric search followed by bisection.
double probe_delta(const GridPtr& grid, const Sigma& sigma, const Nonlinearity& f, const SemilinearData& data,
                   double s_max = 1.0, int bisections = 12, const SemilinearOptions& opt = {});

}  // namespace waveinv
