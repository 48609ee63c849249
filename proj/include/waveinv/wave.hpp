#pragma once

// Linear wave equation u_tt - div(sigma grad u) + a u = K on the nodal grid,
// with Dirichlet data imposed strongly on the boundary. Explicit leapfrog in
// time, three-point stencil per axis with midpoint conductivity.

#include <complex>
#include <vector>

#include "waveinv/field.hpp"
#include "waveinv/grid.hpp"

namespace waveinv {

/// Optional inputs of a linear solve. Null means zero.
struct LinearData {
  const Field* potential = nullptr;        // a
  const Field* source = nullptr;           // K, right-hand side
  const BoundaryTrace* dirichlet = nullptr;
  const Spatial* phi = nullptr;
  const Spatial* psi = nullptr;
};

/// Spatial operator div(sigma grad .) restricted to interior rows.
class StiffnessOperator {
 public:
  StiffnessOperator(const Grid& grid, const Sigma& sigma);

  const Grid& grid() const { return *grid_; }
  /// out[i] = (L u)[i] for interior i; boundary entries untouched.
  void apply(const double* u, double* out) const;
  /// (L u)[i] for one interior node given by its interior index.
  double row(std::size_t k, const double* u) const;
  /// out += L^T lambda, lambda given on interior nodes (indexed by node).
  void scatter_transpose(const double* lambda, double* out, double scale) const;
  /// dt^2 * sigma_max * sum 1/dx^2; must stay below 1 for stability.
  double stability_number(double dt) const;

  const std::vector<std::size_t>& interior() const { return *interior_; }

 private:
  const Grid* grid_;
  const std::vector<std::size_t>* interior_;
  int dim_;
  std::array<std::size_t, 2> stride_{};
  std::array<std::vector<double>, 2> cp_;  // coefficient towards +neighbour
  std::array<std::vector<double>, 2> cm_;  // coefficient towards -neighbour
  double coef_max_ = 0.0;
};

/// Checks the CFL condition of the leapfrog scheme for this sigma.
void check_stability(const Grid& grid, const Sigma& sigma);

Field solve_linear(const GridPtr& grid, const Sigma& sigma, const LinearData& data);

/// Same scheme with raw arrays: a, K are levels*N (or null), h is levels*nb
/// in boundary_nodes() order (or null), phi, psi are N (or null).
void leapfrog(const Grid& grid, const Sigma& sigma, const double* a, const double* K, const double* h,
              const double* phi, const double* psi, double* out);

/// Complex source, zero Cauchy and Dirichlet data, real potential: two real solves.
ComplexField solve_linear_complex(const GridPtr& grid, const Sigma& sigma, const Field* potential,
                                  const std::vector<std::complex<double>>& source);

/// Solves backwards in time from terminal data (v_T, v_t(T)) with zero
/// Dirichlet data; the result is indexed forward in time.
Field solve_backward(const GridPtr& grid, const Sigma& sigma, const Field* potential, const Field* source,
                     const Spatial& v_T, const Spatial& vt_T);

/// Gradients of <seed, solve_linear(data)> with respect to every input.
struct LinearAdjoint {
  std::vector<double> source;    // levels * N, interior nodes only
  std::vector<double> boundary;  // levels * nb, boundary_nodes() order
  Spatial phi;                   // interior nodes only
  Spatial psi;                   // interior nodes only
};

/// Exact transpose of the discrete solution map (reverse sweep of the scheme).
LinearAdjoint solve_transpose(const Grid& grid, const Sigma& sigma, const double* potential,
                              const std::vector<double>& seed);

/// (u(T), u_t(T)) with a second-order velocity consistent with the scheme.
struct FinalState {
  Spatial u;
  Spatial ut;
};

FinalState final_state(const Field& u, const Sigma& sigma, const Field* potential, const Field* source);
/// Adds the transpose of final_state applied to (wu, wv) to `seed` (levels*N)
/// and, if given, to the source gradient.
void final_state_transpose(const Grid& grid, const Sigma& sigma, const double* potential, const Spatial& wu,
                           const Spatial& wv, std::vector<double>& seed, std::vector<double>* source_grad = nullptr);

/// sigma grad u . nu on the subset, one-sided second-order differences.
BoundaryTrace neumann_trace(const Field& u, const Sigma& sigma, Subset subset);
/// Adds the transpose of neumann_trace applied to w into seed (levels*N).
void neumann_trace_transpose(const BoundaryTrace& w, const Sigma& sigma, std::vector<double>& seed);

/// 1/2 int [u_t^2 + sigma grad u . grad u + u^2] at level n (mass term optional).
double energy(const Field& u, const Sigma& sigma, int n, bool include_mass = true);
/// Same quadratic form for a state pair.
double state_energy(const Grid& grid, const Sigma& sigma, const Spatial& u, const Spatial& ut, bool include_mass = true);
/// out = W x where state_energy(u, 0) = 1/2 u^T W u.
void energy_gram(const Grid& grid, const Sigma& sigma, const Spatial& u, Spatial& out, bool include_mass = true);
/// Discrete H1 x L2 norm of a state pair.
double h1l2_norm(const Grid& grid, const Sigma& sigma, const Spatial& u, const Spatial& ut);

/// Trapezoid L2 norms.
double l2_norm(const Field& f);
double l2_norm(const ComplexField& f);
double l2_norm_window(const Field& f, double t1, double t2);
double l2_norm_window(const ComplexField& f, double t1, double t2);
double l2_norm(const BoundaryTrace& tr);
double l2_norm(const Grid& grid, const Spatial& v);
double inner(const Field& f, const Field& g);
double inner(const Grid& grid, const Spatial& u, const Spatial& v);

/// Per-level trapezoid weights restricted to [t1, t2] (level must lie inside).
std::vector<double> window_weights(const Grid& grid, double t1, double t2);

}  // namespace waveinv
