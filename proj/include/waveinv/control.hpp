#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "waveinv/field.hpp"
#include "waveinv/measurement.hpp"
#include "waveinv/wave.hpp"

namespace waveinv {

struct ObservabilityResult {
  std::vector<double> ratios;  // +inf where the flux vanishes
  double max_ratio = 0.0;
  bool failure = false;        // some sample produced flux <= flux_floor
};

/// ||(phi, psi)||_{H1 x L2} / ||sigma grad v . nu||_{L2(gamma0 x (0, T))} for
/// each sample, v solving the homogeneous problem with zero Dirichlet data.
ObservabilityResult observability_ratio(const GridPtr& grid, const Sigma& sigma, const Field* potential,
                                        const std::vector<std::pair<Spatial, Spatial>>& samples,
                                        double flux_floor = 1e-10);

struct HumOptions {
  double penalty = 1e6;
  double tol = 1e-10;   // relative preconditioned CG residual
  int max_cg = 200;
  double uncontrollable_fraction = 1e-4;  // of the initial energy, used for the horizon flag
};

struct ControlResult {
  BoundaryTrace control;  // Dirichlet data on gamma0 over the whole horizon
  FinalState final_state;
  double initial_energy = 0.0;
  double terminal_error = 0.0;  // energy of the achieved-minus-target state
  int cg_iterations = 0;
  bool converged = false;
  bool stagnated = false;
  bool likely_uncontrollable = false;
  std::vector<double> residual_history;  // J(h_k)
  std::vector<double> cg_residuals;      // preconditioned residual norms
  std::vector<double> terminal_errors;   // per CG iterate
  std::vector<std::string> warnings;
};

/// Penalized HUM: minimizes 1/2 ||h||^2 + penalty * E(u(T) - target) over
/// Dirichlet data h on gamma0 by preconditioned CG with exact adjoint gradients.
/// The level-0 value of h is fixed by compatibility with phi.
ControlResult hum_control(const GridPtr& grid, const Sigma& sigma, const Field* potential, const Field* source,
                          const Spatial& phi, const Spatial& psi, const Spatial& target_u, const Spatial& target_ut,
                          const HumOptions& opt = {});

/// Controls the semilinear scenario to rest at t_star + eps (fixed-point outer
/// loop around hum_control) and extends the control by zero up to T.
struct DriveResult {
  BoundaryTrace control;  // on the scenario grid
  ControlResult hum;      // last inner solve on the truncated grid
  int outer_iterations = 0;
  double switch_time = 0.0;
};

DriveResult drive_to_zero_then_freeze(const Scenario& s, double t_star, double eps, const HumOptions& opt = {},
                                      int max_outer = 10, double outer_tol = 1e-8);

void write_cg_log(const std::filesystem::path& path, const ControlResult& r);

struct RungeOptions {
  std::vector<int> temporal_sizes{4, 8, 16};  // cubic splines per boundary mode
  int modes_per_edge = 2;                     // 2D only
  double tol = 0.05;
};

struct RungeStep {
  int basis_size = 0;
  double rel_error = 0.0;
};

struct RungeResult {
  Field approximation;      // V with zero Cauchy data at t = 0
  BoundaryTrace control;    // its Dirichlet data on the whole boundary
  double rel_error = 0.0;   // on the window (t1, t2)
  int basis_size = 0;
  bool reached = false;
  std::vector<RungeStep> history;
  std::vector<std::string> warnings;
};

/// Least-squares fit of the window restriction of target by solutions with
/// zero initial data, over Dirichlet data in span(boundary modes x cubic
/// B-splines in time vanishing to second order at t = 0).
RungeResult runge_approximate(const GridPtr& grid, const Sigma& sigma, const Field* potential, const Field& target,
                              double t1, double t2, const RungeOptions& opt = {});

/// Single basis trace used by runge_approximate (mode index, spline index).
BoundaryTrace runge_basis_trace(const GridPtr& grid, int mode, int spline, int temporal_size, int modes_per_edge);
int runge_mode_count(const Grid& grid, int modes_per_edge);

}  // namespace waveinv
