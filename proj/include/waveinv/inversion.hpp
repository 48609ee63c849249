#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "waveinv/control.hpp"
#include "waveinv/field.hpp"
#include "waveinv/measurement.hpp"

namespace waveinv {

enum class FdScheme : std::uint8_t { forward, central };

std::string to_string(FdScheme s);
FdScheme fd_scheme_from_string(const std::string& s);

/// Boundary directions g_l and the finite-difference step in the parameters eps_l.
struct LinearizationStencil {
  std::vector<BoundaryTrace> directions;
  double eps = 1e-3;
  int order = 1;  // highest mixed order used, at most 4
  FdScheme scheme = FdScheme::central;

  void validate() const;
};

/// Smooth pulses leaving each endpoint (1D) or edge midpoint region (2D) at
/// staggered times; count directions in total, on the given boundary subset.
std::vector<BoundaryTrace> pulse_directions(const GridPtr& grid, Subset subset, int count, double first_center,
                                            double last_center, double width = 0.3);

/// Scheme used by default for a mixed order: central up to 2, forward above.
FdScheme default_scheme(int order);

/// Mixed derivative d^m u / d eps_{i1} ... d eps_{im} at eps = 0 of the
/// solution with boundary data sum eps_l g_l.
Field fd_linearize(const Scenario& s, const LinearizationStencil& st, const std::vector<int>& multi_index);
/// Same stencil applied to full input-output flux records of an oracle.
BoundaryTrace fd_linearize_flux(const MeasurementOracle& oracle, const LinearizationStencil& st,
                                const std::vector<int>& multi_index);

/// Trapezoid value of int_{t1}^{t2} int delta * prod tests.
std::complex<double> integral_identity(const Field& delta, const std::vector<ComplexField>& tests, double t1,
                                       double t2);

/// Mixed derivatives predicted by Taylor coefficients along the background:
/// coeffs[k - 1] is d^k f / ds^k (x, t, u~) for k = 1..K (null means zero).
/// The mixed derivative over a set S solves
///   w_tt - div(sigma grad w) + coeffs[0] w = - sum over partitions P of S with |P| >= 2
///                                              coeffs[|P| - 1] prod_{B in P} w_B
/// with zero Cauchy data, Dirichlet data g_l for singletons and zero otherwise.
class MixedModel {
 public:
  MixedModel(GridPtr grid, Sigma sigma, std::vector<const Field*> coeffs, std::vector<const BoundaryTrace*> dirs);
  /// Subset given as a bitmask over dirs.
  const Field& mixed(unsigned mask);
  /// Right-hand side of the mixed equation for mask, skipping the partition into singletons if asked.
  Field source(unsigned mask, bool skip_top);
  Field solve(const Field& source) const;

 private:
  GridPtr grid_;
  Sigma sigma_;
  std::vector<const Field*> coeffs_;
  std::vector<const BoundaryTrace*> dirs_;
  std::map<unsigned, Field> cache_;
};

/// Separable samples of a space-time basis: element j = mode (j / splines) x spline (j % splines).
struct BasisTables {
  std::vector<Spatial> modes;                 // per node
  std::vector<std::vector<double>> splines;   // per time level

  std::size_t size() const { return modes.size() * splines.size(); }
  double value(std::size_t j, int level, std::size_t node) const {
    return modes[j / splines.size()][node] * splines[j % splines.size()][static_cast<std::size_t>(level)];
  }
};

/// Cosine modes in space times clamped cubic B-splines on [t1, t2], zero outside the window.
struct SpaceTimeBasis {
  int spatial = 8;   // modes per axis
  int temporal = 4;  // B-splines, at least 4
  double t1 = 0.0;
  double t2 = 1.0;

  int size(int dim) const;
  BasisTables tables(const Grid& grid) const;
};

Field basis_element(const GridPtr& grid, const BasisTables& b, std::size_t j);
Field basis_combine(const GridPtr& grid, const BasisTables& b, const Eigen::VectorXd& c);
/// Space-time L2 Gram matrix of the basis (trapezoid weights).
Eigen::MatrixXd basis_gram(const Grid& grid, const BasisTables& b);

/// Clamped cubic B-spline j of m on [t1, t2] evaluated at t (zero outside).
double clamped_bspline(int j, int m, double t1, double t2, double t);

struct LCurvePoint {
  double reg = 0.0;
  double residual = 0.0;
  double norm = 0.0;
  std::optional<double> error;
  Field recovered;
};

struct RecoveryOptions {
  double reg = 1e-6;  // Tikhonov weight on ||q||^2, relative to tr(J^T J) / tr(Gram)
  int max_gn = 8;
  double gn_tol = 1e-6;
  double noise = 0.0;  // relative Gaussian noise added to the observed fluxes
  std::uint64_t seed = 1;
  std::vector<double> reg_sweep{1e-8, 1e-6, 1e-4, 1e-2};
  int tuples = 48;     // mixed tuples used for orders >= 2
};

struct RecoveryResult {
  Field recovered;
  std::optional<Field> truth;
  std::optional<double> rel_l2_error;  // on the basis window
  double regularization = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  Eigen::VectorXd coefficients;
  int iterations = 0;
  double condition = 0.0;
  double misfit = 0.0;  // relative data misfit
  std::vector<double> misfit_history;
  std::vector<LCurvePoint> lcurve;
  double cancellation_ratio = 0.0;  // solver tolerance / eps^order
  int queries = 0;
  std::vector<std::string> notes;

  void set_truth(Field t);
};

/// Step 2: recovers q = f_u(., ., u~) on the basis window from first-order
/// linearized full input-output fluxes (Gauss-Newton with Tikhonov term).
RecoveryResult recover_potential(const MeasurementOracle& oracle, const LinearizationStencil& st,
                                 const SpaceTimeBasis& basis, const RecoveryOptions& opt);

/// Steps 3-4: recovers d^k f / ds^k along the background given the lower
/// coefficients lower[0] = q, lower[1] = f_uu, ... (k - 1 entries).
RecoveryResult recover_taylor_coefficient(const MeasurementOracle& oracle, int k, const std::vector<Field>& lower,
                                          const LinearizationStencil& st, const SpaceTimeBasis& basis,
                                          const RecoveryOptions& opt);

struct InitialRecoveryOptions {
  double reg = 1e-8;
  int max_cg = 300;
  double cg_tol = 1e-10;
  int max_outer = 10;
  double outer_tol = 1e-6;
  double fit_until = -1.0;  // misfit restricted to t <= fit_until when positive
};

struct InitialRecovery {
  Spatial phi;
  Spatial psi;
  int cg_iterations = 0;
  int outer_iterations = 0;
  std::vector<double> residual_history;  // misfit functional per CG iterate, all sweeps
  double misfit = 0.0;                   // ||flux(recovered) - observed||
  std::optional<double> certificate;
  std::optional<double> rel_error;       // H1 x L2, when the truth is known
  std::vector<std::string> warnings;
};

/// Least squares over (phi, psi) for a flux record on gamma0 with the known
/// nonlinearity of `model` and the record's Dirichlet input.
InitialRecovery recover_initial_passive(const MeasurementRecord& record, const Scenario& model,
                                        const InitialRecoveryOptions& opt = {},
                                        const std::optional<std::pair<Spatial, Spatial>>& truth = std::nullopt);

struct ActiveRecovery {
  InitialRecovery initial;
  BoundaryTrace control;
  double post_window_flux = 0.0;  // relative flux after t_star + eps under the final control
  int loops = 0;
};

/// Drives the measured system to rest at t_star + eps with the model f0 and
/// the current estimate, then refits the initial data; repeats until stable.
ActiveRecovery recover_initial_active(const MeasurementOracle& oracle, const Scenario& model, double t_star,
                                      double eps, const InitialRecoveryOptions& opt = {}, int max_loops = 5,
                                      double flux_tol = 0.05,
                                      const std::optional<std::pair<Spatial, Spatial>>& truth = std::nullopt);

struct StabilityProbe {
  std::vector<double> ratios;  // ||(dphi, dpsi)||_{H1 x L2} / ||d flux||
  double spread = 0.0;         // max / min
};

StabilityProbe stability_probe(const Scenario& model, const std::vector<std::pair<Spatial, Spatial>>& first,
                               const std::vector<std::pair<Spatial, Spatial>>& second);

struct SimultaneousResult {
  RecoveryResult potential;
  std::vector<RecoveryResult> taylor;  // orders 2..K
  InitialRecovery initial;
  std::map<std::string, double> diagnostics;
};

SimultaneousResult simultaneous_recover(const MeasurementOracle& oracle, const LinearizationStencil& st,
                                        const SpaceTimeBasis& basis, int max_order, const RecoveryOptions& opt,
                                        const InitialRecoveryOptions& init_opt = {});

struct NonuniquenessResult {
  Scenario first;
  Scenario second;
  MeasurementRecord record1;
  MeasurementRecord record2;
  double flux1 = 0.0;
  double flux2 = 0.0;
  double initial_distance = 0.0;  // ||phi1 - phi2||_{L2}
};

/// Two sources (f_j, phi_j, psi_j) that vanish on a boundary collar of the
/// given width and produce identical (zero) passive fluxes.
NonuniquenessResult nonuniqueness_demo(const GridPtr& grid, const Sigma& sigma, double collar);

void write_recovery(const std::filesystem::path& dir, const RecoveryResult& r);
void write_initial(const std::filesystem::path& dir, const Grid& grid, const InitialRecovery& r);

}  // namespace waveinv
