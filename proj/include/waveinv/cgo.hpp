#pragma once

// Complex geometrical optics solutions of v_tt - lap v + q v = 0 on a time
// window: v = a exp(i sign tau (|x - x0| + t)) + R.

#include <filesystem>
#include <functional>
#include <vector>

#include "waveinv/field.hpp"
#include "waveinv/grid.hpp"

namespace waveinv {

/// C2 cutoff: 1 on [lo + ramp, hi - ramp], 0 outside (lo, hi), quintic ramps.
struct Cutoff {
  double lo = 0.0;
  double hi = 1.0;
  double ramp = 0.25;

  double operator()(double s) const;
  double d1(double s) const;
  double d2(double s) const;
};

struct CgoParams {
  double tau = 8.0;
  int sign = 1;
  Point x0{-0.5, 0.0};
  double mu = 1.0;
  Cutoff chi;
  std::function<double(double theta)> h_theta;  // empty means 1
};

/// Cutoff equal to 1 on every value of |x - x0| + t over the grid and window.
Cutoff covering_cutoff(const Grid& grid, const Point& x0, double t1, double t2, double ramp = 0.25);
CgoParams default_cgo_params(const Grid& grid, double tau, int sign, const Point& x0, double t1, double t2);

double phase(const Point& x, const Point& x0, int dim);
/// e^{-mu (r + t) / 2} chi(r + t) h(theta) r^{-(n-1)/2}.
double amplitude(const Point& x, double t, const CgoParams& p, int dim);
/// a_tt - lap a, in closed form.
double amplitude_wave_operator(const Point& x, double t, const CgoParams& p, int dim);
/// max over nodes and window levels of |2 a_t - 2 grad eta . grad a - lap(eta) a| by central differences.
double transport_residual(const Grid& grid, const CgoParams& p, double t1, double t2);

struct CgoSolution {
  ComplexField principal;  // on the window grid
  ComplexField remainder;  // zero Cauchy data at t1, zero Dirichlet trace
  CgoParams params;
  double remainder_l2 = 0.0;

  ComplexField total() const { return principal + remainder; }
};

/// The window (t1, t2) must consist of grid levels; q is a potential on the grid
/// (or null). Throws PreconditionError when dx * tau > 2 pi / 10.
CgoSolution build_cgo(const GridPtr& grid, const Field* q, const CgoParams& params, double t1, double t2);

/// max |D_tt v - lap_h v + q v| over interior nodes and inner window levels.
double cgo_residual(const CgoSolution& s, const Field* q_window);

/// Restriction of a field on the full grid to the levels of a window grid.
Field restrict_levels(const Field& f, const GridPtr& window);

struct DecayRow {
  double tau = 0.0;
  double remainder_l2 = 0.0;
  double points_per_wavelength = 0.0;
};

struct DecayTable {
  std::vector<DecayRow> rows;
  bool decreasing = true;  // non-increasing within 5% slack
};

/// Builds one grid per tau with a fixed number of points per wavelength and
/// records the remainder norm.
DecayTable remainder_decay_table(const std::function<GridPtr(double tau)>& refine,
                                 const std::function<double(const Point&, double)>& q,
                                 const std::vector<double>& taus, const CgoParams& base, double t1, double t2);

/// Grid over the given extents with about ppw points per wavelength 2 pi / tau.
GridPtr cgo_grid(const std::vector<Interval>& extents, double T, double tau, double ppw = 12.0, double cfl = 0.5);

void write_decay_csv(const std::filesystem::path& path, const DecayTable& t);

}  // namespace waveinv
