#pragma once

// Discrete space-time domains: tensor-product grids over intervals and
// axis-aligned rectangles, boundary tagging, and the weight-function
// checks that decide where observation and control can act.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace waveinv {

using Point = std::array<double, 2>;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

enum class BoundaryTag : std::uint8_t { gamma0, complement };

/// Which part of the boundary a trace lives on.
enum class Subset : std::uint8_t { gamma0, complement, all };

std::string to_string(Subset s);
Subset subset_from_string(const std::string& s);

/// One quadrature point of a boundary trace. Dirichlet traces carry one point
/// per boundary node; flux traces carry one point per (node, edge) pair so that
/// corner nodes get the normal of each adjacent edge.
struct BoundaryPoint {
  std::size_t node = 0;
  int edge = -1;            // axis * 2 + side, -1 for node-level points
  Point normal{0.0, 0.0};   // outward unit normal
  double weight = 0.0;      // boundary quadrature weight (1 in 1D)
};

class Grid {
 public:
  Grid() = default;

  int dim() const { return dim_; }
  const Interval& extent(int axis) const { return extents_[axis]; }
  int cells(int axis) const { return nx_[axis]; }
  int nodes_along(int axis) const { return axis < dim_ ? nx_[axis] + 1 : 1; }
  double spacing(int axis) const { return dx_[axis]; }
  double min_spacing() const;
  int nt() const { return nt_; }
  double dt() const { return dt_; }
  double t_start() const { return t0_; }
  double t_final() const { return t0_ + nt_ * dt_; }
  double duration() const { return nt_ * dt_; }
  double time(int level) const { return t0_ + level * dt_; }
  int levels() const { return nt_ + 1; }
  double cfl_factor() const { return cfl_; }

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t stride(int axis) const { return axis == 0 ? 1 : static_cast<std::size_t>(nx_[0] + 1); }
  std::array<int, 2> index(std::size_t node) const;
  std::size_t flat(int i, int j = 0) const { return static_cast<std::size_t>(i) + stride(1) * static_cast<std::size_t>(j); }
  Point coord(std::size_t node) const;

  bool is_boundary(std::size_t node) const { return boundary_mask_[node] != 0; }
  const std::vector<std::size_t>& boundary_nodes() const { return boundary_nodes_; }
  const std::vector<std::size_t>& interior_nodes() const { return interior_nodes_; }
  /// Position of a boundary node inside boundary_nodes(), or -1.
  long boundary_position(std::size_t node) const { return boundary_pos_[node]; }

  /// Spatial trapezoid weight of a node (product of per-axis weights).
  double node_weight(std::size_t node) const { return node_weight_[node]; }
  const std::vector<double>& node_weights() const { return node_weight_; }
  /// Trapezoid weight of a time level.
  double time_weight(int level) const;

  /// Tag of a boundary node (gamma0 / complement).
  BoundaryTag tag(std::size_t node) const;
  bool tagged() const { return !tags_.empty(); }
  const std::optional<Point>& observation_point() const { return x0_; }
  bool in_subset(std::size_t node, Subset s) const;

  /// Boundary points for Dirichlet data (one per node) restricted to a subset.
  std::vector<BoundaryPoint> dirichlet_points(Subset s) const;
  /// Boundary points for flux traces (one per node and adjacent edge).
  std::vector<BoundaryPoint> flux_points(Subset s) const;

  bool is_outside(const Point& p) const;
  bool same_layout(const Grid& other) const;
  /// Same nodes, any time axis.
  bool same_space(const Grid& other) const;

  /// Grid restricted to time levels [first, last].
  Grid time_window(int first, int last) const;
  /// Grid with a different final time level count (same dt).
  Grid with_levels(int nt) const;
  /// Explicit tags, one per boundary node in boundary_nodes() order.
  Grid with_tags(std::vector<BoundaryTag> tags, std::optional<Point> x0 = std::nullopt) const;
  /// Convenience: every boundary node in gamma0.
  Grid with_all_gamma0() const;

  /// Nearest time level to t (throws if t is off the grid by more than dt/2).
  int level_of(double t) const;

  friend Grid build_grid(std::span<const Interval> extents, std::span<const int> nx, double T, int nt,
                         double cfl_factor);

 private:
  void finalize();

  int dim_ = 1;
  std::array<Interval, 2> extents_{};
  std::array<int, 2> nx_{0, 0};
  std::array<double, 2> dx_{0.0, 0.0};
  int nt_ = 0;
  double dt_ = 0.0;
  double t0_ = 0.0;
  double cfl_ = 0.5;

  std::size_t num_nodes_ = 0;
  std::vector<unsigned char> boundary_mask_;
  std::vector<std::size_t> boundary_nodes_;
  std::vector<std::size_t> interior_nodes_;
  std::vector<long> boundary_pos_;
  std::vector<double> node_weight_;
  std::vector<BoundaryTag> tags_;
  std::optional<Point> x0_;
};

/// Builds a grid. Fails when the grid is too coarse, an extent is empty, or
/// dt exceeds cfl_factor * dx_min (unit wave speed).
Grid build_grid(std::span<const Interval> extents, std::span<const int> nx, double T, int nt, double cfl_factor);
Grid build_grid_1d(Interval extent, int nx, double T, int nt, double cfl_factor = 0.5);
Grid build_grid_2d(Interval ex, Interval ey, int nx, int ny, double T, int nt, double cfl_factor = 0.5);
/// Chooses nt as the smallest count with dt <= cfl_factor * dx_min.
int steps_for(double T, double dx_min, double cfl_factor);

/// Tags each boundary node gamma0 iff (x - x0) . nu > 0 there.
Grid tag_gamma0(const Grid& grid, const Point& x0);

/// 2 * max over grid nodes of |x - x0|.
double minimal_time(const Grid& grid, const Point& x0);

/// 2 * max over nodes of the distance to the nearest gamma0 node. This is the
/// sharp one-dimensional control time and is used as a practical threshold.
double control_time(const Grid& grid);

/// Diagonal conductivity sampled at the nodes, one array per axis.
struct Sigma {
  std::array<std::vector<double>, 2> axis;

  static Sigma constant(const Grid& grid, double c);
  static Sigma from_function(const Grid& grid, const std::function<Point(const Point&)>& diag);
  double max_value() const;
  double min_value() const;
  /// sigma_axis at the midpoint between two neighbouring nodes.
  double mid(int a, std::size_t n0, std::size_t n1) const { return 0.5 * (axis[a][n0] + axis[a][n1]); }
};

/// d(x) = |x - x0|^2 sampled on the grid, with its gradient.
struct WeightFunction {
  Point x0{};
  std::vector<double> values;
  std::vector<Point> gradient;
};

WeightFunction make_weight(const Grid& grid, const Point& x0);

struct ConditionH {
  double rho0_estimate = 0.0;
  bool holds = false;
};

/// Samples the quadratic form of condition (H) at every node over the
/// coordinate axes (plus 16 spread directions in 2D) and returns the minimum
/// ratio to xi^T sigma xi. Holds when the estimate exceeds 0.05.
ConditionH check_condition_H(const Sigma& sigma, const WeightFunction& weight, const Grid& grid);

}  // namespace waveinv
