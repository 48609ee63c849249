#include "waveinv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "waveinv/error.hpp"

namespace waveinv {

std::string to_string(Subset s) {
  switch (s) {
    case Subset::gamma0: return "gamma0";
    case Subset::complement: return "complement";
    case Subset::all: return "all";
  }
  return "all";
}

Subset subset_from_string(const std::string& s) {
  if (s == "gamma0") return Subset::gamma0;
  if (s == "complement") return Subset::complement;
  if (s == "all") return Subset::all;
  throw PreconditionError("unknown boundary subset '" + s + "'");
}

double Grid::min_spacing() const {
  return dim_ == 1 ? dx_[0] : std::min(dx_[0], dx_[1]);
}

std::array<int, 2> Grid::index(std::size_t node) const {
  const auto s = stride(1);
  return {static_cast<int>(node % s), static_cast<int>(node / s)};
}

Point Grid::coord(std::size_t node) const {
  const auto ij = index(node);
  Point p{extents_[0].lo + ij[0] * dx_[0], 0.0};
  if (dim_ == 2) p[1] = extents_[1].lo + ij[1] * dx_[1];
  return p;
}

double Grid::time_weight(int level) const {
  return (level == 0 || level == nt_) ? 0.5 * dt_ : dt_;
}

BoundaryTag Grid::tag(std::size_t node) const {
  const long pos = boundary_pos_.at(node);
  if (pos < 0) throw PreconditionError("node is not on the boundary");
  if (tags_.empty()) throw PreconditionError("grid has no boundary tags; call tag_gamma0 first");
  return tags_[static_cast<std::size_t>(pos)];
}

bool Grid::in_subset(std::size_t node, Subset s) const {
  if (s == Subset::all) return true;
  const BoundaryTag t = tag(node);
  return s == Subset::gamma0 ? t == BoundaryTag::gamma0 : t == BoundaryTag::complement;
}

std::vector<BoundaryPoint> Grid::dirichlet_points(Subset s) const {
  std::vector<BoundaryPoint> pts;
  for (std::size_t node : boundary_nodes_) {
    if (!in_subset(node, s)) continue;
    BoundaryPoint bp;
    bp.node = node;
    const auto ij = index(node);
    Point n{0.0, 0.0};
    double w = 0.0;
    for (int a = 0; a < dim_; ++a) {
      for (int side = 0; side < 2; ++side) {
        const bool on = side == 0 ? ij[a] == 0 : ij[a] == nx_[a];
        if (!on) continue;
        n[a] += side == 0 ? -1.0 : 1.0;
        if (dim_ == 1) {
          w += 1.0;
        } else {
          const int b = 1 - a;
          const bool end = ij[b] == 0 || ij[b] == nx_[b];
          w += end ? 0.5 * dx_[b] : dx_[b];
        }
      }
    }
    const double len = std::hypot(n[0], n[1]);
    bp.normal = {n[0] / len, n[1] / len};
    bp.weight = w;
    pts.push_back(bp);
  }
  return pts;
}

std::vector<BoundaryPoint> Grid::flux_points(Subset s) const {
  std::vector<BoundaryPoint> pts;
  for (int a = 0; a < dim_; ++a) {
    for (int side = 0; side < 2; ++side) {
      const int b = 1 - a;
      const int count = dim_ == 1 ? 1 : nx_[b] + 1;
      for (int k = 0; k < count; ++k) {
        std::array<int, 2> ij{0, 0};
        ij[a] = side == 0 ? 0 : nx_[a];
        if (dim_ == 2) ij[b] = k;
        const std::size_t node = flat(ij[0], ij[1]);
        if (!in_subset(node, s)) continue;
        BoundaryPoint bp;
        bp.node = node;
        bp.edge = a * 2 + side;
        bp.normal = {0.0, 0.0};
        bp.normal[a] = side == 0 ? -1.0 : 1.0;
        if (dim_ == 1) {
          bp.weight = 1.0;
        } else {
          bp.weight = (k == 0 || k == nx_[b]) ? 0.5 * dx_[b] : dx_[b];
        }
        pts.push_back(bp);
      }
    }
  }
  return pts;
}

bool Grid::is_outside(const Point& p) const {
  double dist2 = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const double lo = extents_[a].lo, hi = extents_[a].hi;
    const double d = p[a] < lo ? lo - p[a] : (p[a] > hi ? p[a] - hi : 0.0);
    dist2 += d * d;
  }
  return dist2 > 0.0;
}

bool Grid::same_space(const Grid& o) const {
  if (dim_ != o.dim_) return false;
  for (int a = 0; a < dim_; ++a) {
    if (nx_[a] != o.nx_[a] || extents_[a].lo != o.extents_[a].lo || extents_[a].hi != o.extents_[a].hi) return false;
  }
  return true;
}

bool Grid::same_layout(const Grid& o) const {
  if (nt_ != o.nt_ || !same_space(o)) return false;
  return std::abs(dt_ - o.dt_) <= 1e-14 * dt_ && std::abs(t0_ - o.t0_) <= 1e-12 * std::max(1.0, std::abs(t0_));
}

Grid Grid::time_window(int first, int last) const {
  if (first < 0 || last > nt_ || last - first < 1) throw PreconditionError("time window outside the grid");
  Grid g = *this;
  g.t0_ = time(first);
  g.nt_ = last - first;
  return g;
}

Grid Grid::with_levels(int nt) const {
  if (nt < 1) throw PreconditionError("need at least one time step");
  Grid g = *this;
  g.nt_ = nt;
  return g;
}

Grid Grid::with_tags(std::vector<BoundaryTag> tags, std::optional<Point> x0) const {
  if (tags.size() != boundary_nodes_.size()) throw PreconditionError("one tag per boundary node required");
  Grid g = *this;
  g.tags_ = std::move(tags);
  g.x0_ = x0;
  return g;
}

Grid Grid::with_all_gamma0() const {
  return with_tags(std::vector<BoundaryTag>(boundary_nodes_.size(), BoundaryTag::gamma0));
}

int Grid::level_of(double t) const {
  const double r = (t - t0_) / dt_;
  const long n = std::lround(r);
  if (n < 0 || n > nt_ || std::abs(r - static_cast<double>(n)) > 0.5 + 1e-9) {
    throw PreconditionError("time " + std::to_string(t) + " is outside the grid");
  }
  return static_cast<int>(n);
}

void Grid::finalize() {
  const int ny = dim_ == 2 ? nx_[1] : 0;
  num_nodes_ = static_cast<std::size_t>(nx_[0] + 1) * static_cast<std::size_t>(ny + 1);
  boundary_mask_.assign(num_nodes_, 0);
  boundary_pos_.assign(num_nodes_, -1);
  node_weight_.assign(num_nodes_, 0.0);
  boundary_nodes_.clear();
  interior_nodes_.clear();
  for (std::size_t n = 0; n < num_nodes_; ++n) {
    const auto ij = index(n);
    bool b = ij[0] == 0 || ij[0] == nx_[0];
    double w = (ij[0] == 0 || ij[0] == nx_[0]) ? 0.5 * dx_[0] : dx_[0];
    if (dim_ == 2) {
      b = b || ij[1] == 0 || ij[1] == ny;
      w *= (ij[1] == 0 || ij[1] == ny) ? 0.5 * dx_[1] : dx_[1];
    }
    node_weight_[n] = w;
    if (b) {
      boundary_mask_[n] = 1;
      boundary_pos_[n] = static_cast<long>(boundary_nodes_.size());
      boundary_nodes_.push_back(n);
    } else {
      interior_nodes_.push_back(n);
    }
  }
}

Grid build_grid(std::span<const Interval> extents, std::span<const int> nx, double T, int nt, double cfl_factor) {
  if (extents.empty() || extents.size() > 2 || extents.size() != nx.size()) {
    throw PreconditionError("grid dimension must be 1 or 2 with one cell count per axis");
  }
  if (!(T > 0.0)) throw PreconditionError("final time must be positive");
  if (nt < 4) throw PreconditionError("grid too coarse: need nt >= 4");
  if (!(cfl_factor > 0.0 && cfl_factor < 1.0)) throw PreconditionError("cfl factor must lie in (0, 1)");
  Grid g;
  g.dim_ = static_cast<int>(extents.size());
  for (int a = 0; a < g.dim_; ++a) {
    if (!(extents[a].hi > extents[a].lo)) throw PreconditionError("non-positive extent");
    if (nx[a] < 4) throw PreconditionError("grid too coarse: need nx >= 4 per axis");
    g.extents_[a] = extents[a];
    g.nx_[a] = nx[a];
    g.dx_[a] = extents[a].length() / nx[a];
  }
  g.nt_ = nt;
  g.dt_ = T / nt;
  g.t0_ = 0.0;
  g.cfl_ = cfl_factor;
  const double limit = cfl_factor * g.min_spacing();
  if (g.dt_ > limit * (1.0 + 1e-12)) {
    throw PreconditionError("CFL violation: dt=" + std::to_string(g.dt_) + " exceeds cfl*dx_min=" +
                            std::to_string(limit));
  }
  g.finalize();
  return g;
}

Grid build_grid_1d(Interval extent, int nx, double T, int nt, double cfl_factor) {
  const Interval e[1] = {extent};
  const int n[1] = {nx};
  return build_grid(e, n, T, nt, cfl_factor);
}

Grid build_grid_2d(Interval ex, Interval ey, int nx, int ny, double T, int nt, double cfl_factor) {
  const Interval e[2] = {ex, ey};
  const int n[2] = {nx, ny};
  return build_grid(e, n, T, nt, cfl_factor);
}

int steps_for(double T, double dx_min, double cfl_factor) {
  return std::max(4, static_cast<int>(std::ceil(T / (cfl_factor * dx_min) - 1e-9)));
}

Grid tag_gamma0(const Grid& grid, const Point& x0) {
  if (!grid.is_outside(x0)) throw PreconditionError("x0 must lie outside the closed domain");
  const auto pts = grid.with_all_gamma0().dirichlet_points(Subset::all);
  std::vector<BoundaryTag> tags;
  tags.reserve(pts.size());
  for (const auto& bp : pts) {
    const Point x = grid.coord(bp.node);
    double s = 0.0;
    for (int a = 0; a < grid.dim(); ++a) s += (x[a] - x0[a]) * bp.normal[a];
    tags.push_back(s > 0.0 ? BoundaryTag::gamma0 : BoundaryTag::complement);
  }
  return grid.with_tags(std::move(tags), x0);
}

double minimal_time(const Grid& grid, const Point& x0) {
  if (!grid.is_outside(x0)) throw PreconditionError("x0 must lie outside the closed domain");
  double m = 0.0;
  for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
    const Point x = grid.coord(n);
    m = std::max(m, std::hypot(x[0] - x0[0], x[1] - x0[1]));
  }
  return 2.0 * m;
}

double control_time(const Grid& grid) {
  std::vector<Point> g0;
  for (std::size_t b : grid.boundary_nodes()) {
    if (grid.tag(b) == BoundaryTag::gamma0) g0.push_back(grid.coord(b));
  }
  if (g0.empty()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
    const Point x = grid.coord(n);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : g0) best = std::min(best, std::hypot(x[0] - p[0], x[1] - p[1]));
    m = std::max(m, best);
  }
  return 2.0 * m;
}

Sigma Sigma::constant(const Grid& grid, double c) {
  Sigma s;
  for (int a = 0; a < 2; ++a) s.axis[a].assign(grid.num_nodes(), a < grid.dim() ? c : 0.0);
  return s;
}

Sigma Sigma::from_function(const Grid& grid, const std::function<Point(const Point&)>& diag) {
  Sigma s;
  for (int a = 0; a < 2; ++a) s.axis[a].assign(grid.num_nodes(), 0.0);
  for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
    const Point d = diag(grid.coord(n));
    for (int a = 0; a < grid.dim(); ++a) s.axis[a][n] = d[a];
  }
  return s;
}

double Sigma::max_value() const {
  double m = 0.0;
  for (const auto& v : axis) {
    for (double x : v) m = std::max(m, x);
  }
  return m;
}

double Sigma::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& v : axis) {
    if (v.empty()) continue;
    for (double x : v) m = std::min(m, x);
  }
  return m;
}

WeightFunction make_weight(const Grid& grid, const Point& x0) {
  if (!grid.is_outside(x0)) throw PreconditionError("x0 must lie strictly outside the closed domain");
  WeightFunction w;
  w.x0 = x0;
  w.values.resize(grid.num_nodes());
  w.gradient.resize(grid.num_nodes());
  for (std::size_t n = 0; n < grid.num_nodes(); ++n) {
    const Point x = grid.coord(n);
    Point g{0.0, 0.0};
    double v = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      v += (x[a] - x0[a]) * (x[a] - x0[a]);
      g[a] = 2.0 * (x[a] - x0[a]);
    }
    if (std::hypot(g[0], g[1]) <= 0.0) throw PreconditionError("weight function has a critical point in the domain");
    w.values[n] = v;
    w.gradient[n] = g;
  }
  return w;
}

namespace {

// Second-order derivative along one axis: centred inside, one-sided at the ends.
std::vector<double> differentiate(const Grid& grid, std::span<const double> f, int axis) {
  std::vector<double> out(f.size(), 0.0);
  const double h = grid.spacing(axis);
  const int last = grid.cells(axis);
  const std::size_t s = grid.stride(axis);
  for (std::size_t n = 0; n < f.size(); ++n) {
    const int i = grid.index(n)[axis];
    if (i == 0) {
      out[n] = (-3.0 * f[n] + 4.0 * f[n + s] - f[n + 2 * s]) / (2.0 * h);
    } else if (i == last) {
      out[n] = (3.0 * f[n] - 4.0 * f[n - s] + f[n - 2 * s]) / (2.0 * h);
    } else {
      out[n] = (f[n + s] - f[n - s]) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace

ConditionH check_condition_H(const Sigma& sigma, const WeightFunction& weight, const Grid& grid) {
  const int dim = grid.dim();
  const std::size_t N = grid.num_nodes();
  for (int a = 0; a < dim; ++a) {
    if (sigma.axis[a].size() != N) throw PreconditionError("sigma does not match the grid");
    for (double v : sigma.axis[a]) {
      if (!(v > 0.0)) throw PreconditionError("sigma is not positive definite");
    }
  }
  if (weight.values.size() != N) throw PreconditionError("weight does not match the grid");

  // d_j, s_j d_j and the derivatives entering the quadratic form.
  std::array<std::vector<double>, 2> dd;
  for (int j = 0; j < dim; ++j) dd[j] = differentiate(grid, weight.values, j);
  // m[i][j] = d/dx_i (s_j d_j)
  std::array<std::array<std::vector<double>, 2>, 2> m;
  for (int j = 0; j < dim; ++j) {
    std::vector<double> sd(N);
    for (std::size_t n = 0; n < N; ++n) sd[n] = sigma.axis[j][n] * dd[j][n];
    for (int i = 0; i < dim; ++i) m[i][j] = differentiate(grid, sd, i);
  }
  // ds[k][i] = d/dx_k s_i
  std::array<std::array<std::vector<double>, 2>, 2> ds;
  for (int i = 0; i < dim; ++i) {
    for (int k = 0; k < dim; ++k) ds[k][i] = differentiate(grid, sigma.axis[i], k);
  }

  std::vector<Point> dirs;
  if (dim == 1) {
    dirs.push_back({1.0, 0.0});
  } else {
    dirs.push_back({1.0, 0.0});
    dirs.push_back({0.0, 1.0});
    for (int k = 0; k < 16; ++k) {
      const double th = (k + 0.5) * std::numbers::pi / 16.0;
      dirs.push_back({std::cos(th), std::sin(th)});
    }
  }

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < N; ++n) {
    for (const auto& xi : dirs) {
      double lhs = 0.0, rhs = 0.0;
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) lhs += 2.0 * sigma.axis[i][n] * m[i][j][n] * xi[i] * xi[j];
        double t = 0.0;
        for (int k = 0; k < dim; ++k) t += ds[k][i][n] * sigma.axis[k][n] * dd[k][n];
        lhs -= t * xi[i] * xi[i];
        rhs += sigma.axis[i][n] * xi[i] * xi[i];
      }
      best = std::min(best, lhs / rhs);
    }
  }
  return {best, best > 0.05};
}

}  // namespace waveinv
