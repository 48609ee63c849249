#include "waveinv/field.hpp"

namespace waveinv {

std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::solution: return "solution";
    case FieldKind::potential: return "potential";
    case FieldKind::source: return "source";
    case FieldKind::amplitude: return "amplitude";
  }
  return "solution";
}

std::string to_string(Quantity q) {
  return q == Quantity::dirichlet ? "dirichlet" : "neumann_flux";
}

Spatial sample_spatial(const Grid& grid, const std::function<double(const Point&)>& fn) {
  Spatial v(grid.num_nodes());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid.coord(i));
  return v;
}

BoundaryTrace BoundaryTrace::zeros(GridPtr grid, Subset subset, Quantity quantity) {
  BoundaryTrace t;
  t.points = quantity == Quantity::dirichlet ? grid->dirichlet_points(subset) : grid->flux_points(subset);
  t.values.assign(static_cast<std::size_t>(grid->levels()) * t.points.size(), 0.0);
  t.grid = std::move(grid);
  t.subset = subset;
  t.quantity = quantity;
  return t;
}

BoundaryTrace BoundaryTrace::sample(GridPtr grid, Subset subset, const std::function<double(const Point&, double)>& fn) {
  BoundaryTrace t = zeros(grid, subset, Quantity::dirichlet);
  for (int n = 0; n < grid->levels(); ++n) {
    for (std::size_t p = 0; p < t.points.size(); ++p) t.at(n, p) = fn(grid->coord(t.points[p].node), grid->time(n));
  }
  return t;
}

bool BoundaryTrace::same_shape(const BoundaryTrace& o) const {
  if (points.size() != o.points.size() || values.size() != o.values.size()) return false;
  if (quantity != o.quantity || subset != o.subset) return false;
  for (std::size_t p = 0; p < points.size(); ++p) {
    if (points[p].node != o.points[p].node || points[p].edge != o.points[p].edge) return false;
  }
  return grid->same_layout(*o.grid);
}

BoundaryTrace& BoundaryTrace::operator+=(const BoundaryTrace& o) {
  if (!same_shape(o)) throw PreconditionError("boundary traces differ in shape");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
  return *this;
}

BoundaryTrace& BoundaryTrace::operator-=(const BoundaryTrace& o) {
  if (!same_shape(o)) throw PreconditionError("boundary traces differ in shape");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
  return *this;
}

BoundaryTrace& BoundaryTrace::operator*=(double s) {
  for (auto& v : values) v *= s;
  return *this;
}

std::vector<double> expand_dirichlet(const BoundaryTrace& h) {
  if (h.quantity != Quantity::dirichlet) throw PreconditionError("expected a Dirichlet trace");
  const Grid& g = *h.grid;
  const std::size_t nb = g.boundary_nodes().size();
  std::vector<double> out(static_cast<std::size_t>(g.levels()) * nb, 0.0);
  for (int n = 0; n < g.levels(); ++n) {
    for (std::size_t p = 0; p < h.points.size(); ++p) {
      const long b = g.boundary_position(h.points[p].node);
      out[n * nb + static_cast<std::size_t>(b)] = h.at(n, p);
    }
  }
  return out;
}

}  // namespace waveinv
