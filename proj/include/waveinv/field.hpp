#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "waveinv/error.hpp"
#include "waveinv/grid.hpp"

namespace waveinv {

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr share(Grid g) { return std::make_shared<const Grid>(std::move(g)); }

enum class FieldKind : std::uint8_t { solution, potential, source, amplitude };

std::string to_string(FieldKind k);

/// Samples of a scalar function on every (time level, node) of a grid,
/// stored as values[n * num_nodes + node].
template <class T>
class BasicField {
 public:
  using value_type = T;

  BasicField() = default;
  BasicField(GridPtr grid, FieldKind kind) : grid_(std::move(grid)), kind_(kind) {
    check_kind();
    values_.assign(static_cast<std::size_t>(grid_->levels()) * grid_->num_nodes(), T{});
  }
  BasicField(GridPtr grid, FieldKind kind, std::vector<T> values)
      : grid_(std::move(grid)), kind_(kind), values_(std::move(values)) {
    check_kind();
    if (values_.size() != static_cast<std::size_t>(grid_->levels()) * grid_->num_nodes()) {
      throw PreconditionError("field shape does not match the grid");
    }
  }

  static BasicField sample(GridPtr grid, FieldKind kind, const std::function<T(const Point&, double)>& fn) {
    BasicField f(grid, kind);
    const std::size_t N = grid->num_nodes();
    for (int n = 0; n < grid->levels(); ++n) {
      const double t = grid->time(n);
      for (std::size_t i = 0; i < N; ++i) f.values_[n * N + i] = fn(grid->coord(i), t);
    }
    return f;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  FieldKind kind() const { return kind_; }
  void set_kind(FieldKind k) {
    kind_ = k;
    check_kind();
  }

  std::size_t size() const { return values_.size(); }
  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }
  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }

  std::span<T> level(int n) { return {values_.data() + n * grid_->num_nodes(), grid_->num_nodes()}; }
  std::span<const T> level(int n) const { return {values_.data() + n * grid_->num_nodes(), grid_->num_nodes()}; }
  T& at(int n, std::size_t node) { return values_[n * grid_->num_nodes() + node]; }
  const T& at(int n, std::size_t node) const { return values_[n * grid_->num_nodes() + node]; }

  BasicField& operator+=(const BasicField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  BasicField& operator-=(const BasicField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  BasicField& operator*=(T s) {
    for (auto& v : values_) v *= s;
    return *this;
  }
  friend BasicField operator+(BasicField a, const BasicField& b) { return a += b; }
  friend BasicField operator-(BasicField a, const BasicField& b) { return a -= b; }
  friend BasicField operator*(T s, BasicField a) { return a *= s; }

 private:
  void check_kind() const {
    if constexpr (!std::is_same_v<T, double>) {
      if (kind_ != FieldKind::solution && kind_ != FieldKind::amplitude) {
        throw PreconditionError("complex values are only allowed for solution and amplitude fields");
      }
    }
  }
  void check_same(const BasicField& o) const {
    if (o.values_.size() != values_.size()) throw PreconditionError("field shapes differ");
  }

  GridPtr grid_;
  FieldKind kind_ = FieldKind::solution;
  std::vector<T> values_;
};

using Field = BasicField<double>;
using ComplexField = BasicField<std::complex<double>>;

/// Nodal values at one time level.
using Spatial = std::vector<double>;

Spatial sample_spatial(const Grid& grid, const std::function<double(const Point&)>& fn);

enum class Quantity : std::uint8_t { dirichlet, neumann_flux };

std::string to_string(Quantity q);

/// Time series on a boundary subset: values[n * num_points + p].
struct BoundaryTrace {
  GridPtr grid;
  Subset subset = Subset::all;
  Quantity quantity = Quantity::dirichlet;
  std::vector<BoundaryPoint> points;
  std::vector<double> values;

  static BoundaryTrace zeros(GridPtr grid, Subset subset, Quantity quantity);
  static BoundaryTrace sample(GridPtr grid, Subset subset, const std::function<double(const Point&, double)>& fn);

  std::size_t num_points() const { return points.size(); }
  int levels() const { return grid->levels(); }
  double& at(int n, std::size_t p) { return values[n * points.size() + p]; }
  double at(int n, std::size_t p) const { return values[n * points.size() + p]; }
  bool same_shape(const BoundaryTrace& o) const;

  BoundaryTrace& operator+=(const BoundaryTrace& o);
  BoundaryTrace& operator-=(const BoundaryTrace& o);
  BoundaryTrace& operator*=(double s);
  friend BoundaryTrace operator+(BoundaryTrace a, const BoundaryTrace& b) { return a += b; }
  friend BoundaryTrace operator-(BoundaryTrace a, const BoundaryTrace& b) { return a -= b; }
  friend BoundaryTrace operator*(double s, BoundaryTrace a) { return a *= s; }
};

/// Dirichlet data on every boundary node: values[n * nb + b] in boundary_nodes() order.
std::vector<double> expand_dirichlet(const BoundaryTrace& h);

}  // namespace waveinv
