#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>

#include "waveinv/inversion.hpp"
#include "waveinv/semilinear.hpp"
#include "waveinv/wave.hpp"

namespace waveinv {

std::string to_string(FdScheme s) { return s == FdScheme::forward ? "forward" : "central"; }

FdScheme fd_scheme_from_string(const std::string& s) {
  if (s == "forward") return FdScheme::forward;
  if (s == "central") return FdScheme::central;
  throw ConfigError("unknown finite-difference scheme '" + s + "'");
}

FdScheme default_scheme(int order) { return order <= 2 ? FdScheme::central : FdScheme::forward; }

void LinearizationStencil::validate() const {
  if (directions.empty()) throw PreconditionError("stencil needs at least one direction");
  if (order < 1 || order > 4) throw PreconditionError("linearization order must be in 1..4");
  if (!(eps > 0.0)) throw PreconditionError("eps must be positive");
  if (eps < 1e-8) throw PreconditionError("eps below 1e-8 loses the derivative to cancellation");
  for (const auto& g : directions) {
    if (g.quantity != Quantity::dirichlet) throw PreconditionError("directions must be Dirichlet data");
    if (!g.same_shape(directions.front())) throw PreconditionError("directions must share grid and boundary subset");
    if (std::none_of(g.values.begin(), g.values.end(), [](double v) { return v != 0.0; })) {
      throw PreconditionError("direction is identically zero");
    }
  }
}

namespace {

double pulse(double t, double c, double w) {
  const double r = (t - c) / w;
  if (std::abs(r) >= 1.0) return 0.0;
  const double s = 1.0 - r * r;
  return s * s * s * s;
}

// Edge index of a boundary node (1D: 0 left, 1 right; 2D: axis * 2 + side,
// first match) and the normalized coordinate along that edge.
std::pair<int, double> edge_of(const Grid& g, std::size_t node) {
  const Point x = g.coord(node);
  for (int a = 0; a < g.dim(); ++a) {
    const Interval& e = g.extent(a);
    const double tol = 1e-9 * e.length();
    for (int side = 0; side < 2; ++side) {
      const double b = side == 0 ? e.lo : e.hi;
      if (std::abs(x[a] - b) > tol) continue;
      if (g.dim() == 1) return {side, 0.5};
      const int o = 1 - a;
      const Interval& eo = g.extent(o);
      return {a * 2 + side, (x[o] - eo.lo) / eo.length()};
    }
  }
  return {-1, 0.0};
}

BoundaryTrace combine_directions(const LinearizationStencil& st, const std::vector<int>& idx,
                                 const std::vector<double>& coef) {
  BoundaryTrace h = st.directions[static_cast<std::size_t>(idx[0])];
  std::fill(h.values.begin(), h.values.end(), 0.0);
  for (std::size_t l = 0; l < idx.size(); ++l) {
    if (coef[l] == 0.0) continue;
    const auto& g = st.directions[static_cast<std::size_t>(idx[l])].values;
    for (std::size_t k = 0; k < g.size(); ++k) h.values[k] += coef[l] * g[k];
  }
  return h;
}

void check_index(const LinearizationStencil& st, const std::vector<int>& idx) {
  st.validate();
  if (idx.empty()) throw PreconditionError("multi-index is empty");
  if (static_cast<int>(idx.size()) > st.order) throw PreconditionError("multi-index longer than the stencil order");
  for (std::size_t a = 0; a < idx.size(); ++a) {
    if (idx[a] < 0 || idx[a] >= static_cast<int>(st.directions.size())) {
      throw PreconditionError("multi-index refers to a missing direction");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (idx[a] == idx[b]) throw PreconditionError("multi-index entries must be distinct");
    }
  }
}

// Weighted sum over the 2^m corners of the stencil; `eval` returns the
// response to boundary data sum coef_l g_l.
template <class T>
T corner_sum(const LinearizationStencil& st, const std::vector<int>& idx,
             const std::function<T(const BoundaryTrace&)>& eval) {
  const int m = static_cast<int>(idx.size());
  std::optional<T> out;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<double> coef(static_cast<std::size_t>(m));
    double w = 0.0;
    if (st.scheme == FdScheme::forward) {
      for (int l = 0; l < m; ++l) coef[l] = (mask >> l & 1u) ? st.eps : 0.0;
      w = ((m - std::popcount(mask)) % 2 == 0 ? 1.0 : -1.0) / std::pow(st.eps, m);
    } else {
      double sgn = 1.0;
      for (int l = 0; l < m; ++l) {
        const double s = (mask >> l & 1u) ? 1.0 : -1.0;
        coef[l] = s * st.eps;
        sgn *= s;
      }
      w = sgn / std::pow(2.0 * st.eps, m);
    }
    T v = eval(combine_directions(st, idx, coef));
    v *= w;
    if (out) {
      *out += v;
    } else {
      out = std::move(v);
    }
  }
  return std::move(*out);
}

}  // namespace

std::vector<BoundaryTrace> pulse_directions(const GridPtr& grid, Subset subset, int count, double first_center,
                                            double last_center, double width) {
  const Grid& g = *grid;
  BoundaryTrace base = BoundaryTrace::zeros(grid, subset, Quantity::dirichlet);
  std::vector<int> edges;
  for (const auto& bp : base.points) {
    const int e = edge_of(g, bp.node).first;
    if (e >= 0 && std::find(edges.begin(), edges.end(), e) == edges.end()) edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end());
  if (edges.empty()) throw PreconditionError("boundary subset is empty");
  if (count < static_cast<int>(edges.size()) || count % static_cast<int>(edges.size()) != 0) {
    throw PreconditionError("direction count must be a positive multiple of the number of source edges");
  }
  if (first_center - width < 0.0 || last_center + width > g.t_final() || last_center < first_center) {
    throw PreconditionError("pulses must start after t = 0 and end before T");
  }
  const int per = count / static_cast<int>(edges.size());
  std::vector<BoundaryTrace> out;
  for (int k = 0; k < per; ++k) {
    const double c = per == 1 ? first_center : first_center + (last_center - first_center) * k / (per - 1);
    for (int e : edges) {
      BoundaryTrace h = base;
      for (std::size_t p = 0; p < h.points.size(); ++p) {
        const auto [edge, s] = edge_of(g, h.points[p].node);
        if (edge != e) continue;
        const double prof = g.dim() == 1 ? 1.0 : std::sin(std::numbers::pi * s);
        for (int n = 0; n < g.levels(); ++n) h.at(n, p) = prof * pulse(g.time(n), c, width);
      }
      out.push_back(std::move(h));
    }
  }
  return out;
}

Field fd_linearize(const Scenario& s, const LinearizationStencil& st, const std::vector<int>& multi_index) {
  check_index(st, multi_index);
  if (!st.directions.front().grid->same_layout(*s.grid)) throw PreconditionError("directions live on another grid");
  return corner_sum<Field>(st, multi_index, [&](const BoundaryTrace& h) {
    SemilinearData d{.dirichlet = &h, .phi = &s.phi, .psi = &s.psi};
    return solve_semilinear(s.grid, s.sigma, s.f, d, s.solver).u;
  });
}

BoundaryTrace fd_linearize_flux(const MeasurementOracle& oracle, const LinearizationStencil& st,
                                const std::vector<int>& multi_index) {
  check_index(st, multi_index);
  return corner_sum<BoundaryTrace>(st, multi_index, [&](const BoundaryTrace& h) { return oracle.full_io(h).flux; });
}

std::complex<double> integral_identity(const Field& delta, const std::vector<ComplexField>& tests, double t1,
                                       double t2) {
  const Grid& g = delta.grid();
  if (tests.size() < 2) throw PreconditionError("integral identity needs at least two test solutions");
  if (t1 < g.t_start() - 1e-12 || t2 > g.t_final() + 1e-12 || !(t2 > t1)) {
    throw PreconditionError("window lies outside (0, T)");
  }
  for (const auto& v : tests) {
    const Grid& tg = v.grid();
    if (!tg.same_space(g) || std::abs(tg.dt() - g.dt()) > 1e-14) {
      throw PreconditionError("test solution lives on another grid");
    }
    if (tg.t_start() > t1 + 1e-9 || tg.t_final() < t2 - 1e-9) {
      throw PreconditionError("test solution does not cover the window");
    }
  }
  const std::vector<double> tw = window_weights(g, t1, t2);
  const std::size_t N = g.num_nodes();
  std::complex<double> sum{};
  for (int n = 0; n < g.levels(); ++n) {
    if (tw[n] == 0.0) continue;
    const double t = g.time(n);
    std::vector<int> lev;
    for (const auto& v : tests) lev.push_back(static_cast<int>(std::lround((t - v.grid().t_start()) / g.dt())));
    for (std::size_t i = 0; i < N; ++i) {
      std::complex<double> p = delta.at(n, i);
      for (std::size_t k = 0; k < tests.size(); ++k) p *= tests[k].at(lev[k], i);
      sum += tw[n] * g.node_weight(i) * p;
    }
  }
  return sum;
}

MixedModel::MixedModel(GridPtr grid, Sigma sigma, std::vector<const Field*> coeffs,
                       std::vector<const BoundaryTrace*> dirs)
    : grid_(std::move(grid)), sigma_(std::move(sigma)), coeffs_(std::move(coeffs)), dirs_(std::move(dirs)) {
  if (dirs_.empty() || dirs_.size() > 4) throw PreconditionError("mixed model supports 1 to 4 directions");
  if (coeffs_.empty()) coeffs_.push_back(nullptr);
}

namespace {

// All set partitions of `rest`, appended to out.
void partitions(unsigned rest, std::vector<unsigned>& blocks, std::vector<std::vector<unsigned>>& out) {
  if (rest == 0) {
    out.push_back(blocks);
    return;
  }
  const unsigned low = rest & (~rest + 1u);
  const unsigned others = rest & ~low;
  // iterate over subsets of `others`, including the empty one
  unsigned sub = others;
  while (true) {
    blocks.push_back(low | sub);
    partitions(rest & ~(low | sub), blocks, out);
    blocks.pop_back();
    if (sub == 0) break;
    sub = (sub - 1) & others;
  }
}

}  // namespace

Field MixedModel::solve(const Field& source) const {
  LinearData d;
  d.potential = coeffs_[0];
  d.source = &source;
  return solve_linear(grid_, sigma_, d);
}

Field MixedModel::source(unsigned mask, bool skip_top) {
  Field src(grid_, FieldKind::source);
  std::vector<std::vector<unsigned>> parts;
  std::vector<unsigned> blocks;
  partitions(mask, blocks, parts);
  const std::size_t size = src.size();
  for (const auto& p : parts) {
    if (p.size() < 2) continue;
    if (skip_top && p.size() == static_cast<std::size_t>(std::popcount(mask))) continue;
    if (p.size() > coeffs_.size() || coeffs_[p.size() - 1] == nullptr) continue;
    const Field& c = *coeffs_[p.size() - 1];
    std::vector<double> prod(c.values());
    for (unsigned b : p) {
      const Field& w = mixed(b);
      for (std::size_t k = 0; k < size; ++k) prod[k] *= w.values()[k];
    }
    for (std::size_t k = 0; k < size; ++k) src.values()[k] -= prod[k];
  }
  return src;
}

const Field& MixedModel::mixed(unsigned mask) {
  if (mask == 0 || mask >= (1u << dirs_.size())) throw PreconditionError("invalid direction subset");
  if (auto it = cache_.find(mask); it != cache_.end()) return it->second;
  Field w;
  if (std::popcount(mask) == 1) {
    LinearData d;
    d.potential = coeffs_[0];
    d.dirichlet = dirs_[static_cast<std::size_t>(std::countr_zero(mask))];
    w = solve_linear(grid_, sigma_, d);
  } else {
    w = solve(source(mask, false));
  }
  return cache_.emplace(mask, std::move(w)).first->second;
}

double clamped_bspline(int j, int m, double t1, double t2, double t) {
  if (m < 4 || j < 0 || j >= m) throw PreconditionError("invalid clamped B-spline index");
  if (t < t1 || t > t2) return 0.0;
  const double u = (t - t1) / (t2 - t1);
  if (u >= 1.0) return j == m - 1 ? 1.0 : 0.0;
  const int intervals = m - 3;
  std::vector<double> knots;
  for (int k = 0; k < 3; ++k) knots.push_back(0.0);
  for (int k = 0; k <= intervals; ++k) knots.push_back(static_cast<double>(k) / intervals);
  for (int k = 0; k < 3; ++k) knots.push_back(1.0);
  // Cox-de Boor
  std::vector<double> b(knots.size() - 1, 0.0);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) b[i] = (u >= knots[i] && u < knots[i + 1]) ? 1.0 : 0.0;
  for (int d = 1; d <= 3; ++d) {
    for (std::size_t i = 0; i + d + 1 < knots.size(); ++i) {
      double v = 0.0;
      const double l = knots[i + d] - knots[i];
      const double r = knots[i + d + 1] - knots[i + 1];
      if (l > 0.0) v += (u - knots[i]) / l * b[i];
      if (r > 0.0) v += (knots[i + d + 1] - u) / r * b[i + 1];
      b[i] = v;
    }
  }
  return b[static_cast<std::size_t>(j)];
}

int SpaceTimeBasis::size(int dim) const {
  return static_cast<int>(std::pow(spatial, dim)) * temporal;
}

BasisTables SpaceTimeBasis::tables(const Grid& g) const {
  if (spatial < 1 || temporal < 4) throw PreconditionError("basis needs >= 1 spatial mode and >= 4 splines");
  if (!(t2 > t1) || t1 < g.t_start() - 1e-12 || t2 > g.t_final() + 1e-12) {
    throw PreconditionError("basis window lies outside (0, T)");
  }
  const std::size_t N = g.num_nodes();
  BasisTables b;
  const int ny = g.dim() == 2 ? spatial : 1;
  for (int ky = 0; ky < ny; ++ky) {
    for (int kx = 0; kx < spatial; ++kx) {
      Spatial m(N);
      for (std::size_t i = 0; i < N; ++i) {
        const Point x = g.coord(i);
        double v = std::cos(kx * std::numbers::pi * (x[0] - g.extent(0).lo) / g.extent(0).length());
        if (g.dim() == 2) v *= std::cos(ky * std::numbers::pi * (x[1] - g.extent(1).lo) / g.extent(1).length());
        m[i] = v;
      }
      b.modes.push_back(std::move(m));
    }
  }
  for (int j = 0; j < temporal; ++j) {
    std::vector<double> s(static_cast<std::size_t>(g.levels()));
    for (int n = 0; n < g.levels(); ++n) s[n] = clamped_bspline(j, temporal, t1, t2, g.time(n));
    b.splines.push_back(std::move(s));
  }
  return b;
}

Field basis_element(const GridPtr& grid, const BasisTables& b, std::size_t j) {
  Field f(grid, FieldKind::potential);
  const std::size_t N = grid->num_nodes();
  for (int n = 0; n < grid->levels(); ++n) {
    for (std::size_t i = 0; i < N; ++i) f.at(n, i) = b.value(j, n, i);
  }
  return f;
}

Field basis_combine(const GridPtr& grid, const BasisTables& b, const Eigen::VectorXd& c) {
  if (static_cast<std::size_t>(c.size()) != b.size()) throw PreconditionError("coefficient count mismatch");
  Field f(grid, FieldKind::potential);
  const std::size_t N = grid->num_nodes();
  const std::size_t S = b.splines.size();
  for (std::size_t m = 0; m < b.modes.size(); ++m) {
    for (std::size_t s = 0; s < S; ++s) {
      const double cj = c[static_cast<Eigen::Index>(m * S + s)];
      if (cj == 0.0) continue;
      for (int n = 0; n < grid->levels(); ++n) {
        const double bt = cj * b.splines[s][static_cast<std::size_t>(n)];
        if (bt == 0.0) continue;
        for (std::size_t i = 0; i < N; ++i) f.at(n, i) += bt * b.modes[m][i];
      }
    }
  }
  return f;
}

Eigen::MatrixXd basis_gram(const Grid& g, const BasisTables& b) {
  const std::size_t M = b.modes.size(), S = b.splines.size();
  Eigen::MatrixXd gs(M, M), gt(S, S);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t c = 0; c < M; ++c) {
      double v = 0.0;
      for (std::size_t i = 0; i < g.num_nodes(); ++i) v += g.node_weight(i) * b.modes[a][i] * b.modes[c][i];
      gs(a, c) = v;
    }
  }
  for (std::size_t a = 0; a < S; ++a) {
    for (std::size_t c = 0; c < S; ++c) {
      double v = 0.0;
      for (int n = 0; n < g.levels(); ++n) v += g.time_weight(n) * b.splines[a][n] * b.splines[c][n];
      gt(a, c) = v;
    }
  }
  Eigen::MatrixXd G(M * S, M * S);
  for (std::size_t a = 0; a < M; ++a) {
    for (std::size_t c = 0; c < M; ++c) G.block(a * S, c * S, S, S) = gs(a, c) * gt;
  }
  return G;
}

}  // namespace waveinv
