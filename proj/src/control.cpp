#include "waveinv/control.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>

#include "waveinv/io.hpp"
#include "waveinv/krylov.hpp"
#include "waveinv/semilinear.hpp"

namespace waveinv {

ObservabilityResult observability_ratio(const GridPtr& grid, const Sigma& sigma, const Field* potential,
                                        const std::vector<std::pair<Spatial, Spatial>>& samples, double flux_floor) {
  if (!grid->tagged()) throw PreconditionError("observability needs a tagged gamma0");
  if (samples.empty()) throw PreconditionError("no samples given");
  ObservabilityResult res;
  for (const auto& [phi, psi] : samples) {
    const double data = h1l2_norm(*grid, sigma, phi, psi);
    if (data == 0.0) throw PreconditionError("observability sample must be nonzero");
    Field v = solve_linear(grid, sigma, {.potential = potential, .phi = &phi, .psi = &psi});
    const double flux = l2_norm(neumann_trace(v, sigma, Subset::gamma0));
    double ratio = std::numeric_limits<double>::infinity();
    if (flux <= flux_floor) {
      res.failure = true;
    } else {
      ratio = data / flux;
    }
    res.ratios.push_back(ratio);
    res.max_ratio = std::max(res.max_ratio, ratio);
  }
  return res;
}

namespace {

// Linear map from free control values (gamma0 points, levels 1..nt) to the
// final state of the homogeneous problem, and its transpose.
class ControlMap {
 public:
  ControlMap(const GridPtr& grid, const Sigma& sigma, const Field* potential)
      : grid_(grid), sigma_(sigma), pot_(potential), a_(potential ? potential->data() : nullptr) {
    pts_ = grid->dirichlet_points(Subset::gamma0);
    if (pts_.empty()) throw PreconditionError("gamma0 is empty");
    for (const auto& p : pts_) pos_.push_back(static_cast<std::size_t>(grid->boundary_position(p.node)));
  }

  std::size_t size() const { return static_cast<std::size_t>(grid_->nt()) * pts_.size(); }
  const std::vector<BoundaryPoint>& points() const { return pts_; }

  std::vector<double> mass() const {
    std::vector<double> d(size());
    for (int n = 1; n <= grid_->nt(); ++n) {
      for (std::size_t p = 0; p < pts_.size(); ++p) d[idx(n, p)] = grid_->time_weight(n) * pts_[p].weight;
    }
    return d;
  }

  /// Dirichlet values on all boundary nodes: base trace plus free values x.
  std::vector<double> dirichlet(const BoundaryTrace& base, const Vec* x) const {
    std::vector<double> h = expand_dirichlet(base);
    if (x) {
      const std::size_t nb = grid_->boundary_nodes().size();
      for (int n = 1; n <= grid_->nt(); ++n) {
        for (std::size_t p = 0; p < pts_.size(); ++p) h[n * nb + pos_[p]] += (*x)[idx(n, p)];
      }
    }
    return h;
  }

  FinalState forward(const Vec& x) const {
    BoundaryTrace zero = BoundaryTrace::zeros(grid_, Subset::gamma0, Quantity::dirichlet);
    const auto h = dirichlet(zero, &x);
    Field u(grid_, FieldKind::solution);
    leapfrog(*grid_, sigma_, a_, nullptr, h.data(), nullptr, nullptr, u.data());
    return final_state(u, sigma_, pot_, nullptr);
  }

  /// x = A^T (wu, wv).
  void transpose(const Spatial& wu, const Spatial& wv, Vec& out) const {
    const std::size_t N = grid_->num_nodes();
    std::vector<double> seed(static_cast<std::size_t>(grid_->levels()) * N, 0.0);
    final_state_transpose(*grid_, sigma_, a_, wu, wv, seed);
    const LinearAdjoint adj = solve_transpose(*grid_, sigma_, a_, seed);
    const std::size_t nb = grid_->boundary_nodes().size();
    out.assign(size(), 0.0);
    for (int n = 1; n <= grid_->nt(); ++n) {
      for (std::size_t p = 0; p < pts_.size(); ++p) out[idx(n, p)] = adj.boundary[n * nb + pos_[p]];
    }
  }

  /// (W e_u, M e_v) for the energy form E(e) = 1/2 e^T W e.
  void gram(const FinalState& e, Spatial& wu, Spatial& wv) const {
    energy_gram(*grid_, sigma_, e.u, wu, true);
    wv.resize(e.ut.size());
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = grid_->node_weight(i) * e.ut[i];
  }

  BoundaryTrace trace(const BoundaryTrace& base, const Vec& x) const {
    BoundaryTrace h = base;
    for (int n = 1; n <= grid_->nt(); ++n) {
      for (std::size_t p = 0; p < pts_.size(); ++p) h.at(n, p) += x[idx(n, p)];
    }
    return h;
  }

 private:
  std::size_t idx(int n, std::size_t p) const { return static_cast<std::size_t>(n - 1) * pts_.size() + p; }

  GridPtr grid_;
  const Sigma& sigma_;
  const Field* pot_;
  const double* a_;
  std::vector<BoundaryPoint> pts_;
  std::vector<std::size_t> pos_;
};

FinalState difference(const FinalState& a, const Spatial& bu, const Spatial& but) {
  FinalState d = a;
  for (std::size_t i = 0; i < d.u.size(); ++i) {
    d.u[i] -= bu[i];
    d.ut[i] -= but[i];
  }
  return d;
}

void add_scaled(FinalState& e, double alpha, const FinalState& d) {
  for (std::size_t i = 0; i < e.u.size(); ++i) {
    e.u[i] += alpha * d.u[i];
    e.ut[i] += alpha * d.ut[i];
  }
}

}  // namespace

ControlResult hum_control(const GridPtr& grid, const Sigma& sigma, const Field* potential, const Field* source,
                          const Spatial& phi, const Spatial& psi, const Spatial& target_u, const Spatial& target_ut,
                          const HumOptions& opt) {
  const Grid& g = *grid;
  if (!g.tagged()) throw PreconditionError("control needs a tagged gamma0");
  const std::size_t N = g.num_nodes();
  if (phi.size() != N || psi.size() != N || target_u.size() != N || target_ut.size() != N) {
    throw PreconditionError("initial and target states must have one value per node");
  }
  if (!(opt.penalty > 0.0)) throw PreconditionError("penalty must be positive");
  ControlMap map(grid, sigma, potential);

  // Level 0 of the control is fixed by compatibility with phi.
  BoundaryTrace base = BoundaryTrace::zeros(grid, Subset::gamma0, Quantity::dirichlet);
  for (std::size_t p = 0; p < base.num_points(); ++p) base.at(0, p) = phi[base.points[p].node];

  auto free_final = [&](const Vec* x) {
    const auto h = map.dirichlet(base, x);
    Field u(grid, FieldKind::solution);
    leapfrog(g, sigma, potential ? potential->data() : nullptr, source ? source->data() : nullptr, h.data(), phi.data(),
             psi.data(), u.data());
    return final_state(u, sigma, potential, source);
  };

  ControlResult res;
  res.initial_energy = state_energy(g, sigma, phi, psi);
  const FinalState c = difference(free_final(nullptr), target_u, target_ut);
  const double Ec = state_energy(g, sigma, c.u, c.ut);

  const Vec D = map.mass();
  Spatial wu, wv;
  Vec b;
  map.gram(c, wu, wv);
  map.transpose(wu, wv, b);
  for (double& v : b) v *= -opt.penalty;

  FinalState last;
  LinearOperator H = [&](const Vec& x, Vec& out) {
    last = map.forward(x);
    Spatial lu, lv;
    map.gram(last, lu, lv);
    map.transpose(lu, lv, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = D[i] * x[i] + opt.penalty * out[i];
  };
  LinearOperator P = [&](const Vec& r, Vec& z) {
    z.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / D[i];
  };
  FinalState e = c;
  res.terminal_errors.push_back(Ec);
  auto on_step = [&](double alpha) {
    add_scaled(e, alpha, last);
    res.terminal_errors.push_back(state_energy(g, sigma, e.u, e.ut));
  };

  CgOptions cg{.tol = opt.tol,
               .max_iter = opt.max_cg,
               .metric = StagnationMetric::objective,
               .objective_offset = opt.penalty * Ec};
  CgResult sol = pcg(H, b, P, Vec(map.size(), 0.0), cg, on_step);
  res.cg_iterations = sol.iterations;
  res.converged = sol.converged;
  res.stagnated = sol.stagnated;
  res.cg_residuals = sol.residual;
  res.residual_history = sol.objective;

  res.control = map.trace(base, sol.x);
  res.final_state = free_final(&sol.x);
  const FinalState gap = difference(res.final_state, target_u, target_ut);
  res.terminal_error = state_energy(g, sigma, gap.u, gap.ut);

  const bool short_horizon = g.duration() < control_time(g);
  const double scale = std::max(res.initial_energy, state_energy(g, sigma, target_u, target_ut));
  const bool missed = res.terminal_error > opt.uncontrollable_fraction * scale;
  if (short_horizon) {
    res.warnings.push_back("horizon " + fmt(g.duration()) + " is below the control time " + fmt(control_time(g)));
    if (missed) {
      res.likely_uncontrollable = true;
      res.warnings.push_back("likely uncontrollable horizon");
    }
  }
  if (sol.stagnated) {
    // A stalled functional with the target reached is a converged run.
    if (!missed) {
      res.converged = true;
    } else if (!short_horizon) {
      throw NumericalError("conjugate gradients stagnated", "hum");
    } else {
      res.warnings.push_back("conjugate gradients stagnated");
    }
  }
  return res;
}

DriveResult drive_to_zero_then_freeze(const Scenario& s, double t_star, double eps, const HumOptions& opt,
                                      int max_outer, double outer_tol) {
  const Grid& g = *s.grid;
  if (!(eps > 0.0)) throw PreconditionError("eps must be positive");
  const int nsw = g.level_of(t_star + eps);
  if (nsw < 1 || nsw > g.nt()) throw PreconditionError("switch time outside the time interval");
  GridPtr tg = share(g.with_levels(nsw));
  const Spatial zero(g.num_nodes(), 0.0);

  DriveResult out;
  out.switch_time = tg->t_final();
  SemilinearData d0{.phi = &s.phi, .psi = &s.psi};
  Field u = solve_semilinear(tg, s.sigma, s.f, d0, s.solver).u;
  std::vector<double> prev;
  for (int k = 1; k <= max_outer; ++k) {
    const Field a = quotient_potential(u, s.f);
    const Field K = zero_state_source(tg, s.f);
    out.hum = hum_control(tg, s.sigma, &a, &K, s.phi, s.psi, zero, zero, opt);
    out.outer_iterations = k;
    const auto& h = out.hum.control.values;
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double p = prev.empty() ? 0.0 : prev[i];
      diff += (h[i] - p) * (h[i] - p);
      norm += h[i] * h[i];
    }
    if (norm == 0.0 || (!prev.empty() && std::sqrt(diff) <= outer_tol * std::sqrt(norm))) break;
    prev = h;
    SemilinearData d{.dirichlet = &out.hum.control, .phi = &s.phi, .psi = &s.psi};
    u = solve_semilinear(tg, s.sigma, s.f, d, s.solver).u;
  }

  out.control = BoundaryTrace::zeros(s.grid, Subset::gamma0, Quantity::dirichlet);
  const std::size_t np = out.control.num_points();
  for (int n = 0; n <= nsw; ++n) {
    for (std::size_t p = 0; p < np; ++p) out.control.at(n, p) = out.hum.control.at(n, p);
  }
  return out;
}

void write_cg_log(const std::filesystem::path& path, const ControlResult& r) {
  CsvWriter w(path);
  w.header({"iteration", "functional", "terminal_error"});
  for (std::size_t k = 0; k < r.residual_history.size(); ++k) {
    const double te = k < r.terminal_errors.size() ? r.terminal_errors[k] : r.terminal_error;
    w.row({static_cast<double>(k), r.residual_history[k], te});
  }
  w.close();
}

namespace {

double cubic_bspline(double x) {
  if (x <= 0.0 || x >= 4.0) return 0.0;
  if (x < 1.0) return x * x * x / 6.0;
  if (x < 2.0) return (-3 * x * x * x + 12 * x * x - 12 * x + 4) / 6.0;
  if (x < 3.0) return (3 * x * x * x - 24 * x * x + 60 * x - 44) / 6.0;
  const double y = 4.0 - x;
  return y * y * y / 6.0;
}

// Spatial profile of a boundary mode on a boundary node.
double mode_value(const Grid& g, int mode, int modes_per_edge, std::size_t node) {
  if (g.dim() == 1) return g.index(node)[0] == (mode == 0 ? 0 : g.cells(0)) ? 1.0 : 0.0;
  const int edge = mode / modes_per_edge;
  const int k = mode % modes_per_edge + 1;
  const int axis = edge / 2, side = edge % 2;
  const auto ij = g.index(node);
  if (ij[axis] != (side == 0 ? 0 : g.cells(axis))) return 0.0;
  const int along = 1 - axis;
  const double s = static_cast<double>(ij[along]) / g.cells(along);
  return std::sin(k * std::numbers::pi * s);
}

}  // namespace

int runge_mode_count(const Grid& g, int modes_per_edge) { return g.dim() == 1 ? 2 : 4 * modes_per_edge; }

BoundaryTrace runge_basis_trace(const GridPtr& grid, int mode, int spline, int temporal_size, int modes_per_edge) {
  const Grid& g = *grid;
  const double H = g.duration() / temporal_size;
  BoundaryTrace tr = BoundaryTrace::zeros(grid, Subset::all, Quantity::dirichlet);
  for (std::size_t p = 0; p < tr.num_points(); ++p) {
    const double m = mode_value(g, mode, modes_per_edge, tr.points[p].node);
    if (m == 0.0) continue;
    for (int n = 0; n < g.levels(); ++n) tr.at(n, p) = m * cubic_bspline((g.time(n) - g.t_start()) / H - spline);
  }
  return tr;
}

RungeResult runge_approximate(const GridPtr& grid, const Sigma& sigma, const Field* potential, const Field& target,
                              double t1, double t2, const RungeOptions& opt) {
  const Grid& g = *grid;
  if (!target.grid().same_layout(g) || target.grid().levels() != g.levels()) {
    throw PreconditionError("target must live on the solve grid");
  }
  if (opt.temporal_sizes.empty()) throw PreconditionError("no basis sizes given");
  if (g.dim() == 2 && opt.modes_per_edge < 1) throw PreconditionError("need at least one mode per edge");
  const auto tw = window_weights(g, t1, t2);
  const std::size_t N = g.num_nodes();
  std::vector<int> rows_level;
  for (int n = 0; n < g.levels(); ++n) {
    if (tw[n] > 0.0) rows_level.push_back(n);
  }
  const Eigen::Index R = static_cast<Eigen::Index>(rows_level.size() * N);
  Eigen::VectorXd w(R), rhs(R);
  for (std::size_t r = 0; r < rows_level.size(); ++r) {
    const int n = rows_level[r];
    for (std::size_t i = 0; i < N; ++i) {
      const Eigen::Index k = static_cast<Eigen::Index>(r * N + i);
      w[k] = std::sqrt(tw[n] * g.node_weight(i));
      rhs[k] = w[k] * target.at(n, i);
    }
  }
  const double target_norm = rhs.norm();
  const int modes = runge_mode_count(g, opt.modes_per_edge);

  RungeResult res;
  res.approximation = Field(grid, FieldKind::solution);
  res.control = BoundaryTrace::zeros(grid, Subset::all, Quantity::dirichlet);
  res.rel_error = std::numeric_limits<double>::infinity();
  if (target_norm == 0.0) {
    res.rel_error = 0.0;
    res.reached = true;
    return res;
  }
  for (int m : opt.temporal_sizes) {
    if (m < 1) throw PreconditionError("temporal basis size must be positive");
    const int cols = modes * m;
    Eigen::MatrixXd A(R, cols);
    std::vector<BoundaryTrace> traces;
    std::vector<Field> sols;
    for (int mode = 0; mode < modes; ++mode) {
      for (int k = 0; k < m; ++k) {
        BoundaryTrace tr = runge_basis_trace(grid, mode, k, m, opt.modes_per_edge);
        Field V = solve_linear(grid, sigma, {.potential = potential, .dirichlet = &tr});
        const int c = mode * m + k;
        for (std::size_t r = 0; r < rows_level.size(); ++r) {
          for (std::size_t i = 0; i < N; ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(r * N + i);
            A(row, c) = w[row] * V.at(rows_level[r], i);
          }
        }
        traces.push_back(std::move(tr));
        sols.push_back(std::move(V));
      }
    }
    const Eigen::VectorXd coef = A.colPivHouseholderQr().solve(rhs);
    const double err = (A * coef - rhs).norm() / target_norm;
    res.history.push_back({cols, err});
    if (err < res.rel_error) {
      res.rel_error = err;
      res.basis_size = cols;
      res.approximation = Field(grid, FieldKind::solution);
      res.control = BoundaryTrace::zeros(grid, Subset::all, Quantity::dirichlet);
      for (int c = 0; c < cols; ++c) {
        res.approximation += coef[c] * sols[c];
        res.control += coef[c] * traces[c];
      }
    }
  }
  res.reached = res.rel_error <= opt.tol;
  if (!res.reached) res.warnings.push_back("approximation not reached");
  return res;
}

}  // namespace waveinv
