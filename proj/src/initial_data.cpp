#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>

#include "waveinv/inversion.hpp"
#include "waveinv/krylov.hpp"
#include "waveinv/semilinear.hpp"
#include "waveinv/wave.hpp"

namespace waveinv {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

// Unknowns are (phi, psi) on interior nodes; boundary values of phi follow the
// Dirichlet input at t = 0 and psi vanishes there.
class InitialProblem {
 public:
  InitialProblem(const Scenario& model, const MeasurementRecord& record, double fit_until)
      : model_(model), record_(record), grid_(model.grid) {
    const Grid& g = *grid_;
    interior_ = g.interior_nodes();
    ni_ = interior_.size();
    weights_.resize(record.flux.values.size());
    const std::size_t P = record.flux.points.size();
    for (int n = 0; n < g.levels(); ++n) {
      const bool fit = fit_until <= 0.0 || g.time(n) <= fit_until + 1e-12;
      for (std::size_t p = 0; p < P; ++p) {
        weights_[n * P + p] = fit ? g.time_weight(n) * record.flux.points[p].weight : 0.0;
      }
    }
    assemble_regularizer();
  }

  std::size_t size() const { return 2 * ni_; }

  std::pair<Spatial, Spatial> expand(const Vec& x, bool with_boundary) const {
    const Grid& g = *grid_;
    Spatial phi(g.num_nodes(), 0.0), psi(g.num_nodes(), 0.0);
    for (std::size_t k = 0; k < ni_; ++k) {
      phi[interior_[k]] = x[k];
      psi[interior_[k]] = x[ni_ + k];
    }
    if (with_boundary) {
      const std::size_t nb = g.boundary_nodes().size();
      const std::vector<double> h = expand_dirichlet(record_.input);
      for (std::size_t b = 0; b < nb; ++b) phi[g.boundary_nodes()[b]] = h[b];
    }
    return {phi, psi};
  }

  Vec restrict(const Spatial& phi, const Spatial& psi) const {
    Vec x(2 * ni_);
    for (std::size_t k = 0; k < ni_; ++k) {
      x[k] = phi[interior_[k]];
      x[ni_ + k] = psi[interior_[k]];
    }
    return x;
  }

  // Semilinear solve at x and the flux residual flux(x) - observed.
  Field forward(const Vec& x, BoundaryTrace& resid) const {
    auto [phi, psi] = expand(x, true);
    SemilinearData d{.dirichlet = &record_.input, .phi = &phi, .psi = &psi};
    Field u = solve_semilinear(grid_, model_.sigma, model_.f, d, model_.solver).u;
    resid = neumann_trace(u, model_.sigma, record_.flux.subset) - record_.flux;
    return u;
  }

  double misfit(const BoundaryTrace& r) const {
    double s = 0.0;
    for (std::size_t k = 0; k < r.values.size(); ++k) s += weights_[k] * r.values[k] * r.values[k];
    return s;
  }

  // Linearized flux map at potential a.
  BoundaryTrace apply(const Field& a, const Vec& x) const {
    auto [phi, psi] = expand(x, false);
    LinearData d;
    d.potential = &a;
    d.phi = &phi;
    d.psi = &psi;
    return neumann_trace(solve_linear(grid_, model_.sigma, d), model_.sigma, record_.flux.subset);
  }

  // Transpose of apply applied to W y.
  Vec apply_transpose(const Field& a, const BoundaryTrace& y) const {
    BoundaryTrace wy = y;
    for (std::size_t k = 0; k < wy.values.size(); ++k) wy.values[k] *= weights_[k];
    std::vector<double> seed(static_cast<std::size_t>(grid_->levels()) * grid_->num_nodes(), 0.0);
    neumann_trace_transpose(wy, model_.sigma, seed);
    const LinearAdjoint adj = solve_transpose(*grid_, model_.sigma, a.data(), seed);
    return restrict(adj.phi, adj.psi);
  }

  void regularizer(const Vec& x, Vec& out) const {
    Eigen::Map<const Eigen::VectorXd> xp(x.data(), static_cast<Eigen::Index>(ni_));
    Eigen::Map<Eigen::VectorXd> op(out.data(), static_cast<Eigen::Index>(ni_));
    op = R_ * xp;
    for (std::size_t k = 0; k < ni_; ++k) out[ni_ + k] = mass_[k] * x[ni_ + k];
  }

  void precondition(const Vec& r, Vec& z) const {
    Eigen::Map<const Eigen::VectorXd> rp(r.data(), static_cast<Eigen::Index>(ni_));
    Eigen::Map<Eigen::VectorXd> zp(z.data(), static_cast<Eigen::Index>(ni_));
    zp = chol_.solve(rp);
    for (std::size_t k = 0; k < ni_; ++k) z[ni_ + k] = r[ni_ + k] / mass_[k];
  }

  double r_norm2(const Vec& x) const {
    Vec rx(x.size());
    regularizer(x, rx);
    return dot(x, rx);
  }

 private:
  // H1 Gram matrix on interior nodes by probing energy_gram with a 3-colouring per axis.
  void assemble_regularizer() {
    const Grid& g = *grid_;
    const std::size_t N = g.num_nodes();
    std::vector<long> pos(N, -1);
    for (std::size_t k = 0; k < ni_; ++k) pos[interior_[k]] = static_cast<long>(k);
    std::vector<Eigen::Triplet<double>> trip;
    const int ncol = g.dim() == 2 ? 9 : 3;
    Spatial u(N), out;
    for (int c = 0; c < ncol; ++c) {
      std::fill(u.begin(), u.end(), 0.0);
      auto colour = [&](std::size_t node) {
        const auto ij = g.index(node);
        return (ij[0] % 3) + (g.dim() == 2 ? 3 * (ij[1] % 3) : 0);
      };
      for (std::size_t node : interior_) {
        if (colour(node) == c) u[node] = 1.0;
      }
      energy_gram(g, model_.sigma, u, out, true);
      for (std::size_t node : interior_) {
        if (colour(node) != c) continue;
        const auto ij = g.index(node);
        const int jlo = g.dim() == 2 ? -1 : 0, jhi = g.dim() == 2 ? 1 : 0;
        for (int dj = jlo; dj <= jhi; ++dj) {
          for (int di = -1; di <= 1; ++di) {
            const int ii = ij[0] + di, jj = ij[1] + dj;
            if (ii < 0 || ii >= g.nodes_along(0) || jj < 0 || jj >= g.nodes_along(1)) continue;
            const std::size_t r = g.flat(ii, jj);
            if (pos[r] < 0 || out[r] == 0.0) continue;
            trip.emplace_back(pos[r], pos[node], out[r]);
          }
        }
      }
    }
    R_.resize(static_cast<Eigen::Index>(ni_), static_cast<Eigen::Index>(ni_));
    R_.setFromTriplets(trip.begin(), trip.end());
    chol_.compute(R_);
    if (chol_.info() != Eigen::Success) throw NumericalError("H1 Gram matrix is not positive definite", "regularizer");
    mass_.resize(ni_);
    for (std::size_t k = 0; k < ni_; ++k) mass_[k] = g.node_weight(interior_[k]);
  }

  const Scenario& model_;
  const MeasurementRecord& record_;
  GridPtr grid_;
  std::vector<std::size_t> interior_;
  std::size_t ni_ = 0;
  std::vector<double> weights_;
  SpMat R_;
  Eigen::SimplicialLDLT<SpMat> chol_;
  std::vector<double> mass_;
};

double trace_norm(const BoundaryTrace& t) { return t.points.empty() ? 0.0 : l2_norm(t); }

}  // namespace

InitialRecovery recover_initial_passive(const MeasurementRecord& record, const Scenario& model,
                                        const InitialRecoveryOptions& opt,
                                        const std::optional<std::pair<Spatial, Spatial>>& truth) {
  const Grid& g = *model.grid;
  if (!record.flux.grid->same_layout(g)) throw PreconditionError("record lives on another grid");
  if (record.flux.quantity != Quantity::neumann_flux) throw PreconditionError("record must hold a flux trace");
  if (!(opt.reg >= 0.0) || opt.max_cg < 1 || opt.max_outer < 1) throw PreconditionError("invalid recovery options");
  InitialRecovery out;
  if (g.tagged() && g.duration() <= control_time(g)) out.warnings.push_back("uniqueness not guaranteed");

  InitialProblem prob(model, record, opt.fit_until);
  Vec x(prob.size(), 0.0);
  BoundaryTrace resid;
  Field u = prob.forward(x, resid);
  double J = 0.5 * prob.misfit(resid);
  const double J_first = J;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    const Field a = linearized_potential(u, model.f);
    const LinearOperator A = [&](const Vec& in, Vec& o) {
      const Vec ft = prob.apply_transpose(a, prob.apply(a, in));
      prob.regularizer(in, o);
      for (std::size_t k = 0; k < o.size(); ++k) o[k] = ft[k] + opt.reg * o[k];
    };
    const LinearOperator M = [&](const Vec& in, Vec& o) { prob.precondition(in, o); };
    Vec rhs = prob.apply_transpose(a, resid);
    Vec rx(x.size());
    prob.regularizer(x, rx);
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = -rhs[k] - opt.reg * rx[k];
    const double offset = J + 0.5 * opt.reg * dot(x, rx);

    CgOptions co;
    co.tol = opt.cg_tol;
    co.max_iter = opt.max_cg;
    co.metric = StagnationMetric::objective;
    co.objective_offset = offset;
    const CgResult cg = pcg(A, rhs, M, Vec(x.size(), 0.0), co);
    out.cg_iterations += cg.iterations;
    out.outer_iterations = outer + 1;
    out.residual_history.insert(out.residual_history.end(), cg.objective.begin(), cg.objective.end());
    if (cg.stagnated && !cg.converged && !cg.objective.empty() && cg.objective.back() > 0.5 * cg.objective.front()) {
      throw NumericalError("conjugate gradients stagnated", "recover_initial_passive");
    }

    const double dn = std::sqrt(prob.r_norm2(cg.x));
    axpy(1.0, cg.x, x);
    const double predicted = cg.objective.empty() ? offset : cg.objective.back();
    u = prob.forward(x, resid);
    J = 0.5 * prob.misfit(resid);
    prob.regularizer(x, rx);
    const double actual = J + 0.5 * opt.reg * dot(x, rx);
    const double xn = std::sqrt(prob.r_norm2(x));
    if (dn <= opt.outer_tol * std::max(xn, 1e-300)) break;
    if (std::abs(actual - predicted) <= opt.outer_tol * std::max(J_first, 1e-300)) break;
  }

  auto [phi, psi] = prob.expand(x, true);
  out.phi = std::move(phi);
  out.psi = std::move(psi);
  out.misfit = trace_norm(resid);
  if (truth) {
    Spatial dphi = out.phi, dpsi = out.psi;
    for (std::size_t i = 0; i < dphi.size(); ++i) {
      dphi[i] -= truth->first[i];
      dpsi[i] -= truth->second[i];
    }
    const double err = h1l2_norm(g, model.sigma, dphi, dpsi);
    const double tn = h1l2_norm(g, model.sigma, truth->first, truth->second);
    out.rel_error = tn > 0.0 ? err / tn : err;
    out.certificate = out.misfit > 0.0 ? err / out.misfit : std::numeric_limits<double>::infinity();
  }
  return out;
}

ActiveRecovery recover_initial_active(const MeasurementOracle& oracle, const Scenario& model, double t_star,
                                      double eps, const InitialRecoveryOptions& opt, int max_loops, double flux_tol,
                                      const std::optional<std::pair<Spatial, Spatial>>& truth) {
  const Grid& g = *model.grid;
  if (!oracle.grid()->same_layout(g)) throw PreconditionError("oracle and model live on different grids");
  const double t_switch = t_star + eps;
  if (!(eps > 0.0) || !(t_star > 0.0) || t_switch >= g.t_final()) {
    throw PreconditionError("need 0 < t_star and t_star + eps < T");
  }
  const int k_switch = g.level_of(t_switch);
  const Nonlinearity fit_f = spliced(model.f, nonlinearities::zero(), g.time(k_switch));

  ActiveRecovery out;
  Scenario drive = model;
  drive.phi.assign(g.num_nodes(), 0.0);
  drive.psi.assign(g.num_nodes(), 0.0);
  Scenario fit = model;
  fit.f = fit_f;
  for (int loop = 0; loop < max_loops; ++loop) {
    out.control = drive_to_zero_then_freeze(drive, t_star, eps).control;
    const MeasurementRecord rec = oracle.active(out.control);
    double post = 0.0, total = 0.0;
    const std::size_t P = rec.flux.points.size();
    for (int n = 0; n < g.levels(); ++n) {
      for (std::size_t p = 0; p < P; ++p) {
        const double v = g.time_weight(n) * rec.flux.points[p].weight * rec.flux.at(n, p) * rec.flux.at(n, p);
        total += v;
        if (n > k_switch) post += v;
      }
    }
    out.post_window_flux = total > 0.0 ? std::sqrt(post / total) : 0.0;

    InitialRecoveryOptions o = opt;
    // The first record is driven by the zero estimate; only the part before
    // the switch is free of the unknown g.
    if (loop == 0) o.fit_until = g.time(k_switch);
    InitialRecovery r = recover_initial_passive(rec, fit, o, truth);
    Spatial dphi = r.phi, dpsi = r.psi;
    for (std::size_t i = 0; i < dphi.size(); ++i) {
      dphi[i] -= drive.phi[i];
      dpsi[i] -= drive.psi[i];
    }
    const double change = h1l2_norm(g, model.sigma, dphi, dpsi);
    const double size = h1l2_norm(g, model.sigma, r.phi, r.psi);
    drive.phi = r.phi;
    drive.psi = r.psi;
    out.initial = std::move(r);
    out.loops = loop + 1;
    if (loop > 0 && change <= 1e-3 * std::max(size, 1e-300)) break;
    if (loop > 0 && size == 0.0) break;
  }
  if (out.post_window_flux > flux_tol) {
    throw NumericalError("control loop failed to suppress the post-window flux (" +
                             std::to_string(out.post_window_flux) + ")",
                         "recover_initial_active");
  }
  return out;
}

StabilityProbe stability_probe(const Scenario& model, const std::vector<std::pair<Spatial, Spatial>>& first,
                               const std::vector<std::pair<Spatial, Spatial>>& second) {
  if (first.size() != second.size() || first.empty()) throw PreconditionError("need matching non-empty pair lists");
  StabilityProbe out;
  const Grid& g = *model.grid;
  for (std::size_t k = 0; k < first.size(); ++k) {
    Scenario a = model, b = model;
    a.phi = first[k].first;
    a.psi = first[k].second;
    b.phi = second[k].first;
    b.psi = second[k].second;
    const double df = l2_norm(passive_dn(a).flux - passive_dn(b).flux);
    Spatial dphi = a.phi, dpsi = a.psi;
    for (std::size_t i = 0; i < dphi.size(); ++i) {
      dphi[i] -= b.phi[i];
      dpsi[i] -= b.psi[i];
    }
    const double dn = h1l2_norm(g, model.sigma, dphi, dpsi);
    out.ratios.push_back(df > 0.0 ? dn / df : std::numeric_limits<double>::infinity());
  }
  const auto [lo, hi] = std::minmax_element(out.ratios.begin(), out.ratios.end());
  out.spread = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace waveinv
