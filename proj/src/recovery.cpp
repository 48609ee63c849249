#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "waveinv/inversion.hpp"
#include "waveinv/wave.hpp"

namespace waveinv {

void RecoveryResult::set_truth(Field t) {
  const double tn = l2_norm_window(t, t1, t2);
  auto rel = [&](const Field& r) {
    const double e = l2_norm_window(r - t, t1, t2);
    return tn > 0.0 ? e / tn : e;
  };
  rel_l2_error = rel(recovered);
  for (auto& p : lcurve) p.error = rel(p.recovered);
  truth = std::move(t);
}

namespace {

std::vector<double> sqrt_weights(const BoundaryTrace& tr) {
  const Grid& g = *tr.grid;
  std::vector<double> w(tr.values.size());
  for (int n = 0; n < g.levels(); ++n) {
    for (std::size_t p = 0; p < tr.points.size(); ++p) {
      w[n * tr.points.size() + p] = std::sqrt(g.time_weight(n) * tr.points[p].weight);
    }
  }
  return w;
}

void add_noise(std::vector<BoundaryTrace>& obs, double level, std::uint64_t seed) {
  if (level <= 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& tr : obs) {
    double ms = 0.0;
    for (double v : tr.values) ms += v * v;
    const double rms = std::sqrt(ms / static_cast<double>(tr.values.size()));
    for (double& v : tr.values) v += level * rms * normal(rng);
  }
}

// Accumulated normal equations of a weighted linear least-squares problem
// min ||J c - d||^2.
struct NormalEq {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;  // J^T d
  double dd = 0.0;    // d^T d
  double obs = 0.0;   // squared norm of the observations

  explicit NormalEq(Eigen::Index n) : A(Eigen::MatrixXd::Zero(n, n)), b(Eigen::VectorXd::Zero(n)) {}

  void add(const std::vector<BoundaryTrace>& cols, const BoundaryTrace& d, const BoundaryTrace& observed,
           const std::vector<double>& sw) {
    const Eigen::Index rows = static_cast<Eigen::Index>(d.values.size());
    Eigen::MatrixXd J(rows, static_cast<Eigen::Index>(cols.size()));
    Eigen::VectorXd dv(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      dv[r] = sw[r] * d.values[r];
      obs += sw[r] * sw[r] * observed.values[r] * observed.values[r];
    }
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (Eigen::Index r = 0; r < rows; ++r) J(r, static_cast<Eigen::Index>(j)) = sw[r] * cols[j].values[r];
    }
    A.noalias() += J.transpose() * J;
    b.noalias() += J.transpose() * dv;
    dd += dv.squaredNorm();
  }
};

double condition_number(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// Regularization weights are relative: reg * tr(A) / tr(G).
double scale(const NormalEq& ne, const Eigen::MatrixXd& G) {
  const double ta = ne.A.trace();
  return ta > 0.0 ? ta / G.trace() : 1.0;
}

Eigen::VectorXd regularized_step(const NormalEq& ne, const Eigen::MatrixXd& G, double reg, const Eigen::VectorXd& c0) {
  reg *= scale(ne, G);
  const Eigen::MatrixXd M = ne.A + reg * G;
  return M.ldlt().solve(ne.b - reg * G * c0);
}

void check_condition(RecoveryResult& r, const NormalEq& ne, const Eigen::MatrixXd& G, double reg,
                     const std::string& stage) {
  r.condition = condition_number(ne.A + reg * scale(ne, G) * G);
  if (r.condition > 1e12) {
    std::ostringstream os;
    os << "normal equations have condition number " << r.condition << "; increase regularization";
    throw NumericalError(os.str(), stage);
  }
}

// L-curve points from one linearization at c0: the step solves
// (A + reg G) d = J^T r - reg G c0 with r the current residual.
void fill_lcurve(RecoveryResult& r, const NormalEq& ne, const Eigen::MatrixXd& G, const Eigen::VectorXd& c0,
                 const std::vector<double>& sweep, const GridPtr& grid, const BasisTables& tables) {
  for (double lam : sweep) {
    const Eigen::VectorXd d = regularized_step(ne, G, lam, c0);
    const Eigen::VectorXd c = c0 + d;
    LCurvePoint p;
    p.reg = lam;
    const double res2 = std::max(0.0, ne.dd - 2.0 * d.dot(ne.b) + d.dot(ne.A * d));
    p.residual = std::sqrt(res2 / std::max(ne.obs, 1e-300));
    p.norm = std::sqrt(std::max(0.0, c.dot(G * c)));
    p.recovered = basis_combine(grid, tables, c);
    r.lcurve.push_back(std::move(p));
  }
}

Field times_basis(const GridPtr& grid, const BasisTables& b, std::size_t j, const Field& v) {
  Field src(grid, FieldKind::source);
  const std::size_t N = grid->num_nodes();
  const std::size_t S = b.splines.size();
  const Spatial& m = b.modes[j / S];
  const std::vector<double>& s = b.splines[j % S];
  for (int n = 0; n < grid->levels(); ++n) {
    if (s[static_cast<std::size_t>(n)] == 0.0) continue;
    for (std::size_t i = 0; i < N; ++i) src.at(n, i) = -s[static_cast<std::size_t>(n)] * m[i] * v.at(n, i);
  }
  return src;
}

std::vector<BoundaryTrace> columns(const GridPtr& grid, const Sigma& sigma, const Field* q, const BasisTables& b,
                                   const Field& v, Subset subset) {
  std::vector<BoundaryTrace> cols;
  cols.reserve(b.size());
  for (std::size_t j = 0; j < b.size(); ++j) {
    const Field src = times_basis(grid, b, j, v);
    LinearData d;
    d.potential = q;
    d.source = &src;
    cols.push_back(neumann_trace(solve_linear(grid, sigma, d), sigma, subset));
  }
  return cols;
}

std::vector<std::vector<int>> choose_tuples(int L, int k, int limit, std::uint64_t seed) {
  std::vector<std::vector<int>> all;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(cur.size()) == k) {
      all.push_back(cur);
      return;
    }
    for (int i = start; i < L; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  if (static_cast<int>(all.size()) > limit) {
    std::mt19937_64 rng(seed);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(limit));
    std::sort(all.begin(), all.end());
  }
  return all;
}

double solver_tolerance_ratio(const MeasurementOracle& oracle, const LinearizationStencil& st, int order) {
  return oracle.solver_tolerance() / std::pow(st.eps, order);
}

}  // namespace

RecoveryResult recover_potential(const MeasurementOracle& oracle, const LinearizationStencil& st,
                                 const SpaceTimeBasis& basis, const RecoveryOptions& opt) {
  st.validate();
  const GridPtr& grid = oracle.grid();
  const Sigma& sigma = oracle.sigma();
  const BasisTables tables = basis.tables(*grid);
  const Eigen::Index nb = static_cast<Eigen::Index>(tables.size());
  const Eigen::MatrixXd G = basis_gram(*grid, tables);
  const int q0 = oracle.queries();

  const int L = static_cast<int>(st.directions.size());
  std::vector<BoundaryTrace> obs;
  for (int l = 0; l < L; ++l) obs.push_back(fd_linearize_flux(oracle, st, {l}));
  add_noise(obs, opt.noise, opt.seed);
  const std::vector<double> sw = sqrt_weights(obs.front());
  const Subset subset = obs.front().subset;

  RecoveryResult r;
  r.t1 = basis.t1;
  r.t2 = basis.t2;
  r.regularization = opt.reg;
  r.cancellation_ratio = solver_tolerance_ratio(oracle, st, 1);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nb);
  bool done = false;
  for (int it = 0;; ++it) {
    const Field q = basis_combine(grid, tables, c);
    NormalEq ne(nb);
    for (int l = 0; l < L; ++l) {
      LinearData d;
      d.potential = &q;
      d.dirichlet = &st.directions[static_cast<std::size_t>(l)];
      const Field v = solve_linear(grid, sigma, d);
      const BoundaryTrace resid = obs[static_cast<std::size_t>(l)] - neumann_trace(v, sigma, subset);
      ne.add(columns(grid, sigma, &q, tables, v, subset), resid, obs[static_cast<std::size_t>(l)], sw);
    }
    r.misfit = std::sqrt(ne.dd / std::max(ne.obs, 1e-300));
    r.misfit_history.push_back(r.misfit);
    check_condition(r, ne, G, opt.reg, "recover_potential");
    if (done || it == opt.max_gn) {
      fill_lcurve(r, ne, G, c, opt.reg_sweep, grid, tables);
      break;
    }
    const Eigen::VectorXd d = regularized_step(ne, G, opt.reg, c);
    c += d;
    r.iterations = it + 1;
    done = d.norm() <= opt.gn_tol * (1.0 + c.norm());
  }
  if (!done) r.notes.push_back("Gauss-Newton reached max_gn without meeting gn_tol");
  r.coefficients = c;
  r.recovered = basis_combine(grid, tables, c);
  r.queries = oracle.queries() - q0;
  return r;
}

RecoveryResult recover_taylor_coefficient(const MeasurementOracle& oracle, int k, const std::vector<Field>& lower,
                                          const LinearizationStencil& st, const SpaceTimeBasis& basis,
                                          const RecoveryOptions& opt) {
  if (k < 2 || k > 4) throw PreconditionError("Taylor order must be in 2..4");
  if (static_cast<int>(lower.size()) != k - 1) throw PreconditionError("missing lower coefficients");
  st.validate();
  if (st.order < k) throw PreconditionError("stencil order is below the requested Taylor order");
  const int L = static_cast<int>(st.directions.size());
  if (L < k) throw PreconditionError("not enough directions for the requested order");
  const GridPtr& grid = oracle.grid();
  const Sigma& sigma = oracle.sigma();
  for (const auto& f : lower) {
    if (!f.grid().same_layout(*grid)) throw PreconditionError("lower coefficient lives on another grid");
  }
  const BasisTables tables = basis.tables(*grid);
  const Eigen::Index nb = static_cast<Eigen::Index>(tables.size());
  const Eigen::MatrixXd G = basis_gram(*grid, tables);
  const int q0 = oracle.queries();

  const auto tuples = choose_tuples(L, k, opt.tuples, opt.seed);
  std::vector<BoundaryTrace> obs;
  for (const auto& t : tuples) obs.push_back(fd_linearize_flux(oracle, st, t));
  add_noise(obs, opt.noise, opt.seed + 1);
  const std::vector<double> sw = sqrt_weights(obs.front());
  const Subset subset = obs.front().subset;

  std::vector<const Field*> coeffs;
  for (const auto& f : lower) coeffs.push_back(&f);
  coeffs.push_back(nullptr);

  NormalEq ne(nb);
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    std::vector<const BoundaryTrace*> dirs;
    for (int l : tuples[t]) dirs.push_back(&st.directions[static_cast<std::size_t>(l)]);
    MixedModel model(grid, sigma, coeffs, dirs);
    const unsigned full = (1u << k) - 1u;
    const Field base = model.solve(model.source(full, true));
    Field prod = model.mixed(1u);
    for (int l = 1; l < k; ++l) {
      const Field& v = model.mixed(1u << l);
      for (std::size_t i = 0; i < prod.size(); ++i) prod.values()[i] *= v.values()[i];
    }
    const BoundaryTrace resid = obs[t] - neumann_trace(base, sigma, subset);
    ne.add(columns(grid, sigma, &lower.front(), tables, prod, subset), resid, obs[t], sw);
  }

  RecoveryResult r;
  r.t1 = basis.t1;
  r.t2 = basis.t2;
  r.regularization = opt.reg;
  r.cancellation_ratio = solver_tolerance_ratio(oracle, st, k);
  check_condition(r, ne, G, opt.reg, "recover_taylor_coefficient");
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nb);
  const Eigen::VectorXd c = regularized_step(ne, G, opt.reg, zero);
  const double res2 = std::max(0.0, ne.dd - 2.0 * c.dot(ne.b) + c.dot(ne.A * c));
  r.misfit = std::sqrt(res2 / std::max(ne.obs, 1e-300));
  r.misfit_history.push_back(r.misfit);
  r.iterations = 1;
  fill_lcurve(r, ne, G, zero, opt.reg_sweep, grid, tables);
  r.coefficients = c;
  r.recovered = basis_combine(grid, tables, c);
  r.queries = oracle.queries() - q0;
  if (r.cancellation_ratio > 1e-2) r.notes.push_back("solver tolerance is large against eps^k");
  return r;
}

}  // namespace waveinv
