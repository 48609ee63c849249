#include "waveinv/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <random>

#include "waveinv/acceptance.hpp"
#include "waveinv/cgo.hpp"
#include "waveinv/control.hpp"
#include "waveinv/expression.hpp"
#include "waveinv/inversion.hpp"
#include "waveinv/io.hpp"
#include "waveinv/measurement.hpp"
#include "waveinv/semilinear.hpp"

namespace waveinv {

namespace fs = std::filesystem;

namespace {

void put(Summary& s, const std::string& key, double v) { s.emplace_back(key, fmt(v)); }
void put(Summary& s, const std::string& key, const std::string& v) { s.emplace_back(key, v); }
void put(Summary& s, const std::string& key, bool v) { s.emplace_back(key, v ? "true" : "false"); }
void put(Summary& s, const std::string& key, int v) { s.emplace_back(key, std::to_string(v)); }

struct Context {
  const ExperimentConfig& cfg;
  fs::path dir;
  std::mt19937_64 rng;
  Summary& sum;
  GridPtr grid;
  Sigma sigma;

  const Params& p() const { return cfg.params; }
  Nonlinearity f() const { return build_nonlinearity(cfg.nonlinearity); }
  Spatial phi() const { return build_shape(*grid, cfg.phi); }
  Spatial psi() const { return build_shape(*grid, cfg.psi); }

  Scenario scenario(double solver_tol = 1e-10) const {
    Scenario s = make_scenario(grid, sigma, f(), phi(), psi(), to_string(cfg.pipeline));
    s.solver.tol = solver_tol;
    s.solver.max_iter = 100;
    return s;
  }

  BoundaryTrace input(Subset subset, bool required) const {
    const std::string text = p().text("input", "");
    if (text.empty()) {
      if (required) throw ConfigError(cfg.origin + ": params.input is required for pipeline " + to_string(cfg.pipeline));
      return BoundaryTrace::zeros(grid, subset, Quantity::dirichlet);
    }
    const Expression e = Expression::parse(text);
    return BoundaryTrace::sample(grid, subset, [&](const Point& x, double t) { return e(x[0], x[1], t); });
  }
};

Field sample_coefficient(const GridPtr& g, const CoefFn& c, double scale = 1.0) {
  return Field::sample(g, FieldKind::potential, [&](const Point& x, double t) { return scale * c(x, t); });
}

/// f_s(x, t, 0) on the grid, or nothing when it vanishes identically.
std::optional<Field> zero_state_potential(const GridPtr& g, const Nonlinearity& f) {
  Field a = Field::sample(g, FieldKind::potential, [&](const Point& x, double t) { return f.deriv(x, t, 0.0); });
  for (double v : a.values()) {
    if (v != 0.0) return a;
  }
  return std::nullopt;
}

double factorial(int k) { return k <= 1 ? 1.0 : k * factorial(k - 1); }

std::pair<Spatial, Spatial> random_state(const Grid& g, std::mt19937_64& rng, int modes) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> c(2 * modes);
  for (auto& v : c) v = U(rng);
  auto build = [&](int offset) {
    return sample_spatial(g, [&](const Point& x) {
      double v = 0.0;
      for (int k = 0; k < modes; ++k) {
        double m = c[offset + k];
        for (int a = 0; a < g.dim(); ++a) {
          const Interval& e = g.extent(a);
          m *= std::sin((k + 1) * std::numbers::pi * (x[a] - e.lo) / e.length());
        }
        v += m;
      }
      return v;
    });
  };
  return {build(0), build(modes)};
}

double rel_state_error(const Grid& g, const Sigma& s, const Spatial& phi, const Spatial& psi, const Spatial& tphi,
                       const Spatial& tpsi) {
  Spatial dphi = phi, dpsi = psi;
  for (std::size_t i = 0; i < dphi.size(); ++i) {
    dphi[i] -= tphi[i];
    dpsi[i] -= tpsi[i];
  }
  const double n = h1l2_norm(g, s, tphi, tpsi);
  const double d = h1l2_norm(g, s, dphi, dpsi);
  return n > 0.0 ? d / n : d;
}

// ---------------------------------------------------------------- pipelines

void run_forward(Context& c) {
  const Nonlinearity f = c.f();
  const Spatial phi = c.phi(), psi = c.psi();
  const BoundaryTrace h = c.input(Subset::all, false);
  SemilinearOptions opt;
  const auto sol = solve_semilinear(c.grid, c.sigma, f, {.dirichlet = &h, .phi = &phi, .psi = &psi}, opt);
  write_field(c.dir / "u.wfld", sol.u);
  {
    CsvWriter w(c.dir / "energy.csv");
    w.header({"t", "energy", "energy_with_mass"});
    for (int n = 0; n < c.grid->levels(); ++n) {
      w.row({c.grid->time(n), energy(sol.u, c.sigma, n, false), energy(sol.u, c.sigma, n, true)});
    }
  }
  {
    CsvWriter w(c.dir / "residuals.csv");
    w.header({"iteration", "relative_change"});
    const auto& r = sol.report.residual_history;
    for (std::size_t k = 0; k < r.size(); ++k) w.row({static_cast<double>(k + 1), r[k]});
  }
  write_trace_csv(c.dir / "flux.csv", neumann_trace(sol.u, c.sigma, Subset::gamma0));
  put(c.sum, "iterations", sol.report.iterations);
  put(c.sum, "converged", sol.report.converged);
  put(c.sum, "max_amplitude", sol.report.max_amplitude);
  const double e0 = energy(sol.u, c.sigma, 0, false);
  double drift = 0.0;
  for (int n = 0; n < c.grid->levels(); ++n) drift = std::max(drift, std::abs(energy(sol.u, c.sigma, n, false) - e0));
  put(c.sum, "energy_drift", e0 > 0.0 ? drift / e0 : drift);
  const std::string exact = c.p().text("exact", "");
  if (!exact.empty()) {
    const Expression e = Expression::parse(exact);
    double err = 0.0;
    for (int n = 0; n < c.grid->levels(); ++n) {
      for (std::size_t i = 0; i < c.grid->num_nodes(); ++i) {
        const Point x = c.grid->coord(i);
        err = std::max(err, std::abs(sol.u.at(n, i) - e(x[0], x[1], c.grid->time(n))));
      }
    }
    put(c.sum, "max_error", err);
  }
}

void run_record(Context& c, bool active) {
  const Scenario s = c.scenario();
  const MeasurementRecord r = active ? active_dn(s, c.input(Subset::gamma0, true)) : passive_dn(s);
  write_record(c.dir, r);
  put(c.sum, "flux_l2", l2_norm(r.flux));
  put(c.sum, "iterations", r.report.iterations);
}

void run_stability(Context& c) {
  const int samples = c.p().integer("samples", 20), modes = c.p().integer("modes", 4), pairs = c.p().integer("pairs", 10);
  if (samples < 1 || modes < 1 || pairs < 1) throw ConfigError("samples, modes and pairs must be positive");
  std::vector<std::pair<Spatial, Spatial>> draws;
  for (int k = 0; k < samples; ++k) draws.push_back(random_state(*c.grid, c.rng, modes));
  const auto a0 = zero_state_potential(c.grid, c.f());
  const ObservabilityResult obs = observability_ratio(c.grid, c.sigma, a0 ? &*a0 : nullptr, draws);
  {
    CsvWriter w(c.dir / "observability.csv");
    w.header({"sample", "ratio"});
    for (std::size_t k = 0; k < obs.ratios.size(); ++k) w.row({static_cast<double>(k), obs.ratios[k]});
  }
  std::vector<std::pair<Spatial, Spatial>> first, second;
  for (int k = 0; k < pairs; ++k) {
    first.push_back(random_state(*c.grid, c.rng, modes));
    second.push_back(random_state(*c.grid, c.rng, modes));
  }
  const StabilityProbe sp = stability_probe(c.scenario(), first, second);
  {
    CsvWriter w(c.dir / "stability.csv");
    w.header({"pair", "ratio"});
    for (std::size_t k = 0; k < sp.ratios.size(); ++k) w.row({static_cast<double>(k), sp.ratios[k]});
  }
  put(c.sum, "observability_max_ratio", obs.max_ratio);
  put(c.sum, "observability_failure", obs.failure);
  put(c.sum, "stability_spread", sp.spread);
}

void run_control(Context& c) {
  HumOptions opt;
  opt.penalty = c.p().number("penalty", opt.penalty);
  opt.tol = c.p().number("tol", opt.tol);
  opt.max_cg = c.p().integer("max_cg", opt.max_cg);
  const auto a0 = zero_state_potential(c.grid, c.f());
  const Spatial zero(c.grid->num_nodes(), 0.0);
  const ControlResult r = hum_control(c.grid, c.sigma, a0 ? &*a0 : nullptr, nullptr, c.phi(), c.psi(), zero, zero, opt);
  write_cg_log(c.dir / "cg.csv", r);
  write_trace_csv(c.dir / "control.csv", r.control);
  put(c.sum, "initial_energy", r.initial_energy);
  put(c.sum, "terminal_error", r.terminal_error);
  put(c.sum, "cg_iterations", r.cg_iterations);
  put(c.sum, "converged", r.converged);
  put(c.sum, "likely_uncontrollable", r.likely_uncontrollable);
}

void run_runge(Context& c) {
  const Expression target = Expression::parse(c.p().text("target", "sin(pi*(x-t))"));
  const double T = c.grid->t_final();
  const double t1 = c.p().number("t1", T - 1.0), t2 = c.p().number("t2", T);
  RungeOptions opt;
  const auto sizes = c.p().list("sizes", {4, 8, 16});
  opt.temporal_sizes.assign(sizes.begin(), sizes.end());
  const Field v = Field::sample(c.grid, FieldKind::solution,
                                [&](const Point& x, double t) { return target(x[0], x[1], t); });
  const auto a0 = zero_state_potential(c.grid, c.f());
  const RungeResult r = runge_approximate(c.grid, c.sigma, a0 ? &*a0 : nullptr, v, t1, t2, opt);
  {
    CsvWriter w(c.dir / "history.csv");
    w.header({"basis_size", "rel_error"});
    for (const auto& s : r.history) w.row({static_cast<double>(s.basis_size), s.rel_error});
  }
  write_field(c.dir / "approximation.wfld", r.approximation);
  write_trace_csv(c.dir / "control.csv", r.control);
  put(c.sum, "rel_error", r.rel_error);
  put(c.sum, "basis_size", r.basis_size);
  put(c.sum, "reached", r.reached);
}

void run_cgo(Context& c) {
  const GridSpec& gs = c.cfg.grid;
  std::vector<Interval> extents{gs.x};
  if (gs.dim == 2) extents.push_back(gs.y);
  const double ppw = c.p().number("ppw", 12.0);
  const double t1 = c.p().number("t1", 0.5), t2 = c.p().number("t2", std::min(gs.T, 1.5));
  const auto taus = c.p().list("taus", {8, 16, 32});
  const auto x0v = c.p().list("x0", {-0.5, gs.dim == 2 ? 0.5 : 0.0});
  if (taus.empty() || x0v.size() != 2) throw ConfigError("cgo needs taus and a two-component x0");
  const Expression q = Expression::parse(c.p().text("q", "0"));
  auto refine = [&](double tau) { return cgo_grid(extents, gs.T, tau, ppw, gs.cfl); };
  const GridPtr g0 = refine(taus.front());
  CgoParams base = default_cgo_params(*g0, taus.front(), c.p().integer("sign", 1), {x0v[0], x0v[1]}, t1, t2);
  const DecayTable t = remainder_decay_table(
      refine, [&](const Point& x, double tt) { return q(x[0], x[1], tt); }, taus, base, t1, t2);
  write_decay_csv(c.dir / "decay.csv", t);
  put(c.sum, "decreasing", t.decreasing);
  put(c.sum, "last_remainder_l2", t.rows.back().remainder_l2);
}

void run_linearize(Context& c) {
  const int order = c.p().integer("order", 1);
  const int count = c.p().integer("directions", std::max(order, 2));
  const double T = c.grid->t_final();
  LinearizationStencil st;
  st.order = order;
  st.directions = pulse_directions(c.grid, Subset::all, count, c.p().number("first_center", std::min(0.4, T / 2)),
                                   c.p().number("last_center", std::min(0.4, T / 2)));
  st.scheme = c.p().has("scheme") ? fd_scheme_from_string(c.p().text("scheme", "")) : default_scheme(order);
  std::vector<int> index;
  for (double v : c.p().list("index", {})) index.push_back(static_cast<int>(v));
  if (index.empty()) {
    for (int k = 0; k < order; ++k) index.push_back(k);
  }
  const auto ladder = c.p().list("eps", {1e-2, 1e-3, 1e-4});
  if (ladder.empty()) throw ConfigError("params.eps must list at least one step");
  const Scenario s = c.scenario(1e-13);

  // Reference derivative from the linearized equations when it is available.
  std::optional<Field> reference;
  const Field u0 = solve_semilinear(c.grid, s.sigma, s.f, {.phi = &s.phi, .psi = &s.psi}, s.solver).u;
  std::vector<Field> coeffs;
  std::vector<const BoundaryTrace*> dirs;
  for (int i : index) {
    if (i < 0 || i >= count) throw ConfigError("params.index entries must address a direction");
    dirs.push_back(&st.directions[static_cast<std::size_t>(i)]);
  }
  bool background_zero = l2_norm(u0) == 0.0;
  if (order == 1) {
    coeffs.push_back(linearized_potential(u0, s.f));
  } else if (background_zero) {
    for (int k = 1; k <= order; ++k) {
      auto ck = taylor_coefficient(c.cfg.nonlinearity, k);
      if (!ck) break;
      coeffs.push_back(sample_coefficient(c.grid, *ck, factorial(k)));
    }
  }
  if (static_cast<int>(coeffs.size()) == order) {
    std::vector<const Field*> cp;
    for (const auto& f : coeffs) cp.push_back(&f);
    MixedModel m(c.grid, s.sigma, cp, dirs);
    reference = m.mixed((1u << order) - 1u);
  }

  CsvWriter w(c.dir / "ladder.csv");
  w.header({"eps", "norm", "rel_error", "observed_order"});
  double prev_err = 0.0, prev_eps = 0.0, last_order = std::nan("");
  Field last;
  for (double e : ladder) {
    st.eps = e;
    last = fd_linearize(s, st, index);
    double err = std::nan(""), ord = std::nan("");
    if (reference) {
      const double rn = l2_norm(*reference);
      err = l2_norm(last - *reference) / (rn > 0.0 ? rn : 1.0);
      if (prev_err > 0.0 && err > 0.0) ord = std::log(prev_err / err) / std::log(prev_eps / e);
      prev_err = err;
      prev_eps = e;
      if (!std::isnan(ord)) last_order = ord;
    }
    w.row({e, l2_norm(last), err, ord});
  }
  w.close();
  write_field(c.dir / "derivative.wfld", last);
  put(c.sum, "scheme", to_string(st.scheme));
  put(c.sum, "reference", reference ? std::string("linearized_equation") : std::string("none"));
  if (reference) put(c.sum, "final_rel_error", prev_err);
  if (!std::isnan(last_order)) put(c.sum, "observed_order", last_order);
}

struct RecoverySetup {
  LinearizationStencil st;
  SpaceTimeBasis basis;
  RecoveryOptions opt;
  double delta = 1e-2;
  double solver_tol = 1e-13;
};

RecoverySetup recovery_setup(Context& c, int order) {
  RecoverySetup r;
  const Params& p = c.p();
  const double T = c.grid->t_final();
  r.basis.t1 = p.number("t1", T / 3.0);
  r.basis.t2 = p.number("t2", 2.0 * T / 3.0);
  r.basis.spatial = p.integer("spatial", 8);
  r.basis.temporal = p.integer("temporal", 4);
  r.st.order = order;
  r.st.scheme = default_scheme(order);
  r.st.eps = p.number("eps", r.st.eps);
  r.st.directions = pulse_directions(c.grid, Subset::all, p.integer("directions", 16),
                                     p.number("first_center", 0.35), p.number("last_center", r.basis.t2));
  r.opt.reg = p.number("reg", r.opt.reg);
  r.opt.noise = p.number("noise", 0.0);
  r.opt.reg_sweep = p.list("reg_sweep", r.opt.reg_sweep);
  r.opt.tuples = p.integer("tuples", r.opt.tuples);
  r.opt.max_gn = p.integer("max_gn", r.opt.max_gn);
  r.opt.seed = c.rng();
  r.delta = p.number("delta", r.delta);
  r.solver_tol = p.number("solver_tol", r.solver_tol);
  return r;
}

MeasurementOracle make_oracle(Context& c, const RecoverySetup& r) {
  MeasurementOracle o(c.scenario(r.solver_tol), r.delta);
  return o;
}

void summarize_recovery(Summary& s, const std::string& prefix, const RecoveryResult& r) {
  if (r.rel_l2_error) put(s, prefix + "rel_l2_error", *r.rel_l2_error);
  put(s, prefix + "misfit", r.misfit);
  put(s, prefix + "iterations", r.iterations);
  put(s, prefix + "queries", r.queries);
}

void set_truth(Context& c, RecoveryResult& r, int k) {
  if (auto ck = taylor_coefficient(c.cfg.nonlinearity, k)) r.set_truth(sample_coefficient(c.grid, *ck, factorial(k)));
}

void run_recover_q(Context& c) {
  const RecoverySetup r = recovery_setup(c, 1);
  const MeasurementOracle o = make_oracle(c, r);
  RecoveryResult res = recover_potential(o, r.st, r.basis, r.opt);
  set_truth(c, res, 1);
  write_recovery(c.dir, res);
  summarize_recovery(c.sum, "", res);
}

void run_recover_taylor(Context& c) {
  const int K = c.p().integer("order", 2);
  if (K < 2 || K > 4) throw ConfigError("params.order must be in 2..4");
  RecoverySetup r = recovery_setup(c, K);
  const MeasurementOracle o = make_oracle(c, r);
  LinearizationStencil st1 = r.st;
  st1.order = 1;
  st1.scheme = default_scheme(1);
  RecoveryResult q = recover_potential(o, st1, r.basis, r.opt);
  set_truth(c, q, 1);
  write_recovery(c.dir / "order_1", q);
  summarize_recovery(c.sum, "order_1_", q);
  std::vector<Field> lower{q.recovered};
  for (int k = 2; k <= K; ++k) {
    LinearizationStencil st = r.st;
    st.scheme = default_scheme(k);
    RecoveryResult rk = recover_taylor_coefficient(o, k, lower, st, r.basis, r.opt);
    set_truth(c, rk, k);
    write_recovery(c.dir / ("order_" + std::to_string(k)), rk);
    summarize_recovery(c.sum, "order_" + std::to_string(k) + "_", rk);
    lower.push_back(rk.recovered);
  }
}

InitialRecoveryOptions initial_options(const Params& p) {
  InitialRecoveryOptions o;
  o.reg = p.number("reg", o.reg);
  o.max_cg = p.integer("max_cg", o.max_cg);
  o.cg_tol = p.number("cg_tol", o.cg_tol);
  o.max_outer = p.integer("max_outer", o.max_outer);
  return o;
}

void run_recover_initial(Context& c) {
  const std::string mode = c.p().text("mode", "passive");
  const Scenario hidden = c.scenario(1e-13);
  Scenario model = hidden;
  model.phi.assign(c.grid->num_nodes(), 0.0);
  model.psi.assign(c.grid->num_nodes(), 0.0);
  const auto truth = std::pair{hidden.phi, hidden.psi};
  const InitialRecoveryOptions opt = initial_options(c.p());
  InitialRecovery r;
  if (mode == "passive") {
    r = recover_initial_passive(passive_dn(hidden), model, opt, truth);
  } else if (mode == "active") {
    const MeasurementOracle o(hidden);
    const double T = c.grid->t_final();
    const ActiveRecovery a = recover_initial_active(o, model, c.p().number("t_star", T / 2.5), c.p().number("eps", 0.3),
                                                    opt, c.p().integer("max_loops", 5), c.p().number("flux_tol", 0.05),
                                                    truth);
    write_trace_csv(c.dir / "control.csv", a.control);
    put(c.sum, "loops", a.loops);
    put(c.sum, "post_window_flux", a.post_window_flux);
    r = a.initial;
  } else {
    throw ConfigError("params.mode must be passive or active");
  }
  write_initial(c.dir, *c.grid, r);
  if (r.rel_error) put(c.sum, "rel_error", *r.rel_error);
  put(c.sum, "misfit", r.misfit);
  put(c.sum, "cg_iterations", r.cg_iterations);
  put(c.sum, "outer_iterations", r.outer_iterations);
  for (const auto& w : r.warnings) put(c.sum, "warning", w);
}

void run_simultaneous(Context& c) {
  const int K = c.p().integer("max_order", 2);
  RecoverySetup r = recovery_setup(c, K);
  const MeasurementOracle o = make_oracle(c, r);
  InitialRecoveryOptions io;
  io.reg = c.p().number("initial_reg", io.reg);
  io.max_cg = c.p().integer("max_cg", io.max_cg);
  SimultaneousResult res = simultaneous_recover(o, r.st, r.basis, K, r.opt, io);
  set_truth(c, res.potential, 1);
  write_recovery(c.dir / "potential", res.potential);
  summarize_recovery(c.sum, "potential_", res.potential);
  for (std::size_t k = 0; k < res.taylor.size(); ++k) {
    const int order = static_cast<int>(k) + 2;
    set_truth(c, res.taylor[k], order);
    write_recovery(c.dir / ("taylor_" + std::to_string(order)), res.taylor[k]);
    summarize_recovery(c.sum, "taylor_" + std::to_string(order) + "_", res.taylor[k]);
  }
  res.initial.rel_error = rel_state_error(*c.grid, c.sigma, res.initial.phi, res.initial.psi, c.phi(), c.psi());
  write_initial(c.dir / "initial", *c.grid, res.initial);
  put(c.sum, "initial_rel_error", *res.initial.rel_error);
  CsvWriter w(c.dir / "diagnostics.csv");
  w.header({"name", "value"});
  for (const auto& [k, v] : res.diagnostics) {
    w.row_text({k, fmt(v)});
    put(c.sum, k, v);
  }
}

void run_nonuniqueness(Context& c) {
  const NonuniquenessResult r = nonuniqueness_demo(c.grid, c.sigma, c.p().number("collar", 0.2));
  write_record(c.dir / "record1", r.record1);
  write_record(c.dir / "record2", r.record2);
  write_state(c.dir / "initial1.wfld", *c.grid, r.first.phi, r.first.psi);
  write_state(c.dir / "initial2.wfld", *c.grid, r.second.phi, r.second.psi);
  put(c.sum, "flux1", r.flux1);
  put(c.sum, "flux2", r.flux2);
  put(c.sum, "initial_distance", r.initial_distance);
}

void run_suite_pipeline(Context& c) {
  std::vector<int> ids;
  for (double v : c.p().list("criteria", {})) ids.push_back(static_cast<int>(v));
  if (ids.empty()) {
    for (int k = 1; k <= kCriteria; ++k) ids.push_back(k);
  }
  for (int id : ids) {
    if (id < 1 || id > kCriteria) throw ConfigError("params.criteria entries must be in 1.." + std::to_string(kCriteria));
  }
  const fs::path scratch = fs::temp_directory_path() / ("waveinv_suite_" + sha256_text(c.dir.string()).substr(0, 12));
  fs::remove_all(scratch);
  const auto results = run_acceptance(ids, scratch, c.cfg.seed, worker_count());
  fs::remove_all(scratch);
  write_acceptance_csv(c.dir / "acceptance.csv", results);
  int failed = 0;
  for (const auto& r : results) {
    put(c.sum, "criterion_" + std::to_string(r.id), std::string(r.pass ? "PASS" : "FAIL"));
    if (!r.pass) ++failed;
  }
  put(c.sum, "failed", failed);
  if (failed > 0) throw NumericalError(std::to_string(failed) + " acceptance criteria failed", "acceptance");
}

void dispatch(Context& c) {
  switch (c.cfg.pipeline) {
    case Pipeline::forward: return run_forward(c);
    case Pipeline::passive: return run_record(c, false);
    case Pipeline::active: return run_record(c, true);
    case Pipeline::stability: return run_stability(c);
    case Pipeline::control: return run_control(c);
    case Pipeline::runge: return run_runge(c);
    case Pipeline::cgo: return run_cgo(c);
    case Pipeline::linearize: return run_linearize(c);
    case Pipeline::recover_q: return run_recover_q(c);
    case Pipeline::recover_taylor: return run_recover_taylor(c);
    case Pipeline::recover_initial: return run_recover_initial(c);
    case Pipeline::simultaneous: return run_simultaneous(c);
    case Pipeline::nonuniqueness: return run_nonuniqueness(c);
    case Pipeline::suite: return run_suite_pipeline(c);
  }
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  RunOutcome out;
  out.output = out_dir.empty() ? cfg.output : out_dir;
  try {
    // Only directories holding an earlier run (a manifest) are cleared.
    if (fs::exists(out.output) && !fs::is_empty(out.output)) {
      if (!fs::exists(out.output / "manifest.yaml")) {
        out.exit_code = exit_config;
        out.message = "output directory " + out.output.string() + " is not empty and holds no earlier run";
        return out;
      }
      fs::remove_all(out.output);
    }
    fs::create_directories(out.output);
  } catch (const fs::filesystem_error& e) {
    out.exit_code = exit_config;
    out.message = std::string("cannot prepare output directory: ") + e.what();
    return out;
  }
  try {
    Context c{cfg, out.output, std::mt19937_64(cfg.seed), out.summary, nullptr, {}};
    if (cfg.pipeline != Pipeline::suite && cfg.pipeline != Pipeline::cgo) {
      c.grid = build_grid(cfg.grid);
      c.sigma = build_sigma(*c.grid, cfg.sigma);
      check_stability(*c.grid, c.sigma);
    }
    dispatch(c);
  } catch (const NumericalError& e) {
    out.exit_code = exit_numerical;
    out.stage = e.stage().empty() ? to_string(cfg.pipeline) : e.stage();
    out.message = e.what();
  } catch (const Error& e) {
    out.exit_code = exit_config;
    out.message = e.what();
  } catch (const std::exception& e) {
    out.exit_code = exit_numerical;
    out.stage = to_string(cfg.pipeline);
    out.message = e.what();
  }
  write_manifest(out.output, cfg, out);
  return out;
}

RunOutcome run_config_file(const fs::path& path, const fs::path& out_dir) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const Error& e) {
    RunOutcome out;
    out.exit_code = exit_config;
    out.message = e.what();
    return out;
  }
  return run_experiment(cfg, out_dir);
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const RunOutcome& outcome) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.yaml") files.push_back(fs::relative(e.path(), dir));
  }
  std::sort(files.begin(), files.end());
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "pipeline" << YAML::Value << to_string(cfg.pipeline);
  y << YAML::Key << "seed" << YAML::Value << cfg.seed;
  y << YAML::Key << "config_sha256" << YAML::Value << sha256_text(cfg.source);
  y << YAML::Key << "status" << YAML::Value
    << (outcome.exit_code == exit_ok ? "ok" : outcome.exit_code == exit_config ? "config_error" : "numerical_failure");
  y << YAML::Key << "exit_code" << YAML::Value << outcome.exit_code;
  if (!outcome.stage.empty()) y << YAML::Key << "stage" << YAML::Value << outcome.stage;
  if (!outcome.message.empty()) y << YAML::Key << "message" << YAML::Value << outcome.message;
  y << YAML::Key << "summary" << YAML::Value << YAML::BeginSeq;
  for (const auto& [k, v] : outcome.summary) y << YAML::Flow << YAML::BeginMap << YAML::Key << k << YAML::Value << v << YAML::EndMap;
  y << YAML::EndSeq;
  y << YAML::Key << "outputs" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : files) {
    y << YAML::BeginMap << YAML::Key << "path" << YAML::Value << f.generic_string() << YAML::Key << "sha256"
      << YAML::Value << sha256_file(dir / f) << YAML::EndMap;
  }
  y << YAML::EndSeq << YAML::EndMap;
  std::ofstream(dir / "manifest.yaml") << y.c_str() << "\n";
}

}  // namespace waveinv
