#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>

#include "waveinv/inversion.hpp"
#include "waveinv/io.hpp"
#include "waveinv/wave.hpp"

namespace waveinv {

namespace {

template <class Fn>
auto staged(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericalError& e) {
    throw NumericalError(e.what(), stage);
  }
}

LinearizationStencil at_order(const LinearizationStencil& st, int k) {
  LinearizationStencil s = st;
  s.order = k;
  s.scheme = default_scheme(k);
  return s;
}

double factorial(int k) { return k <= 1 ? 1.0 : k * factorial(k - 1); }

}  // namespace

SimultaneousResult simultaneous_recover(const MeasurementOracle& oracle, const LinearizationStencil& st,
                                        const SpaceTimeBasis& basis, int max_order, const RecoveryOptions& opt,
                                        const InitialRecoveryOptions& init_opt) {
  if (max_order < 1 || max_order > 4) throw PreconditionError("orders to recover must be in 1..4");
  SimultaneousResult out;
  const GridPtr& grid = oracle.grid();
  const Sigma& sigma = oracle.sigma();

  out.potential = staged("potential", [&] { return recover_potential(oracle, at_order(st, 1), basis, opt); });
  out.diagnostics["potential_misfit"] = out.potential.misfit;
  std::vector<Field> lower{out.potential.recovered};
  for (int k = 2; k <= max_order; ++k) {
    RecoveryResult r = staged("taylor_" + std::to_string(k), [&] {
      return recover_taylor_coefficient(oracle, k, lower, at_order(st, k), basis, opt);
    });
    out.diagnostics["taylor_" + std::to_string(k) + "_misfit"] = r.misfit;
    lower.push_back(r.recovered);
    out.taylor.push_back(std::move(r));
  }

  // Background difference against the zero solution obeys w_tt - lap w + G w = 0;
  // G is replaced by the recovered f_u along the background.
  auto G = std::make_shared<const Field>(out.potential.recovered);
  Scenario model = make_scenario(grid, sigma, nonlinearities::potential(G), {}, {}, "step5");
  const MeasurementRecord passive = oracle.passive();
  out.initial = staged("initial_data", [&] { return recover_initial_passive(passive, model, init_opt); });
  out.diagnostics["initial_misfit"] = out.initial.misfit;

  // Second-order gap between G and the quotient (f(u) - f(0)) / u expanded
  // around the recovered background: G_exact = sum_k (-1)^(k-1) f^(k) u^(k-1) / k!.
  LinearData d;
  d.potential = G.get();
  d.phi = &out.initial.phi;
  d.psi = &out.initial.psi;
  const Field u = solve_linear(grid, sigma, d);
  Field quotient = *G;
  for (std::size_t k = 0; k < out.taylor.size(); ++k) {
    const int order = static_cast<int>(k) + 2;
    const double c = (order % 2 == 0 ? -1.0 : 1.0) / factorial(order);
    const auto& fk = out.taylor[k].recovered.values();
    for (std::size_t i = 0; i < quotient.size(); ++i) {
      quotient.values()[i] += c * fk[i] * std::pow(u.values()[i], order - 1);
    }
  }
  const double gn = l2_norm_window(*G, basis.t1, basis.t2);
  const double gap = l2_norm_window(quotient - *G, basis.t1, basis.t2);
  out.diagnostics["quotient_gap"] = gn > 0.0 ? gap / gn : gap;
  return out;
}

NonuniquenessResult nonuniqueness_demo(const GridPtr& grid, const Sigma& sigma, double collar) {
  const Grid& g = *grid;
  if (!(collar > 0.0)) throw PreconditionError("collar width must be positive");
  std::array<double, 2> centre{0.0, 0.0}, radius{1.0, 1.0};
  for (int a = 0; a < g.dim(); ++a) {
    const Interval& e = g.extent(a);
    radius[a] = 0.5 * e.length() - collar;
    centre[a] = 0.5 * (e.lo + e.hi);
    if (radius[a] < 2.0 * g.spacing(a)) throw PreconditionError("collar leaves no interior room on this grid");
  }
  auto bump = [&](const Point& x) {
    double v = 1.0;
    for (int a = 0; a < g.dim(); ++a) {
      const double r = (x[a] - centre[a]) / radius[a];
      if (std::abs(r) >= 1.0) return 0.0;
      const double s = 1.0 - r * r;
      v *= s * s * s * s;
    }
    return v;
  };
  const double T = g.t_final();
  struct Profile {
    std::function<double(double)> e;   // time envelope
    std::function<double(double)> de;  // its derivative
  };
  const Profile prof[2] = {
      {[T](double t) { return std::cos(std::numbers::pi * t / T); },
       [T](double t) { return -std::numbers::pi / T * std::sin(std::numbers::pi * t / T); }},
      {[](double t) { return -std::exp(-t); }, [](double t) { return std::exp(-t); }},
  };

  const std::size_t N = g.num_nodes();
  const double dt = g.dt();
  StiffnessOperator op(g, sigma);
  NonuniquenessResult out;
  for (int j = 0; j < 2; ++j) {
    Field U(grid, FieldKind::solution);
    for (int n = 0; n < g.levels(); ++n) {
      const double e = prof[j].e(g.time(n));
      for (std::size_t i = 0; i < N; ++i) U.at(n, i) = bump(g.coord(i)) * e;
    }
    Spatial phi(U.level(0).begin(), U.level(0).end());
    Spatial psi(N);
    for (std::size_t i = 0; i < N; ++i) psi[i] = bump(g.coord(i)) * prof[j].de(0.0);
    // F chosen so that the scheme reproduces U exactly: -u_tt + div(sigma grad u) in discrete form.
    auto F = std::make_shared<Field>(grid, FieldKind::source);
    std::vector<double> lu(N);
    for (int n = 0; n < g.nt(); ++n) {
      std::fill(lu.begin(), lu.end(), 0.0);
      op.apply(U.data() + n * N, lu.data());
      for (std::size_t i : g.interior_nodes()) {
        const double utt = n == 0 ? 2.0 * (U.at(1, i) - phi[i] - dt * psi[i]) / (dt * dt)
                                  : (U.at(n + 1, i) - 2.0 * U.at(n, i) + U.at(n - 1, i)) / (dt * dt);
        F->at(n, i) = lu[i] - utt;
      }
    }
    const int nt = g.nt();
    for (std::size_t i : g.interior_nodes()) {
      F->at(nt, i) = nt >= 2 ? 2.0 * F->at(nt - 1, i) - F->at(nt - 2, i) : F->at(nt - 1, i);
    }
    Scenario s = make_scenario(grid, sigma, nonlinearities::state_independent(F), phi, psi,
                               "nonuniqueness_" + std::to_string(j + 1));
    MeasurementRecord rec = passive_dn(s);
    const double fl = l2_norm(rec.flux);
    if (j == 0) {
      out.first = std::move(s);
      out.record1 = std::move(rec);
      out.flux1 = fl;
    } else {
      out.second = std::move(s);
      out.record2 = std::move(rec);
      out.flux2 = fl;
    }
  }
  Spatial d = out.first.phi;
  for (std::size_t i = 0; i < N; ++i) d[i] -= out.second.phi[i];
  out.initial_distance = l2_norm(g, d);
  return out;
}

void write_recovery(const std::filesystem::path& dir, const RecoveryResult& r) {
  std::filesystem::create_directories(dir);
  write_field(dir / "recovered.wfld", r.recovered);
  if (r.truth) write_field(dir / "truth.wfld", *r.truth);
  {
    CsvWriter w(dir / "lcurve.csv");
    w.header({"reg", "residual", "norm", "rel_l2_error"});
    for (const auto& p : r.lcurve) w.row({p.reg, p.residual, p.norm, p.error.value_or(std::nan(""))});
  }
  {
    CsvWriter w(dir / "misfit.csv");
    w.header({"iteration", "relative_misfit"});
    for (std::size_t k = 0; k < r.misfit_history.size(); ++k) w.row({static_cast<double>(k), r.misfit_history[k]});
  }
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "window" << YAML::Value << YAML::Flow << YAML::BeginSeq << fmt(r.t1) << fmt(r.t2) << YAML::EndSeq;
  y << YAML::Key << "regularization" << YAML::Value << fmt(r.regularization);
  y << YAML::Key << "rel_l2_error" << YAML::Value << (r.rel_l2_error ? fmt(*r.rel_l2_error) : std::string("null"));
  y << YAML::Key << "misfit" << YAML::Value << fmt(r.misfit);
  y << YAML::Key << "condition" << YAML::Value << fmt(r.condition);
  y << YAML::Key << "iterations" << YAML::Value << r.iterations;
  y << YAML::Key << "queries" << YAML::Value << r.queries;
  y << YAML::Key << "cancellation_ratio" << YAML::Value << fmt(r.cancellation_ratio);
  y << YAML::Key << "notes" << YAML::Value << YAML::BeginSeq;
  for (const auto& n : r.notes) y << n;
  y << YAML::EndSeq << YAML::EndMap;
  std::ofstream(dir / "meta.yaml") << y.c_str() << "\n";
}

void write_initial(const std::filesystem::path& dir, const Grid& grid, const InitialRecovery& r) {
  std::filesystem::create_directories(dir);
  write_state(dir / "initial.wfld", grid, r.phi, r.psi);
  {
    CsvWriter w(dir / "cg.csv");
    w.header({"iterate", "functional"});
    for (std::size_t k = 0; k < r.residual_history.size(); ++k) {
      w.row({static_cast<double>(k), r.residual_history[k]});
    }
  }
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "cg_iterations" << YAML::Value << r.cg_iterations;
  y << YAML::Key << "outer_iterations" << YAML::Value << r.outer_iterations;
  y << YAML::Key << "misfit" << YAML::Value << fmt(r.misfit);
  y << YAML::Key << "rel_error" << YAML::Value << (r.rel_error ? fmt(*r.rel_error) : std::string("null"));
  y << YAML::Key << "certificate" << YAML::Value << (r.certificate ? fmt(*r.certificate) : std::string("null"));
  y << YAML::Key << "warnings" << YAML::Value << YAML::BeginSeq;
  for (const auto& w : r.warnings) y << w;
  y << YAML::EndSeq << YAML::EndMap;
  std::ofstream(dir / "meta.yaml") << y.c_str() << "\n";
}

}  // namespace waveinv
