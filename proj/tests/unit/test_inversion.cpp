#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "waveinv/cgo.hpp"
#include "waveinv/inversion.hpp"

using namespace waveinv;
using std::numbers::pi;
namespace nl = waveinv::nonlinearities;

namespace {

GridPtr both_ends(int nx, double T) {
  return share(build_grid_1d({0, 1}, nx, T, steps_for(T, 1.0 / nx, 0.5), 0.5).with_all_gamma0());
}

GridPtr right_end(int nx, double T) {
  return share(tag_gamma0(build_grid_1d({0, 1}, nx, T, steps_for(T, 1.0 / nx, 0.5), 0.5), {-0.5, 0}));
}

Scenario scenario(const GridPtr& g, Nonlinearity f, Spatial phi = {}, Spatial psi = {}) {
  Scenario s = make_scenario(g, Sigma::constant(*g, 1.0), std::move(f), std::move(phi), std::move(psi));
  s.solver.tol = 1e-13;
  s.solver.max_iter = 100;
  return s;
}

LinearizationStencil stencil(const GridPtr& g, int count, double c0, double c1, int order = 1) {
  LinearizationStencil st;
  st.directions = pulse_directions(g, Subset::all, count, c0, c1);
  st.order = order;
  st.scheme = default_scheme(order);
  return st;
}

double rel(const Field& a, const Field& b) { return l2_norm(a - b) / l2_norm(b); }

Field masked(const GridPtr& g, double t1, double t2, const std::function<double(double)>& fx) {
  return Field::sample(g, FieldKind::potential,
                       [=](const Point& x, double t) { return t >= t1 - 1e-12 && t <= t2 + 1e-12 ? fx(x[0]) : 0.0; });
}

double window_mean(const Field& f, double t1, double t2) {
  const Grid& g = f.grid();
  const auto tw = window_weights(g, t1, t2);
  double s = 0.0, w = 0.0;
  for (int n = 0; n < g.levels(); ++n) {
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      s += tw[n] * g.node_weight(i) * f.at(n, i);
      w += tw[n] * g.node_weight(i);
    }
  }
  return s / w;
}

}  // namespace

TEST(Linearization, LinearEqualsLinearizedSolve) {
  auto g = both_ends(60, 2.0);
  Spatial phi = sample_spatial(*g, [](const Point& x) { return 0.3 * std::sin(pi * x[0]); });
  Scenario s = scenario(g, nl::linear(2.0), phi);
  auto st = stencil(g, 2, 0.4, 0.4);
  const Field v = fd_linearize(s, st, {1});
  const Field two = Field::sample(g, FieldKind::potential, [](const Point&, double) { return 2.0; });
  LinearData d;
  d.potential = &two;
  d.dirichlet = &st.directions[1];
  EXPECT_LT(rel(v, solve_linear(g, s.sigma, d)), 1e-8);
}

TEST(Linearization, SecondOrderQuadratic) {
  auto g = both_ends(60, 2.0);
  Scenario s = scenario(g, nl::power(1.0, 2));
  auto st = stencil(g, 2, 0.4, 0.4, 2);
  const Field w = fd_linearize(s, st, {0, 1});
  const Field two = Field::sample(g, FieldKind::potential, [](const Point&, double) { return 2.0; });
  MixedModel m(g, s.sigma, {nullptr, &two}, {&st.directions[0], &st.directions[1]});
  EXPECT_LT(rel(w, m.mixed(3u)), 1e-3);
  // direct form of the same equation
  Field src(g, FieldKind::source);
  for (std::size_t k = 0; k < src.size(); ++k) src.values()[k] = -2.0 * m.mixed(1u).values()[k] * m.mixed(2u).values()[k];
  EXPECT_LT(rel(m.mixed(3u), m.solve(src)), 1e-14);
}

TEST(Linearization, RichardsonSlopes) {
  auto g = both_ends(40, 1.5);
  Spatial phi = sample_spatial(*g, [](const Point& x) { return 0.5 * std::sin(pi * x[0]); });
  Scenario s = scenario(g, nl::power(1.0, 2), phi);
  auto st = stencil(g, 2, 0.4, 0.4);
  // exact first derivative: linear solve with potential 2 u~
  const Field u0 = solve_semilinear(g, s.sigma, s.f, {.phi = &s.phi, .psi = &s.psi}, s.solver).u;
  const Field a = linearized_potential(u0, s.f);
  LinearData d;
  d.potential = &a;
  d.dirichlet = &st.directions[0];
  const Field v = solve_linear(g, s.sigma, d);
  for (FdScheme sc : {FdScheme::forward, FdScheme::central}) {
    st.scheme = sc;
    std::vector<double> err;
    for (double e : {1e-2, 1e-3, 1e-4}) {
      st.eps = e;
      err.push_back(rel(fd_linearize(s, st, {0}), v));
    }
    const double slope = std::log10(err[0] / err[2]) / 2.0;
    EXPECT_NEAR(slope, sc == FdScheme::forward ? 1.0 : 2.0, 0.3) << to_string(sc);
  }
}

TEST(Linearization, Guards) {
  auto g = both_ends(20, 1.5);
  Scenario s = scenario(g, nl::zero());
  auto st = stencil(g, 2, 0.4, 0.4, 2);
  st.eps = 1e-9;
  EXPECT_THROW(fd_linearize(s, st, {0}), PreconditionError);
  st.eps = 1e-3;
  EXPECT_THROW(fd_linearize(s, st, {0, 0}), PreconditionError);
  EXPECT_THROW(fd_linearize(s, st, {0, 1, 2}), PreconditionError);
  st.order = 5;
  EXPECT_THROW(fd_linearize(s, st, {0}), PreconditionError);
  EXPECT_THROW(pulse_directions(g, Subset::all, 2, 0.1, 0.1), PreconditionError);
}

TEST(Linearization, ThirdOrderCubic) {
  auto g = both_ends(40, 1.5);
  Scenario s = scenario(g, nl::cubic(1.0));
  auto st = stencil(g, 4, 0.4, 0.6, 3);
  const Field w = fd_linearize(s, st, {0, 1, 2});
  const Field six = Field::sample(g, FieldKind::potential, [](const Point&, double) { return 6.0; });
  MixedModel m(g, s.sigma, {nullptr, nullptr, &six},
               {&st.directions[0], &st.directions[1], &st.directions[2]});
  EXPECT_LT(rel(w, m.mixed(7u)), 1e-2);
}

TEST(Basis, SplinesAndGram) {
  for (int m : {4, 5, 8}) {
    for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += clamped_bspline(j, m, 0.0, 1.0, t);
      EXPECT_NEAR(s, 1.0, 1e-14);
    }
  }
  // four splines on one interval are the cubic Bernstein polynomials
  EXPECT_NEAR(clamped_bspline(1, 4, 0.0, 1.0, 0.3), 3 * 0.3 * 0.7 * 0.7, 1e-14);
  EXPECT_EQ(clamped_bspline(0, 4, 1.0, 2.0, 0.5), 0.0);

  auto g = both_ends(20, 2.0);
  SpaceTimeBasis b{.spatial = 3, .temporal = 5, .t1 = 0.5, .t2 = 1.5};
  const BasisTables tb = b.tables(*g);
  ASSERT_EQ(static_cast<int>(tb.size()), b.size(1));
  const Eigen::MatrixXd G = basis_gram(*g, tb);
  for (std::size_t i = 0; i < tb.size(); i += 4) {
    for (std::size_t j = 0; j < tb.size(); j += 3) {
      EXPECT_NEAR(G(i, j), inner(basis_element(g, tb, i), basis_element(g, tb, j)), 1e-12);
    }
  }
}

TEST(IntegralIdentity, TrivialCases) {
  auto g = both_ends(40, 2.0);
  CgoParams p = default_cgo_params(*g, 8.0, 1, {-0.5, 0}, 0.5, 1.5);
  const CgoSolution a = build_cgo(g, nullptr, p, 0.5, 1.5);
  p.sign = -1;
  const CgoSolution b = build_cgo(g, nullptr, p, 0.5, 1.5);
  const Field zero(g, FieldKind::solution);
  EXPECT_EQ(std::abs(integral_identity(zero, {a.total(), b.total()}, 0.5, 1.5)), 0.0);
  EXPECT_THROW(integral_identity(zero, {a.total(), b.total()}, 0.5, 2.5), PreconditionError);
  EXPECT_THROW(integral_identity(zero, {a.total()}, 0.5, 1.5), PreconditionError);

  // identical scenarios give identical linearized data
  Scenario s1 = scenario(g, nl::power(1.0, 2)), s2 = s1;
  auto st = stencil(g, 2, 0.4, 0.4);
  const Field delta = fd_linearize(s1, st, {0}) - fd_linearize(s2, st, {0});
  EXPECT_LE(std::abs(integral_identity(delta, {a.total(), b.total()}, 0.5, 1.5)), 1e-8);
}

TEST(IntegralIdentity, PhaseCancellation) {
  const double t1 = 0.5, t2 = 1.5;
  std::vector<double> errs;
  for (double tau : {4.0, 8.0, 16.0, 32.0}) {
    GridPtr g = cgo_grid({{0, 1}}, 2.0, tau);
    const Field q = Field::sample(g, FieldKind::potential, [](const Point&, double) { return 1.0; });
    const Field delta = Field::sample(g, FieldKind::solution, [](const Point& x, double t) {
      const double r = std::hypot((x[0] - 0.5) / 0.3, (t - 1.0) / 0.3);
      return r < 1.0 ? std::pow(1 - r * r, 4) : 0.0;
    });
    CgoParams p = default_cgo_params(*g, tau, 1, {-0.5, 0}, t1, t2);
    const CgoSolution a = build_cgo(g, &q, p, t1, t2);
    p.sign = -1;
    const CgoSolution b = build_cgo(g, &q, p, t1, t2);
    const auto val = integral_identity(delta, {a.total(), b.total()}, t1, t2);
    const auto ref = integral_identity(delta, {ComplexField(a.principal), ComplexField(b.principal)}, t1, t2);
    errs.push_back(std::abs(val - ref) / std::abs(ref));
  }
  // beyond tau = 8 the gap sits at the dispersion floor of the fixed points-per-wavelength grids
  for (std::size_t k = 1; k < errs.size(); ++k) EXPECT_LT(errs[k], 0.1 * errs[0]);
  EXPECT_LT(errs.back(), 5e-3);
}

namespace {

struct PotentialSetup {
  GridPtr g = both_ends(80, 3.0);
  double t1 = 1.0, t2 = 2.0;
  LinearizationStencil st = stencil(g, 16, 0.35, 2.0);
};

}  // namespace

TEST(RecoverPotential, ZeroTruth) {
  PotentialSetup P;
  MeasurementOracle o(scenario(P.g, nl::zero()), 1e-2);
  SpaceTimeBasis b{.spatial = 8, .temporal = 4, .t1 = P.t1, .t2 = P.t2};
  const RecoveryResult r = recover_potential(o, P.st, b, {});
  EXPECT_LE(l2_norm(r.recovered), 1e-3);
  EXPECT_FALSE(r.rel_l2_error.has_value());
}

TEST(RecoverPotential, ExactInSpan) {
  PotentialSetup P;
  SpaceTimeBasis b{.spatial = 1, .temporal = 4, .t1 = P.t1, .t2 = P.t2};
  const BasisTables tb = b.tables(*P.g);
  Eigen::VectorXd c(4);
  c << 0.5, -0.3, 0.8, 0.2;
  auto q = std::make_shared<const Field>(basis_combine(P.g, tb, c));
  MeasurementOracle o(scenario(P.g, nl::potential(q)), 1e-2);
  RecoveryOptions opt;
  opt.reg = 1e-12;
  RecoveryResult r = recover_potential(o, P.st, b, opt);
  r.set_truth(*q);
  EXPECT_LT(*r.rel_l2_error, 1e-6);
}

TEST(RecoverPotential, OnePlusX) {
  PotentialSetup P;
  auto q = std::make_shared<const Field>(masked(P.g, P.t1, P.t2, [](double x) { return 1.0 + x; }));
  MeasurementOracle o(scenario(P.g, nl::potential(q)), 1e-2);
  SpaceTimeBasis b{.spatial = 8, .temporal = 4, .t1 = P.t1, .t2 = P.t2};
  RecoveryResult r = recover_potential(o, P.st, b, {});
  r.set_truth(*q);
  EXPECT_LE(*r.rel_l2_error, 0.1);
  EXPECT_EQ(r.queries, 32);
  EXPECT_EQ(r.lcurve.size(), 4u);

  RecoveryOptions noisy;
  noisy.noise = 0.01;
  noisy.reg_sweep = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
  RecoveryResult rn = recover_potential(o, P.st, b, noisy);
  rn.set_truth(*q);
  double best = 1e300;
  for (const auto& p : rn.lcurve) best = std::min(best, *p.error);
  EXPECT_LE(best, 0.25);
}

TEST(RecoverPotential, IllConditionedRaises) {
  PotentialSetup P;
  MeasurementOracle o(scenario(P.g, nl::zero()), 1e-2);
  LinearizationStencil st = stencil(P.g, 2, 0.4, 0.4);
  SpaceTimeBasis b{.spatial = 16, .temporal = 12, .t1 = P.t1, .t2 = P.t2};
  RecoveryOptions opt;
  opt.reg = 0.0;
  try {
    recover_potential(o, st, b, opt);
    FAIL() << "expected a conditioning failure";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("increase regularization"), std::string::npos);
  }
}

TEST(RecoverPotential, Deterministic) {
  PotentialSetup P;
  auto q = std::make_shared<const Field>(masked(P.g, P.t1, P.t2, [](double x) { return x; }));
  MeasurementOracle a(scenario(P.g, nl::potential(q)), 1e-2), b(scenario(P.g, nl::potential(q)), 1e-2);
  SpaceTimeBasis basis{.spatial = 2, .temporal = 4, .t1 = P.t1, .t2 = P.t2};
  RecoveryOptions opt;
  opt.noise = 0.01;
  const auto ra = recover_potential(a, P.st, basis, opt);
  const auto rb = recover_potential(b, P.st, basis, opt);
  EXPECT_EQ(ra.recovered.values(), rb.recovered.values());
}

TEST(RecoverTaylor, QuadraticCoefficient) {
  PotentialSetup P;
  auto q2 = [](const Point& x, double) { return 1.0 + 0.5 * std::cos(pi * x[0]); };
  MeasurementOracle o(scenario(P.g, windowed(nl::taylor({[](const Point&, double) { return 0.0; }, q2}), P.t1, P.t2)),
                      1e-2);
  o.set_solver_tolerance(1e-13);
  SpaceTimeBasis b{.spatial = 8, .temporal = 4, .t1 = P.t1, .t2 = P.t2};
  LinearizationStencil st = P.st;
  st.order = 2;
  const Field zero(P.g, FieldKind::potential);
  RecoveryResult r = recover_taylor_coefficient(o, 2, {zero}, st, b, {});
  r.set_truth(masked(P.g, P.t1, P.t2, [](double x) { return 2.0 + std::cos(pi * x); }));
  EXPECT_LE(*r.rel_l2_error, 0.15);
  EXPECT_THROW(recover_taylor_coefficient(o, 3, {zero}, st, b, {}), PreconditionError);
}

TEST(RecoverTaylor, LinearGivesZero) {
  PotentialSetup P;
  auto q = std::make_shared<const Field>(masked(P.g, P.t1, P.t2, [](double) { return 1.0; }));
  MeasurementOracle o(scenario(P.g, nl::potential(q)), 1e-2);
  o.set_solver_tolerance(1e-13);
  SpaceTimeBasis b{.spatial = 4, .temporal = 4, .t1 = P.t1, .t2 = P.t2};
  LinearizationStencil st = P.st;
  st.order = 2;
  RecoveryOptions opt;
  opt.tuples = 16;
  const RecoveryResult r = recover_taylor_coefficient(o, 2, {*q}, st, b, opt);
  EXPECT_LE(l2_norm(r.recovered), 1e-3);
}

TEST(RecoverTaylor, CubicChain) {
  PotentialSetup P;
  MeasurementOracle o(scenario(P.g, windowed(nl::cubic(1.0), P.t1, P.t2)), 1e-2);
  o.set_solver_tolerance(1e-13);
  SpaceTimeBasis b{.spatial = 4, .temporal = 4, .t1 = P.t1, .t2 = P.t2};
  LinearizationStencil st = P.st;
  st.order = 3;
  RecoveryOptions opt;
  opt.tuples = 32;
  const Field zero(P.g, FieldKind::potential);
  st.scheme = default_scheme(2);
  const RecoveryResult r2 = recover_taylor_coefficient(o, 2, {zero}, st, b, opt);
  EXPECT_LE(l2_norm(r2.recovered), 1e-2);
  st.scheme = default_scheme(3);
  RecoveryResult r3 = recover_taylor_coefficient(o, 3, {zero, r2.recovered}, st, b, opt);
  r3.set_truth(masked(P.g, P.t1, P.t2, [](double) { return 6.0; }));
  EXPECT_LE(*r3.rel_l2_error, 0.2);
}

TEST(RecoverInitialPassive, ZeroFlux) {
  auto g = both_ends(50, 2.5);
  Scenario s = scenario(g, nl::linear(1.0));
  const InitialRecovery r = recover_initial_passive(passive_dn(s), s);
  for (double v : r.phi) EXPECT_EQ(v, 0.0);
  for (double v : r.psi) EXPECT_EQ(v, 0.0);
}

TEST(RecoverInitialPassive, LinearSine) {
  auto g = both_ends(200, 2.5);
  Spatial phi = sample_spatial(*g, [](const Point& x) { return std::sin(pi * x[0]); });
  Scenario s = scenario(g, nl::linear(1.0), phi);
  Scenario model = s;
  model.phi.assign(g->num_nodes(), 0.0);
  const InitialRecovery r = recover_initial_passive(passive_dn(s), model, {}, std::pair{s.phi, s.psi});
  EXPECT_LE(*r.rel_error, 0.05);
  EXPECT_TRUE(r.warnings.empty());
  ASSERT_TRUE(r.certificate.has_value());
  for (std::size_t k = 1; k < r.residual_history.size(); ++k) {
    EXPECT_LE(r.residual_history[k], r.residual_history[k - 1] + 1e-12 * r.residual_history.front());
  }
}

TEST(RecoverInitialPassive, SineNonlinearity) {
  auto g = both_ends(100, 2.5);
  auto bump = [](double c) {
    return [c](const Point& x) {
      const double r = (x[0] - c) / 0.25;
      return std::abs(r) < 1 ? std::pow(1 - r * r, 4) : 0.0;
    };
  };
  Spatial phi = sample_spatial(*g, bump(0.4)), psi = sample_spatial(*g, bump(0.6));
  Scenario s = scenario(g, nl::sine(2.0), phi, psi);
  const InitialRecovery r = recover_initial_passive(passive_dn(s), s, {}, std::pair{phi, psi});
  EXPECT_LE(*r.rel_error, 0.1);
  EXPECT_GE(r.outer_iterations, 2);
}

TEST(RecoverInitialPassive, ShortHorizonWarns) {
  auto g = right_end(40, 1.5);
  Spatial phi = sample_spatial(*g, [](const Point& x) { return std::sin(pi * x[0]); });
  Scenario s = scenario(g, nl::linear(1.0), phi);
  InitialRecoveryOptions opt;
  opt.max_cg = 30;
  const InitialRecovery r = recover_initial_passive(passive_dn(s), s, opt);
  ASSERT_FALSE(r.warnings.empty());
  EXPECT_EQ(r.warnings.front(), "uniqueness not guaranteed");
}

namespace {

struct ActiveSetup {
  GridPtr g = both_ends(80, 3.0);
  double t_star = 1.2, eps = 0.3;
  Spatial bump = sample_spatial(*g, [](const Point& x) {
    const double r = (x[0] - 0.5) / 0.3;
    return std::abs(r) < 1 ? std::pow(1 - r * r, 4) : 0.0;
  });

  Scenario hidden(Nonlinearity after, Spatial phi) const {
    return scenario(g, spliced(nl::linear(1.0), std::move(after), t_star + eps), std::move(phi));
  }
};

}  // namespace

TEST(RecoverInitialActive, ZeroTruth) {
  ActiveSetup A;
  MeasurementOracle o(A.hidden(nl::cubic(2.0), {}));
  const ActiveRecovery r = recover_initial_active(o, scenario(A.g, nl::linear(1.0)), A.t_star, A.eps);
  for (double v : r.initial.phi) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.post_window_flux, 0.0);
}

TEST(RecoverInitialActive, IndependentOfLaterNonlinearity) {
  ActiveSetup A;
  const auto truth = std::pair{A.bump, Spatial(A.g->num_nodes(), 0.0)};
  MeasurementOracle o0(A.hidden(nl::zero(), A.bump));
  const ActiveRecovery r0 = recover_initial_active(o0, scenario(A.g, nl::linear(1.0)), A.t_star, A.eps, {}, 5, 0.05,
                                                   truth);
  EXPECT_LE(*r0.initial.rel_error, 0.1);
  EXPECT_LE(r0.post_window_flux, 0.05);

  MeasurementOracle o1(A.hidden(nl::cubic(3.0), A.bump)), o2(A.hidden(nl::sine(2.0), A.bump));
  const ActiveRecovery r1 = recover_initial_active(o1, scenario(A.g, nl::linear(1.0)), A.t_star, A.eps);
  const ActiveRecovery r2 = recover_initial_active(o2, scenario(A.g, nl::linear(1.0)), A.t_star, A.eps);
  Spatial dphi = r1.initial.phi, dpsi = r1.initial.psi;
  for (std::size_t i = 0; i < dphi.size(); ++i) {
    dphi[i] -= r2.initial.phi[i];
    dpsi[i] -= r2.initial.psi[i];
  }
  const Sigma one = Sigma::constant(*A.g, 1.0);
  EXPECT_LE(h1l2_norm(*A.g, one, dphi, dpsi), 0.02 * h1l2_norm(*A.g, one, r1.initial.phi, r1.initial.psi));
}

TEST(Stability, RatioSpreadBounded) {
  auto g = both_ends(60, 2.5);
  Scenario s = scenario(g, nl::linear(1.0));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto random_pair = [&] {
    std::array<double, 8> c{};
    for (auto& v : c) v = U(rng);
    Spatial phi = sample_spatial(*g, [&](const Point& x) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += c[k] * std::sin((k + 1) * pi * x[0]);
      return v;
    });
    Spatial psi = sample_spatial(*g, [&](const Point& x) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += c[4 + k] * std::sin((k + 1) * pi * x[0]);
      return v;
    });
    return std::pair{phi, psi};
  };
  std::vector<std::pair<Spatial, Spatial>> a, b;
  for (int k = 0; k < 10; ++k) {
    a.push_back(random_pair());
    b.push_back(random_pair());
  }
  const StabilityProbe p = stability_probe(s, a, b);
  EXPECT_EQ(p.ratios.size(), 10u);
  EXPECT_LE(p.spread, 20.0);
}

TEST(Simultaneous, QuadraticEndToEnd) {
  auto g = right_end(80, 4.5);
  const double t1 = 3.2, t2 = 4.2;
  Spatial phi = sample_spatial(*g, [](const Point& x) { return 0.01 * std::sin(pi * x[0]); });
  MeasurementOracle o(scenario(g, windowed(nl::power(1.0, 2), t1, t2), phi), 1e-2);
  o.set_solver_tolerance(1e-13);
  LinearizationStencil st = stencil(g, 16, 2.4, 4.1, 2);
  SpaceTimeBasis b{.spatial = 8, .temporal = 4, .t1 = t1, .t2 = t2};
  RecoveryOptions opt;
  opt.tuples = 32;
  const SimultaneousResult r = simultaneous_recover(o, st, b, 2, opt);
  ASSERT_EQ(r.taylor.size(), 1u);
  EXPECT_NEAR(window_mean(r.taylor[0].recovered, t1, t2) / 2.0, 1.0, 0.2);
  Spatial dphi = r.initial.phi, dpsi = r.initial.psi;
  for (std::size_t i = 0; i < dphi.size(); ++i) dphi[i] -= phi[i];
  const Sigma one = Sigma::constant(*g, 1.0);
  EXPECT_LE(h1l2_norm(*g, one, dphi, dpsi), 0.1 * h1l2_norm(*g, one, phi, Spatial(phi.size(), 0.0)));
  EXPECT_TRUE(r.diagnostics.count("quotient_gap"));
}

TEST(Simultaneous, ZeroEverything) {
  auto g = right_end(40, 3.0);
  MeasurementOracle o(scenario(g, nl::zero()), 1e-2);
  LinearizationStencil st = stencil(g, 4, 0.4, 1.5, 2);
  SpaceTimeBasis b{.spatial = 2, .temporal = 4, .t1 = 1.0, .t2 = 2.0};
  RecoveryOptions opt;
  opt.tuples = 4;
  const SimultaneousResult r = simultaneous_recover(o, st, b, 2, opt);
  EXPECT_LE(l2_norm(r.potential.recovered), 1e-6);
  EXPECT_LE(l2_norm(r.taylor[0].recovered), 1e-6);
  EXPECT_LE(l2_norm(*g, r.initial.phi), 1e-12);
}

TEST(Nonuniqueness, CollarSupportedSources) {
  auto g = both_ends(100, 2.0);
  for (const Sigma& sigma : {Sigma::constant(*g, 1.0), Sigma::from_function(*g, [](const Point& x) {
                               return Point{1.0 + 0.5 * x[0], 0.0};
                             })}) {
    const NonuniquenessResult r = nonuniqueness_demo(g, sigma, 0.2);
    EXPECT_LE(r.flux1, 1e-10);
    EXPECT_LE(r.flux2, 1e-10);
    EXPECT_GE(r.initial_distance, 0.1);
  }
  EXPECT_THROW(nonuniqueness_demo(g, Sigma::constant(*g, 1.0), 0.0), PreconditionError);
}

TEST(Nonuniqueness, TwoDimensional) {
  auto g = share(build_grid_2d({0, 1}, {0, 1}, 24, 24, 1.0, steps_for(1.0, 1.0 / 24, 0.5)).with_all_gamma0());
  const NonuniquenessResult r = nonuniqueness_demo(g, Sigma::constant(*g, 1.0), 0.2);
  EXPECT_LE(r.flux1, 1e-10);
  EXPECT_LE(r.flux2, 1e-10);
  EXPECT_GE(r.initial_distance, 0.1);
}
