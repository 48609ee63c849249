#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "waveinv/io.hpp"
#include "waveinv/wave.hpp"

using namespace waveinv;
using std::numbers::pi;

namespace {

GridPtr line(int nx, double T, double cfl = 0.5) {
  return share(build_grid_1d({0, 1}, nx, T, steps_for(T, 1.0 / nx, cfl), cfl));
}

double eigen_error(int nx) {
  auto g = line(nx, 1.0);
  Spatial phi = sample_spatial(*g, [](const Point& x) { return std::sin(pi * x[0]); });
  Field u = solve_linear(g, Sigma::constant(*g, 1.0), {.phi = &phi});
  double err = 0.0;
  for (int n = 0; n < g->levels(); ++n) {
    for (std::size_t i = 0; i < g->num_nodes(); ++i) {
      err = std::max(err, std::abs(u.at(n, i) - std::sin(pi * g->coord(i)[0]) * std::cos(pi * g->time(n))));
    }
  }
  return err;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_transpose(const GridPtr& g, const Sigma& sigma) {
  std::mt19937_64 rng(7);
  const std::size_t N = g->num_nodes(), M = g->levels() * N;
  Field a(g, FieldKind::potential, random_vec(rng, M));
  Field K(g, FieldKind::source, random_vec(rng, M));
  for (int n = 0; n < g->levels(); ++n) {
    for (std::size_t b : g->boundary_nodes()) K.at(n, b) = 0.0;
  }
  BoundaryTrace h = BoundaryTrace::zeros(g, Subset::all, Quantity::dirichlet);
  h.values = random_vec(rng, h.values.size());
  Spatial phi = random_vec(rng, N), psi = random_vec(rng, N);
  const auto hB = expand_dirichlet(h);
  for (std::size_t b = 0; b < g->boundary_nodes().size(); ++b) {
    phi[g->boundary_nodes()[b]] = hB[b];
    psi[g->boundary_nodes()[b]] = 0.0;
  }
  Field u = solve_linear(g, sigma, {.potential = &a, .source = &K, .dirichlet = &h, .phi = &phi, .psi = &psi});
  auto seed = random_vec(rng, M);
  auto adj = solve_transpose(*g, sigma, a.data(), seed);
  Spatial phiI = phi;
  for (std::size_t b : g->boundary_nodes()) phiI[b] = 0.0;
  const double lhs = dot(seed, u.values());
  const double rhs = dot(adj.source, K.values()) + dot(adj.boundary, hB) + dot(adj.phi, phiI) + dot(adj.psi, psi);
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
}

}  // namespace

TEST(Wave, EigenmodeAndOrder) {
  const double e50 = eigen_error(50), e100 = eigen_error(100), e200 = eigen_error(200);
  EXPECT_LE(e200, 5e-3);
  const double p1 = std::log2(e50 / e100), p2 = std::log2(e100 / e200);
  EXPECT_GT(p1, 1.8);
  EXPECT_LT(p1, 2.2);
  EXPECT_GT(p2, 1.8);
  EXPECT_LT(p2, 2.2);
}

TEST(Wave, ZeroDataGivesZero) {
  auto g = line(20, 1.0);
  Field u = solve_linear(g, Sigma::constant(*g, 1.0), {});
  for (double v : u.values()) EXPECT_EQ(v, 0.0);
}

TEST(Wave, QuadraticManufacturedIsExact) {
  auto g = line(40, 1.0);
  Field K = Field::sample(g, FieldKind::source, [](const Point& x, double t) {
    return 2.0 * x[0] * (1.0 - x[0]) + 2.0 * t * t;
  });
  Field u = solve_linear(g, Sigma::constant(*g, 1.0), {.source = &K});
  double err = 0.0;
  for (int n = 0; n < g->levels(); ++n) {
    for (std::size_t i = 0; i < g->num_nodes(); ++i) {
      const double x = g->coord(i)[0], t = g->time(n);
      err = std::max(err, std::abs(u.at(n, i) - x * (1 - x) * t * t));
    }
  }
  EXPECT_LT(err, 1e-12);
}

TEST(Wave, ManufacturedSecondOrder) {
  auto error = [](int nx) {
    auto g = line(nx, 1.0);
    Field K = Field::sample(g, FieldKind::source, [](const Point& x, double t) {
      return (pi * pi - 1.0) * std::sin(pi * x[0]) * std::sin(t);
    });
    Spatial psi = sample_spatial(*g, [](const Point& x) { return std::sin(pi * x[0]); });
    Field u = solve_linear(g, Sigma::constant(*g, 1.0), {.source = &K, .psi = &psi});
    double err = 0.0;
    for (int n = 0; n < g->levels(); ++n) {
      for (std::size_t i = 0; i < g->num_nodes(); ++i) {
        err = std::max(err, std::abs(u.at(n, i) - std::sin(pi * g->coord(i)[0]) * std::sin(g->time(n))));
      }
    }
    return err;
  };
  const double r = error(50) / error(100);
  EXPECT_GT(r, 3.6);
  EXPECT_LT(r, 4.4);
}

TEST(Wave, IncompatibleDataRejected) {
  auto g = line(20, 1.0);
  Spatial phi(g->num_nodes(), 1.0);
  EXPECT_THROW(solve_linear(g, Sigma::constant(*g, 1.0), {.phi = &phi}), PreconditionError);
}

TEST(Wave, UnstableSigmaRejected) {
  auto g = line(20, 1.0, 0.9);
  EXPECT_THROW(solve_linear(g, Sigma::constant(*g, 2.0), {}), PreconditionError);
}

TEST(Wave, TransposeIsExact1D) {
  auto g = line(30, 1.0);
  Sigma s = Sigma::from_function(*g, [](const Point& x) { return Point{1.0 + 0.5 * x[0], 0.0}; });
  check_transpose(g, s);
}

TEST(Wave, TransposeIsExact2D) {
  auto g = share(build_grid_2d({0, 1}, {0, 2}, 8, 12, 0.5, 20, 0.5));
  Sigma s = Sigma::from_function(*g, [](const Point& x) { return Point{1.0 + 0.2 * x[1], 0.8}; });
  check_transpose(g, s);
}

TEST(Wave, TraceAndFinalStateTransposes) {
  auto g = share(tag_gamma0(build_grid_2d({0, 1}, {0, 1}, 8, 8, 0.5, 20, 0.5), {-0.5, 0.3}));
  Sigma s = Sigma::from_function(*g, [](const Point& x) { return Point{1.0 + x[0], 1.0 + x[1]}; });
  std::mt19937_64 rng(3);
  const std::size_t N = g->num_nodes(), M = g->levels() * N;
  Field u(g, FieldKind::solution, random_vec(rng, M));
  Field a(g, FieldKind::potential, random_vec(rng, M));
  Field K(g, FieldKind::source, random_vec(rng, M));

  BoundaryTrace tr = neumann_trace(u, s, Subset::gamma0);
  BoundaryTrace w = tr;
  w.values = random_vec(rng, w.values.size());
  std::vector<double> seed(M, 0.0);
  neumann_trace_transpose(w, s, seed);
  EXPECT_NEAR(dot(w.values, tr.values), dot(seed, u.values()), 1e-10 * std::abs(dot(w.values, tr.values)));

  FinalState fs = final_state(u, s, &a, &K);
  Spatial wu = random_vec(rng, N), wv = random_vec(rng, N);
  std::vector<double> seed2(M, 0.0), kgrad(M, 0.0);
  final_state_transpose(*g, s, a.data(), wu, wv, seed2, &kgrad);
  const double lhs = dot(wu, fs.u) + dot(wv, fs.ut);
  const double rhs = dot(seed2, u.values()) + dot(kgrad, K.values());
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
}

TEST(Wave, FinalStateOfEigenmode) {
  auto g = line(200, 1.3);
  Spatial phi = sample_spatial(*g, [](const Point& x) { return std::sin(pi * x[0]); });
  Field u = solve_linear(g, Sigma::constant(*g, 1.0), {.phi = &phi});
  FinalState fs = final_state(u, Sigma::constant(*g, 1.0), nullptr, nullptr);
  const double T = g->t_final();
  double eu = 0.0, ev = 0.0;
  for (std::size_t i = 0; i < g->num_nodes(); ++i) {
    const double x = g->coord(i)[0];
    eu = std::max(eu, std::abs(fs.u[i] - std::sin(pi * x) * std::cos(pi * T)));
    ev = std::max(ev, std::abs(fs.ut[i] + pi * std::sin(pi * x) * std::sin(pi * T)));
  }
  EXPECT_LT(eu, 1e-3);
  EXPECT_LT(ev, 1e-3);
}

TEST(Wave, BackwardRecoversForward) {
  auto g = line(200, 1.0);
  Sigma s = Sigma::constant(*g, 1.0);
  Spatial phi = sample_spatial(*g, [](const Point& x) { return std::sin(pi * x[0]) + 0.3 * std::sin(3 * pi * x[0]); });
  Field u = solve_linear(g, s, {.phi = &phi});
  FinalState fs = final_state(u, s, nullptr, nullptr);
  Field v = solve_backward(g, s, nullptr, nullptr, fs.u, fs.ut);
  Field d = u - v;
  EXPECT_LT(l2_norm(d), 1e-3 * l2_norm(u));
  Field z = solve_backward(g, s, nullptr, nullptr, Spatial(g->num_nodes()), Spatial(g->num_nodes()));
  EXPECT_EQ(l2_norm(z), 0.0);
}

TEST(Wave, BackwardWithSourceMatchesReversedProblem) {
  auto g = line(100, 2.0);
  Sigma s = Sigma::constant(*g, 1.0);
  auto bump = [](const Point& x, double t) {
    const double r = (x[0] - 0.5) / 0.1, q = (t - 1.0) / 0.2;
    return (std::abs(r) < 1 && std::abs(q) < 1) ? std::pow((1 - r * r) * (1 - q * q), 3) : 0.0;
  };
  Field K = Field::sample(g, FieldKind::source, bump);
  Field v = solve_backward(g, s, nullptr, &K, Spatial(g->num_nodes()), Spatial(g->num_nodes()));
  Field Kr = Field::sample(g, FieldKind::source, [&](const Point& x, double t) { return bump(x, 2.0 - t); });
  Field w = solve_linear(g, s, {.source = &Kr});
  double err = 0.0;
  for (int n = 0; n < g->levels(); ++n) {
    for (std::size_t i = 0; i < g->num_nodes(); ++i) err = std::max(err, std::abs(v.at(n, i) - w.at(g->nt() - n, i)));
  }
  EXPECT_LT(err, 1e-14);
}

TEST(Wave, FluxOfEigenmode) {
  auto g = share(tag_gamma0(*line(200, 1.0), {-0.5, 0}));
  Spatial phi = sample_spatial(*g, [](const Point& x) { return std::sin(pi * x[0]); });
  Field u = solve_linear(g, Sigma::constant(*g, 1.0), {.phi = &phi});
  BoundaryTrace tr = neumann_trace(u, Sigma::constant(*g, 1.0), Subset::gamma0);
  ASSERT_EQ(tr.num_points(), 1u);
  double err = 0.0;
  for (int n = 0; n < g->levels(); ++n) err = std::max(err, std::abs(tr.at(n, 0) + pi * std::cos(pi * g->time(n))));
  EXPECT_LT(err, 2e-3);
}

TEST(Wave, FluxSignConvention) {
  auto g = share(tag_gamma0(*line(20, 0.5), {-0.5, 0}));
  Field u = Field::sample(g, FieldKind::solution, [](const Point& x, double) { return x[0]; });
  BoundaryTrace tr = neumann_trace(u, Sigma::constant(*g, 2.0), Subset::all);
  ASSERT_EQ(tr.num_points(), 2u);
  for (std::size_t p = 0; p < 2; ++p) {
    const double expect = g->coord(tr.points[p].node)[0] > 0.5 ? 2.0 : -2.0;
    EXPECT_NEAR(tr.at(3, p), expect, 1e-12);
  }
  Field z(g, FieldKind::solution);
  EXPECT_EQ(l2_norm(neumann_trace(z, Sigma::constant(*g, 1.0), Subset::gamma0)), 0.0);
}

TEST(Wave, EnergyClosedForm) {
  auto g = line(200, 3.0);
  Sigma s = Sigma::constant(*g, 1.0);
  Spatial phi = sample_spatial(*g, [](const Point& x) { return std::sin(pi * x[0]); });
  Field u = solve_linear(g, s, {.phi = &phi});
  const double e0 = energy(u, s, 0, false);
  double drift = 0.0, closed = 0.0;
  for (int n = 0; n < g->levels(); ++n) {
    drift = std::max(drift, std::abs(energy(u, s, n, false) - e0) / e0);
    const double t = g->time(n);
    const double ref = 0.25 * (pi * pi + std::cos(pi * t) * std::cos(pi * t));
    closed = std::max(closed, std::abs(energy(u, s, n) - ref) / ref);
  }
  EXPECT_LT(drift, 0.01);
  EXPECT_LT(closed, 0.01);
  Field u2 = 2.0 * u;
  EXPECT_NEAR(energy(u2, s, 17), 4.0 * energy(u, s, 17), 1e-12);
}

TEST(Wave, FiniteSpeed) {
  // Near the CFL limit the discrete cone matches the physical one.
  auto g = line(200, 0.3, 0.99);
  Spatial phi = sample_spatial(*g, [](const Point& x) {
    const double r = (x[0] - 0.5) / 0.1;
    return std::abs(r) < 1 ? std::pow(1 - r * r, 3) : 0.0;
  });
  Field u = solve_linear(g, Sigma::constant(*g, 1.0), {.phi = &phi});
  const double dx = g->spacing(0);
  for (int n = 0; n < g->levels(); ++n) {
    for (std::size_t i = 0; i < g->num_nodes(); ++i) {
      if (std::abs(g->coord(i)[0] - 0.5) >= 0.1 + g->time(n) + 2 * dx) EXPECT_LE(std::abs(u.at(n, i)), 1e-12);
    }
  }
}

TEST(Wave, Norms) {
  auto g = share(build_grid_1d({0, 1}, 200, 1.0, 400));
  Field one = Field::sample(g, FieldKind::source, [](const Point&, double) { return 1.0; });
  EXPECT_NEAR(l2_norm(one), 1.0, 1e-12);
  Spatial s = sample_spatial(*g, [](const Point& x) { return std::sin(pi * x[0]); });
  EXPECT_NEAR(l2_norm(*g, s), std::sqrt(0.5), 1e-4);
  EXPECT_NEAR(l2_norm(2.0 * one), 2.0, 1e-12);
  auto g2 = share(build_grid_2d({0, 1}, {0, 1}, 10, 10, 1.0, 40));
  Field one2 = Field::sample(g2, FieldKind::source, [](const Point&, double) { return 1.0; });
  EXPECT_NEAR(l2_norm(one2), 1.0, 1e-12);
  EXPECT_NEAR(l2_norm_window(one, 0.25, 0.75), std::sqrt(0.5), 1e-12);
}

TEST(Wave, ComplexKindRestriction) {
  auto g = line(10, 0.5);
  EXPECT_THROW(ComplexField(g, FieldKind::potential), PreconditionError);
  EXPECT_NO_THROW(ComplexField(g, FieldKind::amplitude));
}

TEST(Io, WfldRoundTrip) {
  auto g = share(build_grid_2d({0, 1}, {0, 1}, 4, 5, 0.2, 8));
  Field f = Field::sample(g, FieldKind::solution, [](const Point& x, double t) { return x[0] + 10 * x[1] + t; });
  const auto path = std::filesystem::temp_directory_path() / "waveinv_roundtrip.wfld";
  write_field(path, f);
  WfldArray a = read_wfld(path);
  ASSERT_EQ(a.shape.size(), 3u);
  EXPECT_EQ(a.shape[0], 9u);
  EXPECT_EQ(a.shape[1], 6u);
  EXPECT_EQ(a.shape[2], 5u);
  EXPECT_FALSE(a.complex);
  EXPECT_EQ(a.data, f.values());
  ComplexField c(g, FieldKind::amplitude);
  c.at(1, 2) = {1.5, -2.0};
  write_field(path, c);
  WfldArray b = read_wfld(path);
  EXPECT_TRUE(b.complex);
  EXPECT_EQ(b.data[2 * (30 + 2) + 1], -2.0);
  std::filesystem::remove(path);
}
