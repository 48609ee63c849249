#include <gtest/gtest.h>

#include <cmath>

#include "waveinv/error.hpp"
#include "waveinv/grid.hpp"

using namespace waveinv;

TEST(Grid, SpacingFromDefinition) {
  Grid g = build_grid_1d({0, 1}, 100, 3.0, 600, 0.5);
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.01);
  EXPECT_DOUBLE_EQ(g.dt(), 0.005);
  EXPECT_NEAR(g.dt() / g.spacing(0), 0.5, 1e-12);
  EXPECT_EQ(g.num_nodes(), 101u);
  EXPECT_EQ(g.boundary_nodes().size(), 2u);
  EXPECT_NEAR(g.t_final(), 3.0, 1e-12);
}

TEST(Grid, RejectsCoarseAndBadInput) {
  EXPECT_THROW(build_grid_1d({0, 1}, 2, 1.0, 100, 0.5), PreconditionError);
  EXPECT_THROW(build_grid_1d({0, 1}, 10, 1.0, 2, 0.5), PreconditionError);
  EXPECT_THROW(build_grid_1d({1, 1}, 10, 1.0, 100, 0.5), PreconditionError);
  EXPECT_THROW(build_grid_1d({0, 1}, 100, 3.0, 100, 0.5), PreconditionError);
}

TEST(Grid, TwoDimensionalAtCflLimit) {
  const int nt = steps_for(4.0, 1.0 / 50, 0.5);
  Grid g = build_grid_2d({0, 1}, {0, 1}, 50, 50, 4.0, nt, 0.5);
  EXPECT_NEAR(g.dt(), 0.5 / 50, 1e-12);
  EXPECT_EQ(g.boundary_nodes().size(), 200u);
}

TEST(Grid, TagGammaZero1D) {
  Grid g = tag_gamma0(build_grid_1d({0, 1}, 10, 1.0, 20), {-0.5, 0.0});
  EXPECT_EQ(g.tag(10), BoundaryTag::gamma0);
  EXPECT_EQ(g.tag(0), BoundaryTag::complement);
  auto pts = g.flux_points(Subset::gamma0);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].node, 10u);
}

TEST(Grid, TagGammaZero2DPartition) {
  Grid g0 = build_grid_2d({0, 1}, {0, 1}, 10, 10, 1.0, 40);
  Grid g = tag_gamma0(g0, {-0.5, 0.5});
  std::size_t n_gamma = 0, n_comp = 0;
  for (std::size_t b : g.boundary_nodes()) {
    const Point x = g.coord(b);
    if (std::abs(x[0] - 1.0) < 1e-12) EXPECT_EQ(g.tag(b), BoundaryTag::gamma0);
    if (std::abs(x[0]) < 1e-12) EXPECT_EQ(g.tag(b), BoundaryTag::complement);
    (g.tag(b) == BoundaryTag::gamma0 ? n_gamma : n_comp)++;
  }
  EXPECT_EQ(n_gamma + n_comp, g.boundary_nodes().size());
  Grid again = tag_gamma0(g, {-0.5, 0.5});
  for (std::size_t b : g.boundary_nodes()) EXPECT_EQ(g.tag(b), again.tag(b));
  EXPECT_THROW(tag_gamma0(g0, {0.5, 0.5}), PreconditionError);
}

TEST(Grid, MinimalTime) {
  Grid g1 = build_grid_1d({0, 1}, 10, 1.0, 20);
  EXPECT_DOUBLE_EQ(minimal_time(g1, {-0.5, 0}), 3.0);
  Grid g2 = build_grid_2d({0, 1}, {0, 1}, 10, 10, 1.0, 40);
  EXPECT_NEAR(minimal_time(g2, {-0.5, 0.5}), 2.0 * std::sqrt(1.5 * 1.5 + 0.25), 1e-12);
  Grid bigger = build_grid_1d({0, 2}, 20, 1.0, 40);
  EXPECT_GE(minimal_time(bigger, {-0.5, 0}), minimal_time(g1, {-0.5, 0}));
}

TEST(Grid, ControlTime) {
  Grid g = build_grid_1d({0, 1}, 10, 1.0, 20);
  EXPECT_DOUBLE_EQ(control_time(g.with_all_gamma0()), 1.0);
  EXPECT_DOUBLE_EQ(control_time(tag_gamma0(g, {-0.5, 0})), 2.0);
}

TEST(Grid, ConditionHIdentity) {
  Grid g = build_grid_2d({0, 1}, {0, 1}, 50, 50, 1.0, 100);
  auto w = make_weight(g, {-0.5, 0.5});
  auto r1 = check_condition_H(Sigma::constant(g, 1.0), w, g);
  EXPECT_NEAR(r1.rho0_estimate, 4.0, 0.2);
  EXPECT_TRUE(r1.holds);
  auto r2 = check_condition_H(Sigma::constant(g, 2.0), w, g);
  EXPECT_NEAR(r2.rho0_estimate, 8.0, 0.4);
}

TEST(Grid, ConditionHRejectsIndefinite) {
  Grid g = build_grid_1d({0, 1}, 50, 1.0, 200);
  Sigma s = Sigma::constant(g, 1.0);
  s.axis[0][10] = -1.0;
  EXPECT_THROW(check_condition_H(s, make_weight(g, {-0.5, 0}), g), PreconditionError);
}

TEST(Grid, WeightNeedsOutsidePoint) {
  Grid g = build_grid_1d({0, 1}, 10, 1.0, 20);
  EXPECT_THROW(make_weight(g, {0.5, 0}), PreconditionError);
}
