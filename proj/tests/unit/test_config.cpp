#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "waveinv/config.hpp"
#include "waveinv/experiment.hpp"

using namespace waveinv;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "cfg.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("waveinv_test_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kForward =
    "pipeline: forward\n"
    "seed: 4\n"
    "grid: {x: [0, 1], nx: 40, T: 1}\n"
    "nonlinearity: {kind: cubic, c: 1}\n"
    "initial: {phi: {shape: eigenmode, mode: [1], amplitude: 0.1}}\n";

}  // namespace

TEST(Config, ParsesFullSchema) {
  const auto c = parse_config(
      "pipeline: recover-q\n"
      "seed: 9\n"
      "grid: {dim: 2, x: [0, 2], y: [0, 1], nx: 20, ny: 10, T: 1.5, cfl: 0.4, gamma0: x0, x0: [-0.5, 0.5]}\n"
      "sigma: {x: \"1 + x\", y: \"2\"}\n"
      "nonlinearity: {kind: spliced, before: {kind: linear, c: 2}, after: cubic, at: 0.7}\n"
      "initial: {phi: {shape: bump, center: [1, 0.5], width: 0.3}, psi: zero}\n"
      "params: {t1: 0.5, t2: 1.0, reg_sweep: [1e-6, 1e-4], directions: 4}\n"
      "output: results/q\n");
  EXPECT_EQ(c.pipeline, Pipeline::recover_q);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.grid.dim, 2);
  EXPECT_DOUBLE_EQ(c.grid.x.hi, 2.0);
  EXPECT_EQ(c.grid.ny, 10);
  EXPECT_EQ(c.grid.gamma0, "x0");
  EXPECT_EQ(c.sigma.y, "2");
  EXPECT_EQ(c.nonlinearity.kind, "spliced");
  EXPECT_EQ(c.nonlinearity.after->kind, "cubic");
  EXPECT_EQ(c.phi.shape, "bump");
  EXPECT_EQ(c.params.integer("directions", 0), 4);
  EXPECT_EQ(c.params.list("reg_sweep", {}).size(), 2u);
  EXPECT_DOUBLE_EQ(c.params.number("noise", 0.25), 0.25);
  EXPECT_EQ(c.output, fs::path("results/q"));
}

TEST(Config, StrictKeysWithLocation) {
  EXPECT_EQ(error_of("pipeline: forward\ngrid: {x: [0, 1], nx: 10, T: 1}\ncolour: red\n"),
            "cfg.yaml:3:1: unknown key 'colour' in config");
  EXPECT_EQ(error_of("pipeline: forward\ngrid:\n  nx: 10\n  T: 1\n  spacing: 2\n"),
            "cfg.yaml:5:3: unknown key 'spacing' in grid");
  // parameters of another pipeline are unknown keys too
  EXPECT_NE(error_of("pipeline: forward\ngrid: {T: 1}\nparams: {collar: 0.2}\n").find("unknown key 'collar'"),
            std::string::npos);
  EXPECT_NE(error_of("pipeline: forward\ngrid: {T: 1}\ninitial: {phi: {shape: bump, radius: 1}}\n").find("radius"),
            std::string::npos);
}

TEST(Config, RejectsBadValues) {
  EXPECT_NE(error_of("pipeline: sideways\ngrid: {T: 1}\n").find("unknown pipeline"), std::string::npos);
  EXPECT_NE(error_of("pipeline: forward\ngrid: {nx: 10}\n").find("grid.T is required"), std::string::npos);
  EXPECT_NE(error_of("pipeline: forward\ngrid: {nx: ten, T: 1}\n").find("cfg.yaml:2:"), std::string::npos);
  EXPECT_NE(error_of("pipeline: forward\ngrid: {nx: 10.5, T: 1}\n").find("integer"), std::string::npos);
  EXPECT_NE(error_of("pipeline: forward\ngrid: {x: [1, 0], T: 1}\n").find("lo < hi"), std::string::npos);
  EXPECT_NE(error_of("pipeline: forward\ngrid: {T: 1}\nsigma: \"1 + \"\n").find("sigma"), std::string::npos);
  EXPECT_NE(error_of("pipeline: forward\ngrid: {T: 1}\nnonlinearity: quartic\n").find("quartic"), std::string::npos);
  EXPECT_NE(error_of("pipeline: forward\ngrid: {T: 1}\nnonlinearity: {kind: spliced, before: linear}\n").find("spliced"),
            std::string::npos);
  EXPECT_NE(error_of("pipeline: forward\ngrid: {T: 1, gamma0: x0}\n").find("x0"), std::string::npos);
  EXPECT_NE(error_of("pipeline: forward\ngrid: {T: 1}\nseed: -3\n").find("seed"), std::string::npos);
  EXPECT_NE(error_of("pipeline: [forward\n").find("cfg.yaml:"), std::string::npos);
  EXPECT_NE(error_of("").find("empty"), std::string::npos);
}

TEST(Config, Builders) {
  auto c = parse_config("pipeline: forward\ngrid: {x: [0, 2], nx: 40, T: 1, gamma0: x0, x0: [-1]}\n"
                        "initial: {phi: {shape: eigenmode, mode: [2], amplitude: 3}}\n");
  const GridPtr g = build_grid(c.grid);
  EXPECT_EQ(g->cells(0), 40);
  EXPECT_EQ(g->tag(g->boundary_nodes().back()), BoundaryTag::gamma0);
  EXPECT_EQ(g->tag(g->boundary_nodes().front()), BoundaryTag::complement);
  const Spatial phi = build_shape(*g, c.phi);
  const std::size_t i = 5;
  EXPECT_NEAR(phi[i], 3.0 * std::sin(2 * pi * g->coord(i)[0] / 2.0), 1e-14);

  ShapeSpec b;
  b.shape = "bump";
  b.center = {1.0, 0.0};
  b.width = 0.5;
  const Spatial bv = build_shape(*g, b);
  EXPECT_DOUBLE_EQ(bv[20], 1.0);
  EXPECT_EQ(bv[0], 0.0);

  SigmaSpec s;
  s.x = "1 + x";
  EXPECT_NEAR(build_sigma(*g, s).axis[0][40], 3.0, 1e-14);
}

TEST(Config, TaylorCoefficients) {
  NonlinearitySpec f;
  f.kind = "sine";
  f.c = 2.0;
  EXPECT_DOUBLE_EQ((*taylor_coefficient(f, 1))({0, 0}, 0), 2.0);
  EXPECT_DOUBLE_EQ((*taylor_coefficient(f, 2))({0, 0}, 0), 0.0);
  EXPECT_DOUBLE_EQ((*taylor_coefficient(f, 3))({0, 0}, 0), -2.0 / 6.0);
  EXPECT_DOUBLE_EQ((*taylor_coefficient(f, 5))({0, 0}, 0), 2.0 / 120.0);
  f.kind = "taylor";
  f.coefficients = {"x", "1 + t"};
  f.window = std::make_pair(1.0, 2.0);
  EXPECT_DOUBLE_EQ((*taylor_coefficient(f, 2))({0.3, 0}, 1.5), 2.5);
  EXPECT_DOUBLE_EQ((*taylor_coefficient(f, 2))({0.3, 0}, 2.5), 0.0);
  // closed-form Taylor data agrees with the evaluator
  const Nonlinearity nf = build_nonlinearity(f);
  EXPECT_NEAR(nf({0.3, 0}, 1.5, 0.2), 0.3 * 0.2 + 2.5 * 0.04, 1e-14);
}

TEST(Config, PipelineNamesRoundTrip) {
  for (const char* n : {"forward", "passive", "active", "stability", "control", "runge", "cgo", "linearize", "recover-q",
                        "recover-taylor", "recover-initial", "simultaneous", "nonuniqueness", "suite"}) {
    EXPECT_EQ(to_string(pipeline_from_string(n)), n);
  }
  EXPECT_FALSE(pipeline_keys(Pipeline::recover_taylor).empty());
  EXPECT_TRUE(pipeline_keys(Pipeline::passive).empty());
}

TEST(Experiment, Sha256KnownVector) {
  EXPECT_EQ(sha256_text("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Experiment, ParallelForCoversAndRethrows) {
  std::vector<std::atomic<int>> hits(37);
  parallel_for(hits.size(), 3, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(5, 2, [](std::size_t i) {
                 if (i == 3) throw NumericalError("boom");
               }),
               NumericalError);
}

TEST(Experiment, WorkerCountFromEnvironment) {
  setenv("WAVEINV_WORKERS", "3", 1);
  EXPECT_EQ(worker_count(), 3);
  setenv("WAVEINV_WORKERS", "zero", 1);
  EXPECT_GE(worker_count(), 1);
  unsetenv("WAVEINV_WORKERS");
}

TEST(Experiment, ForwardRunIsDeterministic) {
  const auto cfg = parse_config(kForward);
  const fs::path a = fresh_dir("fwd_a"), b = fresh_dir("fwd_b");
  const RunOutcome ra = run_experiment(cfg, a), rb = run_experiment(cfg, b);
  ASSERT_EQ(ra.exit_code, exit_ok) << ra.message;
  ASSERT_EQ(rb.exit_code, exit_ok);
  for (const char* f : {"energy.csv", "flux.csv", "residuals.csv", "u.wfld", "manifest.yaml"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const std::string manifest = slurp(a / "manifest.yaml");
  EXPECT_NE(manifest.find("status: ok"), std::string::npos);
  EXPECT_NE(manifest.find(sha256_file(a / "energy.csv")), std::string::npos);
  EXPECT_NE(manifest.find("seed: 4"), std::string::npos);
  // a rerun into the same directory replaces the earlier run
  EXPECT_EQ(run_experiment(cfg, a).exit_code, exit_ok);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, SeedControlsRandomDraws) {
  const std::string base =
      "pipeline: stability\ngrid: {x: [0, 1], nx: 30, T: 2.5}\nparams: {samples: 3, pairs: 2}\nseed: ";
  const fs::path a = fresh_dir("seed_a"), b = fresh_dir("seed_b"), c = fresh_dir("seed_c");
  ASSERT_EQ(run_experiment(parse_config(base + "1"), a).exit_code, exit_ok);
  ASSERT_EQ(run_experiment(parse_config(base + "1"), b).exit_code, exit_ok);
  ASSERT_EQ(run_experiment(parse_config(base + "2"), c).exit_code, exit_ok);
  EXPECT_EQ(slurp(a / "observability.csv"), slurp(b / "observability.csv"));
  EXPECT_NE(slurp(a / "observability.csv"), slurp(c / "observability.csv"));
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST(Experiment, ExitCodes) {
  const fs::path d = fresh_dir("codes");
  auto blow = parse_config(
      "pipeline: forward\ngrid: {x: [0, 1], nx: 50, T: 3}\nnonlinearity: {kind: cubic, c: -1}\n"
      "initial: {phi: {shape: eigenmode, mode: [1], amplitude: 20}}\n");
  const RunOutcome r = run_experiment(blow, d);
  EXPECT_EQ(r.exit_code, exit_numerical);
  EXPECT_FALSE(r.stage.empty());
  EXPECT_NE(slurp(d / "manifest.yaml").find("numerical_failure"), std::string::npos);

  // resolvable only at run time: eigenmode needs one index per dimension
  auto bad = parse_config("pipeline: passive\ngrid: {x: [0, 1], nx: 20, T: 1}\n"
                          "initial: {phi: {shape: eigenmode, mode: [1, 2]}}\n");
  EXPECT_EQ(run_experiment(bad, d).exit_code, exit_config);

  EXPECT_EQ(run_config_file(d / "missing.yaml").exit_code, exit_config);
  fs::remove_all(d);
}

TEST(Experiment, RefusesForeignOutputDirectory) {
  const fs::path d = fresh_dir("foreign");
  fs::create_directories(d);
  std::ofstream(d / "notes.txt") << "keep";
  const RunOutcome r = run_experiment(parse_config(kForward), d);
  EXPECT_EQ(r.exit_code, exit_config);
  EXPECT_TRUE(fs::exists(d / "notes.txt"));
  fs::remove_all(d);
}

TEST(Convergence, ForwardOrderAndErrors) {
  const auto cfg = parse_config(
      "pipeline: forward\ngrid: {x: [0, 1], nx: 50, T: 1}\n"
      "initial: {phi: {shape: eigenmode, mode: [1]}}\nparams: {exact: \"sin(pi*x)*cos(pi*t)\"}\n");
  const auto rows = convergence_study(cfg, {25, 50, 100});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_FALSE(rows[0].observed_order.has_value());
  EXPECT_NEAR(*rows[2].observed_order, 2.0, 0.2);
  EXPECT_LT(rows[2].dt, rows[1].dt);
  EXPECT_THROW(convergence_study(cfg, {50}), PreconditionError);
  EXPECT_THROW(convergence_study(parse_config("pipeline: passive\ngrid: {T: 1}\n"), {10, 20}), ConfigError);
}

TEST(Convergence, CgoLadderDecreases) {
  const auto cfg = parse_config(
      "pipeline: cgo\ngrid: {x: [0, 1], T: 1.5}\n"
      "params: {ppw: 12, t1: 0.5, t2: 1.5, q: \"exp(-((x-0.5)/0.2)^2 - ((t-1)/0.25)^2)\"}\n");
  const auto rows = convergence_study(cfg, {8, 16, 32});
  EXPECT_LT(rows[1].error, rows[0].error);
  EXPECT_LT(rows[2].error, rows[1].error);
  EXPECT_GT(rows[2].nx, rows[0].nx);
}

TEST(ProbeDelta, FindsScale) {
  const auto cfg = parse_config(
      "pipeline: forward\ngrid: {x: [0, 1], nx: 50, T: 2}\nnonlinearity: {kind: cubic, c: 1}\n"
      "initial: {phi: {shape: eigenmode, mode: [1], amplitude: 4}}\n");
  const ProbeDeltaResult r = probe_delta_config(cfg);
  EXPECT_GT(r.delta, 0.0);
  EXPECT_LE(r.delta, 1.0);
  EXPECT_DOUBLE_EQ(r.data_sup, 4.0);
}
