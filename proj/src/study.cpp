#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "waveinv/cgo.hpp"
#include "waveinv/expression.hpp"
#include "waveinv/experiment.hpp"
#include "waveinv/inversion.hpp"
#include "waveinv/io.hpp"
#include "waveinv/semilinear.hpp"

namespace waveinv {

namespace fs = std::filesystem;

namespace {

std::string digest(const void* data, std::size_t n) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, n, md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

double forward_error(const ExperimentConfig& cfg, const GridPtr& g) {
  const std::string exact = cfg.params.text("exact", "");
  if (exact.empty()) throw ConfigError("forward convergence needs params.exact");
  const Expression e = Expression::parse(exact);
  const Sigma s = build_sigma(*g, cfg.sigma);
  const Spatial phi = build_shape(*g, cfg.phi), psi = build_shape(*g, cfg.psi);
  BoundaryTrace h = BoundaryTrace::zeros(g, Subset::all, Quantity::dirichlet);
  if (cfg.params.has("input")) {
    const Expression in = Expression::parse(cfg.params.text("input", ""));
    h = BoundaryTrace::sample(g, Subset::all, [&](const Point& x, double t) { return in(x[0], x[1], t); });
  }
  const auto sol = solve_semilinear(g, s, build_nonlinearity(cfg.nonlinearity), {.dirichlet = &h, .phi = &phi, .psi = &psi});
  double err = 0.0;
  for (int n = 0; n < g->levels(); ++n) {
    for (std::size_t i = 0; i < g->num_nodes(); ++i) {
      const Point x = g->coord(i);
      err = std::max(err, std::abs(sol.u.at(n, i) - e(x[0], x[1], g->time(n))));
    }
  }
  return err;
}

double initial_error(const ExperimentConfig& cfg, const GridPtr& g) {
  Scenario s = make_scenario(g, build_sigma(*g, cfg.sigma), build_nonlinearity(cfg.nonlinearity),
                             build_shape(*g, cfg.phi), build_shape(*g, cfg.psi));
  s.solver.tol = 1e-13;
  s.solver.max_iter = 100;
  Scenario model = s;
  model.phi.assign(g->num_nodes(), 0.0);
  model.psi.assign(g->num_nodes(), 0.0);
  InitialRecoveryOptions opt;
  opt.reg = cfg.params.number("reg", opt.reg);
  opt.max_cg = cfg.params.integer("max_cg", opt.max_cg);
  const auto r = recover_initial_passive(passive_dn(s), model, opt, std::pair{s.phi, s.psi});
  return *r.rel_error;
}

}  // namespace

std::string sha256_text(const std::string& text) { return digest(text.data(), text.size()); }

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_text(ss.str());
}

std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& cfg, const std::vector<double>& levels) {
  if (levels.size() < 2) throw PreconditionError("a convergence study needs at least two refinement levels");
  std::vector<ConvergenceRow> rows;
  std::vector<double> h;
  for (double level : levels) {
    ConvergenceRow row;
    if (cfg.pipeline == Pipeline::cgo) {
      const double ppw = cfg.params.number("ppw", 12.0);
      const double t1 = cfg.params.number("t1", 0.5), t2 = cfg.params.number("t2", std::min(cfg.grid.T, 1.5));
      const auto x0v = cfg.params.list("x0", {-0.5, cfg.grid.dim == 2 ? 0.5 : 0.0});
      std::vector<Interval> ext{cfg.grid.x};
      if (cfg.grid.dim == 2) ext.push_back(cfg.grid.y);
      const Expression q = Expression::parse(cfg.params.text("q", "0"));
      const GridPtr g = cgo_grid(ext, cfg.grid.T, level, ppw, cfg.grid.cfl);
      const Field qf = Field::sample(g, FieldKind::potential, [&](const Point& x, double t) { return q(x[0], x[1], t); });
      const CgoParams p = default_cgo_params(*g, level, cfg.params.integer("sign", 1), {x0v[0], x0v[1]}, t1, t2);
      row.nx = g->cells(0);
      row.dt = g->dt();
      row.error = build_cgo(g, &qf, p, t1, t2).remainder_l2;
      h.push_back(1.0 / level);
    } else if (cfg.pipeline == Pipeline::forward || cfg.pipeline == Pipeline::recover_initial) {
      const int nx = static_cast<int>(level);
      if (nx != level || nx < 2) throw PreconditionError("refinement levels must be integer cell counts");
      GridSpec spec = cfg.grid;
      if (spec.nt > 0) spec.nt = spec.nt * nx / spec.nx;
      const GridPtr g = build_grid(spec, nx);
      row.nx = nx;
      row.dt = g->dt();
      row.error = cfg.pipeline == Pipeline::forward ? forward_error(cfg, g) : initial_error(cfg, g);
      h.push_back(g->spacing(0));
    } else {
      throw ConfigError("convergence studies support the forward, recover-initial and cgo pipelines");
    }
    if (!rows.empty() && row.error > 0.0 && rows.back().error > 0.0) {
      const std::size_t k = rows.size();
      row.observed_order = std::log(rows.back().error / row.error) / std::log(h[k - 1] / h[k]);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_convergence_csv(const fs::path& path, const std::vector<ConvergenceRow>& rows) {
  CsvWriter w(path);
  w.header({"nx", "dt", "error", "observed_order"});
  for (const auto& r : rows) {
    w.row({static_cast<double>(r.nx), r.dt, r.error, r.observed_order.value_or(std::nan(""))});
  }
}

ProbeDeltaResult probe_delta_config(const ExperimentConfig& cfg, double s_max) {
  const GridPtr g = build_grid(cfg.grid);
  const Sigma s = build_sigma(*g, cfg.sigma);
  const Spatial phi = build_shape(*g, cfg.phi), psi = build_shape(*g, cfg.psi);
  BoundaryTrace h = BoundaryTrace::zeros(g, Subset::all, Quantity::dirichlet);
  if (cfg.params.has("input")) {
    const Expression in = Expression::parse(cfg.params.text("input", ""));
    h = BoundaryTrace::sample(g, Subset::all, [&](const Point& x, double t) { return in(x[0], x[1], t); });
  }
  ProbeDeltaResult r;
  for (double v : phi) r.data_sup = std::max(r.data_sup, std::abs(v));
  for (double v : psi) r.data_sup = std::max(r.data_sup, std::abs(v));
  for (double v : h.values) r.data_sup = std::max(r.data_sup, std::abs(v));
  if (r.data_sup == 0.0) throw PreconditionError("probe-delta needs nonzero initial or boundary data");
  r.delta = probe_delta(g, s, build_nonlinearity(cfg.nonlinearity), {.dirichlet = &h, .phi = &phi, .psi = &psi}, s_max);
  return r;
}

int worker_count() {
  if (const char* env = std::getenv("WAVEINV_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 256L));
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t w = std::min<std::size_t>(std::max(1, workers), n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex m;
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!first) first = std::current_exception();
      }
    }
  };
  if (w <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < w; ++k) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
  }
  if (first) std::rethrow_exception(first);
}

std::vector<SuiteEntry> run_suite(const fs::path& dir, const fs::path& out, int workers) {
  if (!fs::is_directory(dir)) throw ConfigError(dir.string() + ": not a directory");
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && (e.path().extension() == ".yaml" || e.path().extension() == ".yml")) {
      configs.push_back(e.path());
    }
  }
  std::sort(configs.begin(), configs.end());
  std::vector<SuiteEntry> entries(configs.size());
  parallel_for(configs.size(), workers, [&](std::size_t i) {
    entries[i].name = configs[i].stem().string();
    entries[i].outcome = run_config_file(configs[i], out / configs[i].stem());
  });
  return entries;
}

}  // namespace waveinv
