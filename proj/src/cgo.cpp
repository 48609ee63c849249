#include "waveinv/cgo.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>

#include "waveinv/io.hpp"
#include "waveinv/wave.hpp"

namespace waveinv {

namespace {

using cd = std::complex<double>;

double smoothstep(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double smoothstep_d1(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 30.0 * x * x * (1.0 - x) * (1.0 - x);
}

double smoothstep_d2(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
}

double radius(const Point& x, const Point& x0, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += (x[a] - x0[a]) * (x[a] - x0[a]);
  return std::sqrt(s);
}

double angle(const Point& x, const Point& x0, int dim) {
  return dim == 2 ? std::atan2(x[1] - x0[1], x[0] - x0[0]) : 0.0;
}

double h_value(const CgoParams& p, double th) { return p.h_theta ? p.h_theta(th) : 1.0; }

double h_second(const CgoParams& p, double th) {
  if (!p.h_theta) return 0.0;
  const double e = 1e-4;
  return (p.h_theta(th + e) - 2.0 * p.h_theta(th) + p.h_theta(th - e)) / (e * e);
}

// F(s) = exp(-mu s / 2) chi(s)
double envelope(const CgoParams& p, double s) { return std::exp(-0.5 * p.mu * s) * p.chi(s); }

void check_params(const CgoParams& p) {
  if (!(std::abs(p.tau) > 1.0)) throw PreconditionError("|tau| must exceed 1");
  if (p.sign != 1 && p.sign != -1) throw PreconditionError("sign must be +1 or -1");
  if (!(p.mu > 0.0)) throw PreconditionError("mu must be positive");
  if (!(p.chi.hi > p.chi.lo) || !(p.chi.ramp > 0.0)) throw PreconditionError("invalid cutoff");
}

}  // namespace

double Cutoff::operator()(double s) const { return smoothstep((s - lo) / ramp) * smoothstep((hi - s) / ramp); }

double Cutoff::d1(double s) const {
  const double u = (s - lo) / ramp, v = (hi - s) / ramp;
  return (smoothstep_d1(u) * smoothstep(v) - smoothstep(u) * smoothstep_d1(v)) / ramp;
}

double Cutoff::d2(double s) const {
  const double u = (s - lo) / ramp, v = (hi - s) / ramp;
  return (smoothstep_d2(u) * smoothstep(v) - 2.0 * smoothstep_d1(u) * smoothstep_d1(v) +
          smoothstep(u) * smoothstep_d2(v)) /
         (ramp * ramp);
}

Cutoff covering_cutoff(const Grid& g, const Point& x0, double t1, double t2, double ramp) {
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const double r = radius(g.coord(i), x0, g.dim());
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  return {.lo = rmin + t1 - ramp - 1e-9, .hi = rmax + t2 + ramp + 1e-9, .ramp = ramp};
}

CgoParams default_cgo_params(const Grid& g, double tau, int sign, const Point& x0, double t1, double t2) {
  CgoParams p;
  p.tau = tau;
  p.sign = sign;
  p.x0 = x0;
  p.chi = covering_cutoff(g, x0, t1, t2);
  return p;
}

double phase(const Point& x, const Point& x0, int dim) { return radius(x, x0, dim); }

double amplitude(const Point& x, double t, const CgoParams& p, int dim) {
  const double r = radius(x, p.x0, dim);
  if (r < 1e-9) throw PreconditionError("amplitude evaluated at the base point");
  return envelope(p, r + t) * h_value(p, angle(x, p.x0, dim)) * std::pow(r, -0.5 * (dim - 1));
}

double amplitude_wave_operator(const Point& x, double t, const CgoParams& p, int dim) {
  if (dim == 1) return 0.0;
  const double r = radius(x, p.x0, dim);
  if (r < 1e-9) throw PreconditionError("amplitude evaluated at the base point");
  // a = F(r + t) A(r, theta) with A = h(theta) r^{-1/2}; the transport equation
  // cancels the F' terms, leaving a_tt - lap a = -F lap A.
  const double th = angle(x, p.x0, dim);
  const double lapA = std::pow(r, -2.5) * (0.25 * h_value(p, th) + h_second(p, th));
  return -envelope(p, r + t) * lapA;
}

double transport_residual(const Grid& g, const CgoParams& p, double t1, double t2) {
  const int dim = g.dim();
  const double hs = g.min_spacing(), ht = g.dt();
  double worst = 0.0;
  for (int n = 0; n < g.levels(); ++n) {
    const double t = g.time(n);
    if (t < t1 - 1e-12 || t > t2 + 1e-12) continue;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      const Point x = g.coord(i);
      const double r = radius(x, p.x0, dim);
      const double a = amplitude(x, t, p, dim);
      const double at = (amplitude(x, t + ht, p, dim) - amplitude(x, t - ht, p, dim)) / (2 * ht);
      double grad_dot = 0.0;
      for (int ax = 0; ax < dim; ++ax) {
        Point xp = x, xm = x;
        xp[ax] += hs;
        xm[ax] -= hs;
        const double da = (amplitude(xp, t, p, dim) - amplitude(xm, t, p, dim)) / (2 * hs);
        grad_dot += (x[ax] - p.x0[ax]) / r * da;
      }
      const double lap_eta = (dim - 1) / r;
      worst = std::max(worst, std::abs(2 * at - 2 * grad_dot - lap_eta * a));
    }
  }
  return worst;
}

Field restrict_levels(const Field& f, const GridPtr& window) {
  const Grid& g = f.grid();
  if (!g.same_space(*window) || std::abs(g.dt() - window->dt()) > 1e-14) {
    throw PreconditionError("window grid does not match the field");
  }
  const int first = static_cast<int>(std::lround((window->t_start() - g.t_start()) / g.dt()));
  if (first < 0 || first + window->nt() > g.nt()) throw PreconditionError("window outside the field");
  const std::size_t N = g.num_nodes();
  std::vector<double> v(f.values().begin() + first * N, f.values().begin() + (first + window->levels()) * N);
  return Field(window, f.kind(), std::move(v));
}

CgoSolution build_cgo(const GridPtr& grid, const Field* q, const CgoParams& params, double t1, double t2) {
  check_params(params);
  const Grid& g = *grid;
  if (g.is_outside(params.x0) == false) throw PreconditionError("x0 must lie outside the closed domain");
  double hmax = 0.0;
  for (int a = 0; a < g.dim(); ++a) hmax = std::max(hmax, g.spacing(a));
  if (hmax * std::abs(params.tau) > 2 * std::numbers::pi / 10 + 1e-12) {
    throw PreconditionError("grid does not resolve the oscillation: need dx * tau <= 2 pi / 10");
  }
  const int first = g.level_of(t1), last = g.level_of(t2);
  GridPtr wg = share(g.time_window(first, last));
  const Grid& w = *wg;
  std::optional<Field> qw;
  if (q) qw = restrict_levels(*q, wg);

  CgoSolution s;
  s.params = params;
  s.principal = ComplexField(wg, FieldKind::solution);
  const std::size_t N = w.num_nodes();
  std::vector<cd> src(static_cast<std::size_t>(w.levels()) * N, cd{});
  const double st = params.sign * params.tau;
  for (int n = 0; n < w.levels(); ++n) {
    const double t = w.time(n);
    for (std::size_t i = 0; i < N; ++i) {
      const Point x = w.coord(i);
      const cd e = std::exp(cd(0.0, st * (phase(x, params.x0, w.dim()) + t)));
      const double a = amplitude(x, t, params, w.dim());
      s.principal.at(n, i) = a * e;
      if (w.is_boundary(i)) continue;
      const double qa = qw ? qw->at(n, i) * a : 0.0;
      src[n * N + i] = -e * (amplitude_wave_operator(x, t, params, w.dim()) + qa);
    }
  }
  s.remainder = solve_linear_complex(wg, Sigma::constant(w, 1.0), qw ? &*qw : nullptr, src);
  s.remainder_l2 = l2_norm(s.remainder);
  return s;
}

double cgo_residual(const CgoSolution& s, const Field* q_window) {
  const ComplexField v = s.total();
  const Grid& g = v.grid();
  const std::size_t N = g.num_nodes();
  StiffnessOperator op(g, Sigma::constant(g, 1.0));
  const double dt2 = g.dt() * g.dt();
  std::vector<double> re(N), im(N);
  double worst = 0.0;
  for (int n = 1; n + 1 < g.levels(); ++n) {
    for (std::size_t i = 0; i < N; ++i) {
      re[i] = v.at(n, i).real();
      im[i] = v.at(n, i).imag();
    }
    const auto& interior = g.interior_nodes();
    for (std::size_t k = 0; k < interior.size(); ++k) {
      const std::size_t i = interior[k];
      const cd lap(op.row(k, re.data()), op.row(k, im.data()));
      cd r = (v.at(n + 1, i) - 2.0 * v.at(n, i) + v.at(n - 1, i)) / dt2 - lap;
      if (q_window) r += q_window->at(n, i) * v.at(n, i);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

GridPtr cgo_grid(const std::vector<Interval>& extents, double T, double tau, double ppw, double cfl) {
  std::vector<int> nx;
  double dmin = std::numeric_limits<double>::infinity();
  for (const auto& e : extents) {
    const int n = static_cast<int>(std::ceil(e.length() * std::abs(tau) * ppw / (2 * std::numbers::pi)));
    nx.push_back(n);
    dmin = std::min(dmin, e.length() / n);
  }
  return share(build_grid(extents, nx, T, steps_for(T, dmin, cfl), cfl));
}

DecayTable remainder_decay_table(const std::function<GridPtr(double)>& refine,
                                 const std::function<double(const Point&, double)>& q, const std::vector<double>& taus,
                                 const CgoParams& base, double t1, double t2) {
  DecayTable table;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (k > 0 && !(taus[k] > taus[k - 1])) throw PreconditionError("tau ladder must be increasing");
    GridPtr g = refine(taus[k]);
    Field qf = Field::sample(g, FieldKind::potential, q);
    CgoParams p = base;
    p.tau = taus[k];
    const CgoSolution s = build_cgo(g, &qf, p, t1, t2);
    double hmax = 0.0;
    for (int a = 0; a < g->dim(); ++a) hmax = std::max(hmax, g->spacing(a));
    table.rows.push_back({taus[k], s.remainder_l2, 2 * std::numbers::pi / (std::abs(taus[k]) * hmax)});
    if (k > 0 && table.rows[k].remainder_l2 > 1.05 * table.rows[k - 1].remainder_l2) table.decreasing = false;
  }
  return table;
}

void write_decay_csv(const std::filesystem::path& path, const DecayTable& t) {
  CsvWriter w(path);
  w.header({"tau", "remainder_l2", "points_per_wavelength"});
  for (const auto& r : t.rows) w.row({r.tau, r.remainder_l2, r.points_per_wavelength});
  w.close();
}

}  // namespace waveinv
