#include "waveinv/semilinear.hpp"

#include <algorithm>
#include <cmath>

namespace waveinv {

namespace {

void check_finite(const Field& z) {
  for (double v : z.values()) {
    if (!std::isfinite(v)) throw NumericalError("non-finite value in the iterate", "semilinear");
  }
}

double max_abs(const Field& u) {
  double m = 0.0;
  for (double v : u.values()) m = std::max(m, std::abs(v));
  return m;
}

std::vector<Point> node_coords(const Grid& g) {
  std::vector<Point> c(g.num_nodes());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = g.coord(i);
  return c;
}

}  // namespace

Field quotient_potential(const Field& z, const Nonlinearity& f) {
  const Grid& g = z.grid();
  const auto xs = node_coords(g);
  Field a(z.grid_ptr(), FieldKind::potential);
  for (int n = 0; n < g.levels(); ++n) {
    const double t = g.time(n);
    for (std::size_t i = 0; i < xs.size(); ++i) a.at(n, i) = f.quotient(xs[i], t, z.at(n, i));
  }
  return a;
}

Field zero_state_source(const GridPtr& grid, const Nonlinearity& f) {
  const auto xs = node_coords(*grid);
  Field K(grid, FieldKind::source);
  for (int n = 0; n < grid->levels(); ++n) {
    const double t = grid->time(n);
    for (std::size_t i = 0; i < xs.size(); ++i) K.at(n, i) = -f.eval(xs[i], t, 0.0);
  }
  return K;
}

Field linearized_potential(const Field& u, const Nonlinearity& f) {
  const Grid& g = u.grid();
  const auto xs = node_coords(g);
  Field a(u.grid_ptr(), FieldKind::potential);
  for (int n = 0; n < g.levels(); ++n) {
    const double t = g.time(n);
    for (std::size_t i = 0; i < xs.size(); ++i) a.at(n, i) = f.deriv(xs[i], t, u.at(n, i));
  }
  return a;
}

Field picard_map(const Field& z, const Nonlinearity& f, const GridPtr& grid, const Sigma& sigma,
                 const SemilinearData& d) {
  check_finite(z);
  const Field a = quotient_potential(z, f);
  const Field K = zero_state_source(grid, f);
  return solve_linear(grid, sigma, {.potential = &a, .source = &K, .dirichlet = d.dirichlet, .phi = d.phi, .psi = d.psi});
}

SemilinearSolution solve_semilinear(const GridPtr& grid, const Sigma& sigma, const Nonlinearity& f,
                                    const SemilinearData& d, const SemilinearOptions& opt) {
  if (!(opt.tol > 0.0)) throw PreconditionError("tolerance must be positive");
  const Field K = zero_state_source(grid, f);
  SemilinearSolution out;
  out.u = solve_linear(grid, sigma, {.source = &K, .dirichlet = d.dirichlet, .phi = d.phi, .psi = d.psi});
  SolveReport& rep = out.report;
  for (int k = 1; k <= opt.max_iter; ++k) {
    const double amp = max_abs(out.u);
    rep.max_amplitude = std::max(rep.max_amplitude, amp);
    if (!(amp <= opt.blowup_cap)) {
      throw NumericalError("blow-up suspected: amplitude " + std::to_string(amp) + " exceeds cap", "semilinear");
    }
    Field next = picard_map(out.u, f, grid, sigma, d);
    Field diff = next - out.u;
    const double nn = l2_norm(next);
    const double change = nn > 0.0 ? l2_norm(diff) / nn : l2_norm(diff);
    rep.residual_history.push_back(change);
    rep.iterations = k;
    out.u = std::move(next);
    if (change < opt.tol) {
      rep.converged = true;
      rep.max_amplitude = std::max(rep.max_amplitude, max_abs(out.u));
      return out;
    }
  }
  rep.max_amplitude = std::max(rep.max_amplitude, max_abs(out.u));
  if (opt.throw_on_max_iter) {
    throw NumericalError("fixed point did not converge in " + std::to_string(opt.max_iter) +
                             " iterations (last change " + std::to_string(rep.residual_history.back()) + ")",
                         "semilinear");
  }
  return out;
}

Field solve_semilinear_direct(const GridPtr& grid, const Sigma& sigma, const Nonlinearity& f,
                              const SemilinearData& d, double blowup_cap) {
  const Grid& g = *grid;
  check_stability(g, sigma);
  StiffnessOperator op(g, sigma);
  const std::size_t N = g.num_nodes();
  const auto& interior = g.interior_nodes();
  const auto& bnodes = g.boundary_nodes();
  const std::size_t nb = bnodes.size();
  const double dt = g.dt(), dt2 = dt * dt;
  const auto xs = node_coords(g);
  std::vector<double> hB;
  if (d.dirichlet) hB = expand_dirichlet(*d.dirichlet);
  auto hval = [&](int n, std::size_t b) { return d.dirichlet ? hB[n * nb + b] : 0.0; };

  Field u(grid, FieldKind::solution);
  for (std::size_t i : interior) u.at(0, i) = d.phi ? (*d.phi)[i] : 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const double p = d.phi ? (*d.phi)[bnodes[b]] : 0.0;
    if (std::abs(p - hval(0, b)) > 1e-8) throw PreconditionError("incompatible data: h(., 0) differs from phi");
    u.at(0, bnodes[b]) = hval(0, b);
  }
  const double* u0 = u.data();
  for (std::size_t k = 0; k < interior.size(); ++k) {
    const std::size_t i = interior[k];
    const double acc = op.row(k, u0) - f.eval(xs[i], g.time(0), u0[i]);
    u.at(1, i) = u0[i] + (d.psi ? dt * (*d.psi)[i] : 0.0) + 0.5 * dt2 * acc;
  }
  for (std::size_t b = 0; b < nb; ++b) u.at(1, bnodes[b]) = hval(1, b);
  for (int n = 1; n < g.nt(); ++n) {
    const double* um = u.data() + (n - 1) * N;
    const double* uc = u.data() + n * N;
    double* up = u.data() + (n + 1) * N;
    const double t = g.time(n);
    for (std::size_t k = 0; k < interior.size(); ++k) {
      const std::size_t i = interior[k];
      const double acc = op.row(k, uc) - f.eval(xs[i], t, uc[i]);
      up[i] = 2.0 * uc[i] - um[i] + dt2 * acc;
      if (!(std::abs(up[i]) <= blowup_cap)) {
        throw NumericalError("blow-up suspected in the explicit solver", "semilinear");
      }
    }
    for (std::size_t b = 0; b < nb; ++b) up[bnodes[b]] = hval(n + 1, b);
  }
  return u;
}

double estimate_energy_bound(const GridPtr& grid, const Sigma& sigma, const Nonlinearity& f,
                             const SemilinearData& d, const SemilinearOptions& opt) {
  const auto sol = solve_semilinear(grid, sigma, f, d, opt);
  double hnorm = 0.0;
  for (int n = 0; n < grid->levels(); ++n) hnorm = std::max(hnorm, std::sqrt(2.0 * energy(sol.u, sigma, n)));
  return hnorm + l2_norm(neumann_trace(sol.u, sigma, Subset::all));
}

double probe_delta(const GridPtr& grid, const Sigma& sigma, const Nonlinearity& f, const SemilinearData& d,
                   double s_max, int bisections, const SemilinearOptions& opt) {
  BoundaryTrace h;
  Spatial phi, psi;
  auto converges = [&](double s) {
    SemilinearData sd;
    if (d.dirichlet) {
      h = s * BoundaryTrace(*d.dirichlet);
      sd.dirichlet = &h;
    }
    if (d.phi) {
      phi = *d.phi;
      for (auto& v : phi) v *= s;
      sd.phi = &phi;
    }
    if (d.psi) {
      psi = *d.psi;
      for (auto& v : psi) v *= s;
      sd.psi = &psi;
    }
    SemilinearOptions o = opt;
    o.throw_on_max_iter = false;
    try {
      return solve_semilinear(grid, sigma, f, sd, o).report.converged;
    } catch (const NumericalError&) {
      return false;
    }
  };
  double good = 0.0, bad = s_max;
  if (converges(s_max)) return s_max;
  double s = s_max;
  for (int k = 0; k < 40; ++k) {
    s *= 0.5;
    if (converges(s)) {
      good = s;
      break;
    }
    bad = s;
  }
  if (good == 0.0) return 0.0;
  for (int k = 0; k < bisections; ++k) {
    const double mid = 0.5 * (good + bad);
    (converges(mid) ? good : bad) = mid;
  }
  return good;
}

}  // namespace waveinv
