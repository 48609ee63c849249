#include "waveinv/wave.hpp"

#include <algorithm>
#include <cmath>

namespace waveinv {

StiffnessOperator::StiffnessOperator(const Grid& grid, const Sigma& sigma)
    : grid_(&grid), interior_(&grid.interior_nodes()), dim_(grid.dim()) {
  const std::size_t N = grid.num_nodes();
  for (int a = 0; a < dim_; ++a) {
    if (sigma.axis[a].size() != N) throw PreconditionError("sigma does not match the grid");
  }
  for (int a = 0; a < dim_; ++a) {
    stride_[a] = grid.stride(a);
    const double h2 = grid.spacing(a) * grid.spacing(a);
    cp_[a].resize(interior_->size());
    cm_[a].resize(interior_->size());
    for (std::size_t k = 0; k < interior_->size(); ++k) {
      const std::size_t i = (*interior_)[k];
      cp_[a][k] = sigma.mid(a, i, i + stride_[a]) / h2;
      cm_[a][k] = sigma.mid(a, i - stride_[a], i) / h2;
    }
  }
  for (int a = 0; a < dim_; ++a) {
    double m = 0.0;
    for (std::size_t k = 0; k < cp_[a].size(); ++k) m = std::max({m, cp_[a][k], cm_[a][k]});
    coef_max_ += m;
  }
}

double StiffnessOperator::row(std::size_t k, const double* u) const {
  const std::size_t i = (*interior_)[k];
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const std::size_t st = stride_[a];
    s += cp_[a][k] * (u[i + st] - u[i]) - cm_[a][k] * (u[i] - u[i - st]);
  }
  return s;
}

void StiffnessOperator::apply(const double* u, double* out) const {
  for (std::size_t k = 0; k < interior_->size(); ++k) out[(*interior_)[k]] = row(k, u);
}

void StiffnessOperator::scatter_transpose(const double* lambda, double* out, double scale) const {
  for (std::size_t k = 0; k < interior_->size(); ++k) {
    const std::size_t i = (*interior_)[k];
    const double l = scale * lambda[i];
    if (l == 0.0) continue;
    for (int a = 0; a < dim_; ++a) {
      const std::size_t st = stride_[a];
      out[i + st] += cp_[a][k] * l;
      out[i] -= (cp_[a][k] + cm_[a][k]) * l;
      out[i - st] += cm_[a][k] * l;
    }
  }
}

double StiffnessOperator::stability_number(double dt) const {
  // Gershgorin bound on the spectral radius of -L, scaled so that leapfrog
  // is stable when the result is at most 1.
  return dt * dt * coef_max_;
}

void check_stability(const Grid& grid, const Sigma& sigma) {
  StiffnessOperator op(grid, sigma);
  const double s = op.stability_number(grid.dt());
  if (s > 1.0 + 1e-12) {
    throw PreconditionError("CFL violation: dt^2 * max(sigma) * sum(1/dx^2) = " + std::to_string(s) + " > 1");
  }
}

namespace {

void check_compatible(const Grid& g, const double* phi, const double* h) {
  const std::size_t nb = g.boundary_nodes().size();
  for (std::size_t b = 0; b < nb; ++b) {
    const double p = phi ? phi[g.boundary_nodes()[b]] : 0.0;
    const double hv = h ? h[b] : 0.0;
    if (std::abs(p - hv) > 1e-8) {
      throw PreconditionError("incompatible data: h(., 0) differs from phi on the boundary by " +
                              std::to_string(std::abs(p - hv)));
    }
  }
}

}  // namespace

void leapfrog(const Grid& g, const Sigma& sigma, const double* a, const double* K, const double* h,
              const double* phi, const double* psi, double* out) {
  StiffnessOperator op(g, sigma);
  if (op.stability_number(g.dt()) > 1.0 + 1e-12) check_stability(g, sigma);
  check_compatible(g, phi, h);
  const std::size_t N = g.num_nodes();
  const auto& interior = g.interior_nodes();
  const auto& bnodes = g.boundary_nodes();
  const std::size_t nb = bnodes.size();
  const double dt = g.dt(), dt2 = dt * dt;
  const int nt = g.nt();

  double* u0 = out;
  for (std::size_t k = 0; k < interior.size(); ++k) {
    const std::size_t i = interior[k];
    u0[i] = phi ? phi[i] : 0.0;
  }
  for (std::size_t b = 0; b < nb; ++b) u0[bnodes[b]] = h ? h[b] : 0.0;

  double* u1 = out + N;
  for (std::size_t k = 0; k < interior.size(); ++k) {
    const std::size_t i = interior[k];
    double acc = op.row(k, u0);
    if (a) acc -= a[i] * u0[i];
    if (K) acc += K[i];
    u1[i] = u0[i] + (psi ? dt * psi[i] : 0.0) + 0.5 * dt2 * acc;
  }
  for (std::size_t b = 0; b < nb; ++b) u1[bnodes[b]] = h ? h[nb + b] : 0.0;

  for (int n = 1; n < nt; ++n) {
    const double* um = out + (n - 1) * N;
    const double* uc = out + n * N;
    double* up = out + (n + 1) * N;
    const double* an = a ? a + n * N : nullptr;
    const double* Kn = K ? K + n * N : nullptr;
    for (std::size_t k = 0; k < interior.size(); ++k) {
      const std::size_t i = interior[k];
      double acc = op.row(k, uc);
      if (an) acc -= an[i] * uc[i];
      if (Kn) acc += Kn[i];
      up[i] = 2.0 * uc[i] - um[i] + dt2 * acc;
    }
    for (std::size_t b = 0; b < nb; ++b) up[bnodes[b]] = h ? h[(n + 1) * nb + b] : 0.0;
  }
}

namespace {

void check_field(const Field* f, const Grid& g, const char* what) {
  if (f && !f->grid().same_layout(g)) throw PreconditionError(std::string(what) + " lives on a different grid");
}

}  // namespace

Field solve_linear(const GridPtr& grid, const Sigma& sigma, const LinearData& d) {
  const Grid& g = *grid;
  check_field(d.potential, g, "potential");
  check_field(d.source, g, "source");
  std::vector<double> hB;
  if (d.dirichlet) {
    if (!d.dirichlet->grid->same_layout(g)) throw PreconditionError("Dirichlet data lives on a different grid");
    hB = expand_dirichlet(*d.dirichlet);
  }
  if (d.phi && d.phi->size() != g.num_nodes()) throw PreconditionError("phi does not match the grid");
  if (d.psi && d.psi->size() != g.num_nodes()) throw PreconditionError("psi does not match the grid");
  Field u(grid, FieldKind::solution);
  leapfrog(g, sigma, d.potential ? d.potential->data() : nullptr, d.source ? d.source->data() : nullptr,
           d.dirichlet ? hB.data() : nullptr, d.phi ? d.phi->data() : nullptr, d.psi ? d.psi->data() : nullptr,
           u.data());
  return u;
}

ComplexField solve_linear_complex(const GridPtr& grid, const Sigma& sigma, const Field* potential,
                                  const std::vector<std::complex<double>>& source) {
  const Grid& g = *grid;
  check_field(potential, g, "potential");
  const std::size_t M = static_cast<std::size_t>(g.levels()) * g.num_nodes();
  if (source.size() != M) throw PreconditionError("complex source does not match the grid");
  std::vector<double> re(M), im(M), ur(M), ui(M);
  for (std::size_t i = 0; i < M; ++i) {
    re[i] = source[i].real();
    im[i] = source[i].imag();
  }
  const double* a = potential ? potential->data() : nullptr;
  leapfrog(g, sigma, a, re.data(), nullptr, nullptr, nullptr, ur.data());
  leapfrog(g, sigma, a, im.data(), nullptr, nullptr, nullptr, ui.data());
  ComplexField out(grid, FieldKind::solution);
  for (std::size_t i = 0; i < M; ++i) out.values()[i] = {ur[i], ui[i]};
  return out;
}

Field solve_backward(const GridPtr& grid, const Sigma& sigma, const Field* potential, const Field* source,
                     const Spatial& v_T, const Spatial& vt_T) {
  const Grid& g = *grid;
  check_field(potential, g, "potential");
  check_field(source, g, "source");
  const std::size_t N = g.num_nodes();
  const int L = g.levels();
  if (v_T.size() != N || vt_T.size() != N) throw PreconditionError("terminal data does not match the grid");
  auto reverse = [&](const Field* f) {
    std::vector<double> r;
    if (!f) return r;
    r.resize(f->size());
    for (int n = 0; n < L; ++n) std::copy_n(f->data() + (L - 1 - n) * N, N, r.data() + n * N);
    return r;
  };
  const auto a = reverse(potential);
  const auto K = reverse(source);
  Spatial phi = v_T, psi(N);
  for (std::size_t i = 0; i < N; ++i) psi[i] = -vt_T[i];
  for (std::size_t b : g.boundary_nodes()) phi[b] = 0.0;
  std::vector<double> tmp(static_cast<std::size_t>(L) * N);
  leapfrog(g, sigma, a.empty() ? nullptr : a.data(), K.empty() ? nullptr : K.data(), nullptr, phi.data(), psi.data(),
           tmp.data());
  Field out(grid, FieldKind::solution);
  for (int n = 0; n < L; ++n) std::copy_n(tmp.data() + (L - 1 - n) * N, N, out.data() + n * N);
  return out;
}

LinearAdjoint solve_transpose(const Grid& g, const Sigma& sigma, const double* a, const std::vector<double>& seed) {
  StiffnessOperator op(g, sigma);
  const std::size_t N = g.num_nodes();
  const int nt = g.nt();
  const auto& interior = g.interior_nodes();
  const auto& bnodes = g.boundary_nodes();
  const std::size_t nb = bnodes.size();
  const double dt = g.dt(), dt2 = dt * dt;
  if (seed.size() != static_cast<std::size_t>(g.levels()) * N) throw PreconditionError("seed does not match the grid");

  LinearAdjoint out;
  out.source.assign(seed.size(), 0.0);
  out.boundary.assign(static_cast<std::size_t>(g.levels()) * nb, 0.0);
  out.phi.assign(N, 0.0);
  out.psi.assign(N, 0.0);

  std::vector<double> acc = seed;
  std::vector<double> lam(N, 0.0);
  for (int n = nt; n >= 2; --n) {
    double* cur = acc.data() + n * N;
    double* prev = acc.data() + (n - 1) * N;
    double* prev2 = acc.data() + (n - 2) * N;
    const double* am = a ? a + (n - 1) * N : nullptr;
    for (std::size_t i : interior) lam[i] = cur[i];
    for (std::size_t i : interior) {
      prev[i] += 2.0 * lam[i] - (am ? dt2 * am[i] * lam[i] : 0.0);
      prev2[i] -= lam[i];
      out.source[(n - 1) * N + i] = dt2 * lam[i];
    }
    op.scatter_transpose(lam.data(), prev, dt2);
    for (std::size_t b = 0; b < nb; ++b) out.boundary[n * nb + b] = cur[bnodes[b]];
  }
  if (nt >= 1) {
    double* cur = acc.data() + N;
    double* prev = acc.data();
    for (std::size_t i : interior) lam[i] = cur[i];
    for (std::size_t i : interior) {
      prev[i] += lam[i] - (a ? 0.5 * dt2 * a[i] * lam[i] : 0.0);
      out.psi[i] = dt * lam[i];
      out.source[i] = 0.5 * dt2 * lam[i];
    }
    op.scatter_transpose(lam.data(), prev, 0.5 * dt2);
    for (std::size_t b = 0; b < nb; ++b) out.boundary[nb + b] = cur[bnodes[b]];
  }
  for (std::size_t i : interior) out.phi[i] = acc[i];
  for (std::size_t b = 0; b < nb; ++b) out.boundary[b] = acc[bnodes[b]];
  return out;
}

FinalState final_state(const Field& u, const Sigma& sigma, const Field* potential, const Field* source) {
  const Grid& g = u.grid();
  StiffnessOperator op(g, sigma);
  const std::size_t N = g.num_nodes();
  const int nt = g.nt();
  const double dt = g.dt();
  FinalState s;
  s.u.assign(u.level(nt).begin(), u.level(nt).end());
  s.ut.assign(N, 0.0);
  const double* uN = u.data() + nt * N;
  const double* uM = u.data() + (nt - 1) * N;
  for (std::size_t i = 0; i < N; ++i) s.ut[i] = (uN[i] - uM[i]) / dt;
  const auto& interior = g.interior_nodes();
  for (std::size_t k = 0; k < interior.size(); ++k) {
    const std::size_t i = interior[k];
    double acc = op.row(k, uN);
    if (potential) acc -= potential->at(nt, i) * uN[i];
    if (source) acc += source->at(nt, i);
    s.ut[i] += 0.5 * dt * acc;
  }
  return s;
}

void final_state_transpose(const Grid& g, const Sigma& sigma, const double* a, const Spatial& wu, const Spatial& wv,
                           std::vector<double>& seed, std::vector<double>* source_grad) {
  StiffnessOperator op(g, sigma);
  const std::size_t N = g.num_nodes();
  const int nt = g.nt();
  const double dt = g.dt();
  double* sN = seed.data() + nt * N;
  double* sM = seed.data() + (nt - 1) * N;
  for (std::size_t i = 0; i < N; ++i) {
    sN[i] += wu[i] + wv[i] / dt;
    sM[i] -= wv[i] / dt;
  }
  std::vector<double> lam(N, 0.0);
  for (std::size_t i : g.interior_nodes()) lam[i] = wv[i];
  op.scatter_transpose(lam.data(), sN, 0.5 * dt);
  for (std::size_t i : g.interior_nodes()) {
    if (a) sN[i] -= 0.5 * dt * a[nt * N + i] * lam[i];
    if (source_grad) (*source_grad)[nt * N + i] += 0.5 * dt * lam[i];
  }
}

namespace {

// Coefficients of the one-sided flux stencil at a flux point.
struct FluxStencil {
  std::size_t node[3];
  double coef[3];
};

FluxStencil flux_stencil(const Grid& g, const Sigma& sigma, const BoundaryPoint& bp) {
  const int a = bp.edge / 2;
  const int side = bp.edge % 2;
  const std::size_t s = g.stride(a);
  const double h = g.spacing(a);
  const double sg = sigma.axis[a][bp.node];
  FluxStencil st{};
  if (side == 0) {
    st.node[0] = bp.node;
    st.node[1] = bp.node + s;
    st.node[2] = bp.node + 2 * s;
    st.coef[0] = 3.0 * sg / (2.0 * h);
    st.coef[1] = -4.0 * sg / (2.0 * h);
    st.coef[2] = 1.0 * sg / (2.0 * h);
  } else {
    st.node[0] = bp.node;
    st.node[1] = bp.node - s;
    st.node[2] = bp.node - 2 * s;
    st.coef[0] = 3.0 * sg / (2.0 * h);
    st.coef[1] = -4.0 * sg / (2.0 * h);
    st.coef[2] = 1.0 * sg / (2.0 * h);
  }
  return st;
}

}  // namespace

BoundaryTrace neumann_trace(const Field& u, const Sigma& sigma, Subset subset) {
  const Grid& g = u.grid();
  BoundaryTrace tr = BoundaryTrace::zeros(u.grid_ptr(), subset, Quantity::neumann_flux);
  const std::size_t N = g.num_nodes();
  std::vector<FluxStencil> st;
  st.reserve(tr.points.size());
  for (const auto& bp : tr.points) st.push_back(flux_stencil(g, sigma, bp));
  for (int n = 0; n < g.levels(); ++n) {
    const double* un = u.data() + n * N;
    for (std::size_t p = 0; p < st.size(); ++p) {
      const auto& s = st[p];
      tr.at(n, p) = s.coef[0] * un[s.node[0]] + s.coef[1] * un[s.node[1]] + s.coef[2] * un[s.node[2]];
    }
  }
  return tr;
}

void neumann_trace_transpose(const BoundaryTrace& w, const Sigma& sigma, std::vector<double>& seed) {
  const Grid& g = *w.grid;
  const std::size_t N = g.num_nodes();
  std::vector<FluxStencil> st;
  st.reserve(w.points.size());
  for (const auto& bp : w.points) st.push_back(flux_stencil(g, sigma, bp));
  for (int n = 0; n < g.levels(); ++n) {
    double* sn = seed.data() + n * N;
    for (std::size_t p = 0; p < st.size(); ++p) {
      const double v = w.at(n, p);
      for (int k = 0; k < 3; ++k) sn[st[p].node[k]] += st[p].coef[k] * v;
    }
  }
}

namespace {

double transverse_weight(const Grid& g, int a, std::size_t node) {
  if (g.dim() == 1) return 1.0;
  const int b = 1 - a;
  const int j = g.index(node)[b];
  return (j == 0 || j == g.cells(b)) ? 0.5 * g.spacing(b) : g.spacing(b);
}

template <class Fn>
void for_each_edge(const Grid& g, Fn&& fn) {
  for (int a = 0; a < g.dim(); ++a) {
    const std::size_t s = g.stride(a);
    for (std::size_t n = 0; n < g.num_nodes(); ++n) {
      if (g.index(n)[a] == g.cells(a)) continue;
      fn(a, n, n + s, transverse_weight(g, a, n) / g.spacing(a));
    }
  }
}

}  // namespace

double state_energy(const Grid& g, const Sigma& sigma, const Spatial& u, const Spatial& ut, bool include_mass) {
  double e = 0.0;
  for_each_edge(g, [&](int a, std::size_t i, std::size_t j, double w) {
    const double d = u[j] - u[i];
    e += sigma.mid(a, i, j) * d * d * w;
  });
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const double m = include_mass ? u[i] * u[i] : 0.0;
    e += g.node_weight(i) * (ut[i] * ut[i] + m);
  }
  return 0.5 * e;
}

void energy_gram(const Grid& g, const Sigma& sigma, const Spatial& u, Spatial& out, bool include_mass) {
  out.assign(g.num_nodes(), 0.0);
  for_each_edge(g, [&](int a, std::size_t i, std::size_t j, double w) {
    const double c = sigma.mid(a, i, j) * w * (u[j] - u[i]);
    out[j] += c;
    out[i] -= c;
  });
  if (include_mass) {
    for (std::size_t i = 0; i < g.num_nodes(); ++i) out[i] += g.node_weight(i) * u[i];
  }
}

double h1l2_norm(const Grid& g, const Sigma& sigma, const Spatial& u, const Spatial& ut) {
  return std::sqrt(2.0 * state_energy(g, sigma, u, ut, true));
}

double energy(const Field& u, const Sigma& sigma, int n, bool include_mass) {
  const Grid& g = u.grid();
  if (n < 0 || n > g.nt()) throw PreconditionError("time index outside the grid");
  const std::size_t N = g.num_nodes();
  const double dt = g.dt();
  const int nt = g.nt();
  Spatial un(u.level(n).begin(), u.level(n).end()), ut(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (n == 0) {
      ut[i] = nt >= 2 ? (-3.0 * u.at(0, i) + 4.0 * u.at(1, i) - u.at(2, i)) / (2.0 * dt) : (u.at(1, i) - u.at(0, i)) / dt;
    } else if (n == nt) {
      ut[i] = nt >= 2 ? (3.0 * u.at(nt, i) - 4.0 * u.at(nt - 1, i) + u.at(nt - 2, i)) / (2.0 * dt)
                      : (u.at(nt, i) - u.at(nt - 1, i)) / dt;
    } else {
      ut[i] = (u.at(n + 1, i) - u.at(n - 1, i)) / (2.0 * dt);
    }
  }
  return state_energy(g, sigma, un, ut, include_mass);
}

std::vector<double> window_weights(const Grid& g, double t1, double t2) {
  if (t1 > t2 || t1 < g.t_start() - 1e-12 || t2 > g.t_final() + 1e-9) {
    throw PreconditionError("window outside the time interval of the grid");
  }
  int first = static_cast<int>(std::ceil((t1 - g.t_start()) / g.dt() - 1e-9));
  int last = static_cast<int>(std::floor((t2 - g.t_start()) / g.dt() + 1e-9));
  first = std::max(first, 0);
  last = std::min(last, g.nt());
  std::vector<double> w(g.levels(), 0.0);
  if (last <= first) throw PreconditionError("empty time window");
  for (int n = first; n <= last; ++n) w[n] = (n == first || n == last) ? 0.5 * g.dt() : g.dt();
  return w;
}

namespace {

template <class F, class Sq>
double field_norm(const F& f, const std::vector<double>& tw, Sq&& sq) {
  const Grid& g = f.grid();
  const std::size_t N = g.num_nodes();
  double s = 0.0;
  for (int n = 0; n < g.levels(); ++n) {
    if (tw[n] == 0.0) continue;
    double ls = 0.0;
    for (std::size_t i = 0; i < N; ++i) ls += g.node_weight(i) * sq(f.at(n, i));
    s += tw[n] * ls;
  }
  return std::sqrt(s);
}

std::vector<double> full_weights(const Grid& g) {
  std::vector<double> w(g.levels());
  for (int n = 0; n < g.levels(); ++n) w[n] = g.time_weight(n);
  return w;
}

}  // namespace

double l2_norm(const Field& f) {
  return field_norm(f, full_weights(f.grid()), [](double v) { return v * v; });
}

double l2_norm(const ComplexField& f) {
  return field_norm(f, full_weights(f.grid()), [](std::complex<double> v) { return std::norm(v); });
}

double l2_norm_window(const Field& f, double t1, double t2) {
  return field_norm(f, window_weights(f.grid(), t1, t2), [](double v) { return v * v; });
}

double l2_norm_window(const ComplexField& f, double t1, double t2) {
  return field_norm(f, window_weights(f.grid(), t1, t2), [](std::complex<double> v) { return std::norm(v); });
}

double l2_norm(const BoundaryTrace& tr) {
  if (tr.points.empty()) throw PreconditionError("empty boundary region");
  const Grid& g = *tr.grid;
  double s = 0.0;
  for (int n = 0; n < g.levels(); ++n) {
    double ls = 0.0;
    for (std::size_t p = 0; p < tr.points.size(); ++p) ls += tr.points[p].weight * tr.at(n, p) * tr.at(n, p);
    s += g.time_weight(n) * ls;
  }
  return std::sqrt(s);
}

double l2_norm(const Grid& g, const Spatial& v) {
  return std::sqrt(inner(g, v, v));
}

double inner(const Grid& g, const Spatial& u, const Spatial& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) s += g.node_weight(i) * u[i] * v[i];
  return s;
}

double inner(const Field& f, const Field& h) {
  const Grid& g = f.grid();
  const std::size_t N = g.num_nodes();
  double s = 0.0;
  for (int n = 0; n < g.levels(); ++n) {
    double ls = 0.0;
    for (std::size_t i = 0; i < N; ++i) ls += g.node_weight(i) * f.at(n, i) * h.at(n, i);
    s += g.time_weight(n) * ls;
  }
  return s;
}

}  // namespace waveinv
