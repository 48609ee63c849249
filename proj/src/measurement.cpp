#include "waveinv/measurement.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>

#include "waveinv/io.hpp"

namespace waveinv {

Scenario make_scenario(GridPtr grid, Sigma sigma, Nonlinearity f, Spatial phi, Spatial psi, std::string label) {
  Scenario s;
  if (phi.empty()) phi.assign(grid->num_nodes(), 0.0);
  if (psi.empty()) psi.assign(grid->num_nodes(), 0.0);
  s.grid = std::move(grid);
  s.sigma = std::move(sigma);
  s.f = std::move(f);
  s.phi = std::move(phi);
  s.psi = std::move(psi);
  s.label = std::move(label);
  return s;
}

std::string to_string(RecordKind k) {
  switch (k) {
    case RecordKind::passive: return "passive";
    case RecordKind::active: return "active";
    case RecordKind::full_io: return "full_io";
  }
  return "passive";
}

namespace {

void check_on_gamma0(const BoundaryTrace& h) {
  const Grid& g = *h.grid;
  for (std::size_t p = 0; p < h.points.size(); ++p) {
    if (g.in_subset(h.points[p].node, Subset::gamma0)) continue;
    for (int n = 0; n < g.levels(); ++n) {
      if (h.at(n, p) != 0.0) throw PreconditionError("boundary data is nonzero off gamma0");
    }
  }
}

MeasurementRecord measure(const Scenario& s, const BoundaryTrace& h, RecordKind kind) {
  if (h.quantity != Quantity::dirichlet) throw PreconditionError("boundary input must be Dirichlet data");
  if (!h.grid->same_layout(*s.grid)) throw PreconditionError("boundary input lives on a different grid");
  SemilinearData d{.dirichlet = &h, .phi = &s.phi, .psi = &s.psi};
  auto sol = solve_semilinear(s.grid, s.sigma, s.f, d, s.solver);
  MeasurementRecord r;
  r.kind = kind;
  r.label = s.label;
  r.input = h;
  r.flux = neumann_trace(sol.u, s.sigma, kind == RecordKind::full_io ? Subset::all : Subset::gamma0);
  if (kind == RecordKind::full_io) {
    const Field a = quotient_potential(sol.u, s.f);
    const Field K = zero_state_source(s.grid, s.f);
    r.final_state = final_state(sol.u, s.sigma, &a, &K);
  }
  r.report = std::move(sol.report);
  return r;
}

}  // namespace

MeasurementRecord passive_dn(const Scenario& s) {
  return measure(s, BoundaryTrace::zeros(s.grid, Subset::gamma0, Quantity::dirichlet), RecordKind::passive);
}

MeasurementRecord active_dn(const Scenario& s, const BoundaryTrace& h) {
  check_on_gamma0(h);
  return measure(s, h, RecordKind::active);
}

MeasurementRecord full_io_map(const Scenario& s, const BoundaryTrace& h) {
  return measure(s, h, RecordKind::full_io);
}

RecordDistance record_distance(const MeasurementRecord& a, const MeasurementRecord& b) {
  if (!a.flux.same_shape(b.flux)) throw PreconditionError("records live on different grids or boundary subsets");
  RecordDistance d;
  d.flux_l2 = l2_norm(a.flux - b.flux);
  if (a.final_state && b.final_state) {
    const Grid& g = *a.flux.grid;
    double s = 0.0;
    for (std::size_t i = 0; i < g.num_nodes(); ++i) {
      const double du = a.final_state->u[i] - b.final_state->u[i];
      const double dv = a.final_state->ut[i] - b.final_state->ut[i];
      s += g.node_weight(i) * (du * du + dv * dv);
    }
    d.final_l2 = std::sqrt(s);
  }
  return d;
}

void write_record(const std::filesystem::path& dir, const MeasurementRecord& r) {
  std::filesystem::create_directories(dir);
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "kind" << YAML::Value << to_string(r.kind);
  y << YAML::Key << "label" << YAML::Value << r.label;
  y << YAML::Key << "flux_subset" << YAML::Value << to_string(r.flux.subset);
  y << YAML::Key << "norms" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "input_l2" << YAML::Value << fmt(r.input.points.empty() ? 0.0 : l2_norm(r.input));
  y << YAML::Key << "flux_l2" << YAML::Value << fmt(l2_norm(r.flux));
  y << YAML::EndMap;
  y << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "converged" << YAML::Value << r.report.converged;
  y << YAML::Key << "iterations" << YAML::Value << r.report.iterations;
  y << YAML::Key << "max_amplitude" << YAML::Value << fmt(r.report.max_amplitude);
  y << YAML::EndMap;
  y << YAML::Key << "final_state" << YAML::Value << (r.final_state ? "final_state.wfld" : "none");
  y << YAML::EndMap;
  std::ofstream(dir / "meta.yaml") << y.c_str() << "\n";
  write_trace_csv(dir / "flux.csv", r.flux);
  if (!r.input.points.empty()) write_trace_csv(dir / "input.csv", r.input);
  if (r.final_state) write_state(dir / "final_state.wfld", *r.flux.grid, r.final_state->u, r.final_state->ut);
}

MeasurementOracle::MeasurementOracle(Scenario hidden, double delta) : hidden_(std::move(hidden)), delta_(delta) {}

void MeasurementOracle::check(const BoundaryTrace& h) const {
  for (double v : h.values) {
    if (std::abs(v) > delta_) {
      throw PreconditionError("boundary data exceeds the smallness threshold " + std::to_string(delta_));
    }
  }
}

MeasurementRecord MeasurementOracle::passive() const {
  ++queries_;
  return passive_dn(hidden_);
}

MeasurementRecord MeasurementOracle::active(const BoundaryTrace& h) const {
  check(h);
  ++queries_;
  return active_dn(hidden_, h);
}

MeasurementRecord MeasurementOracle::full_io(const BoundaryTrace& h) const {
  check(h);
  ++queries_;
  return full_io_map(hidden_, h);
}

}  // namespace waveinv
