#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>

#include "waveinv/field.hpp"
#include "waveinv/nonlinearity.hpp"
#include "waveinv/semilinear.hpp"
#include "waveinv/wave.hpp"

namespace waveinv {

/// A forward problem with unknown sources (phi, psi, f).
struct Scenario {
  GridPtr grid;
  Sigma sigma;
  Nonlinearity f;
  Spatial phi;
  Spatial psi;
  std::string label;
  SemilinearOptions solver{};
};

Scenario make_scenario(GridPtr grid, Sigma sigma, Nonlinearity f, Spatial phi = {}, Spatial psi = {},
                       std::string label = {});

enum class RecordKind : std::uint8_t { passive, active, full_io };

std::string to_string(RecordKind k);

struct MeasurementRecord {
  RecordKind kind = RecordKind::passive;
  std::string label;
  BoundaryTrace input;  // Dirichlet data
  BoundaryTrace flux;   // sigma grad u . nu on gamma0 (or all of the boundary for full_io)
  std::optional<FinalState> final_state;
  SolveReport report;
};

/// Flux on gamma0 with zero boundary input.
MeasurementRecord passive_dn(const Scenario& s);
/// Flux on gamma0 for Dirichlet data supported on gamma0.
MeasurementRecord active_dn(const Scenario& s, const BoundaryTrace& h);
/// Flux on the whole boundary and the final state (u(T), u_t(T)).
MeasurementRecord full_io_map(const Scenario& s, const BoundaryTrace& h);

struct RecordDistance {
  double flux_l2 = 0.0;
  std::optional<double> final_l2;
};

RecordDistance record_distance(const MeasurementRecord& a, const MeasurementRecord& b);

/// Directory with meta.yaml, flux.csv, input.csv and final_state.wfld (when present).
void write_record(const std::filesystem::path& dir, const MeasurementRecord& r);

/// Black-box access to a hidden scenario: answers measurement queries and
/// rejects boundary data larger than delta in the sup norm.
class MeasurementOracle {
 public:
  explicit MeasurementOracle(Scenario hidden, double delta = std::numeric_limits<double>::infinity());

  const GridPtr& grid() const { return hidden_.grid; }
  const Sigma& sigma() const { return hidden_.sigma; }
  double delta() const { return delta_; }
  int queries() const { return queries_; }

  MeasurementRecord passive() const;
  MeasurementRecord active(const BoundaryTrace& h) const;
  MeasurementRecord full_io(const BoundaryTrace& h) const;
  /// Sets the fixed-point tolerance used for subsequent queries.
  void set_solver_tolerance(double tol) { hidden_.solver.tol = tol; }
  double solver_tolerance() const { return hidden_.solver.tol; }

 private:
  void check(const BoundaryTrace& h) const;

  Scenario hidden_;
  double delta_;
  mutable int queries_ = 0;
};

}  // namespace waveinv
