#pragma once

// Pipeline dispatch, run manifests, convergence studies and the worker pool
// used for batches of experiments.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "waveinv/config.hpp"

namespace waveinv {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_numerical = 2 };

using Summary = std::vector<std::pair<std::string, std::string>>;

struct RunOutcome {
  int exit_code = exit_ok;
  std::string stage;    // failing stage for numerical failures
  std::string message;  // error text
  Summary summary;      // scalar results, in pipeline order
  std::filesystem::path output;
};

/// Runs the configured pipeline into out_dir (cfg.output when empty) and writes
/// manifest.yaml there. Errors are mapped to exit codes, never thrown.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {});
/// Loads and runs a config file; unreadable or malformed configs give exit 1.
RunOutcome run_config_file(const std::filesystem::path& path, const std::filesystem::path& out_dir = {});

/// Lowercase hex SHA-256 of a file or a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

/// Writes manifest.yaml listing every other file under dir with its hash.
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunOutcome& outcome);

struct ConvergenceRow {
  int nx = 0;
  double dt = 0.0;
  double error = 0.0;
  std::optional<double> observed_order;
};

/// forward: levels are nx values, error is the max error against params.exact.
/// recover-initial: levels are nx values, error is the relative H1 x L2 error.
/// cgo: levels are tau values on grids with params.ppw points per wavelength,
/// error is the remainder L2 norm.
std::vector<ConvergenceRow> convergence_study(const ExperimentConfig& cfg, const std::vector<double>& levels);
void write_convergence_csv(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows);

struct ProbeDeltaResult {
  double delta = 0.0;
  double data_sup = 0.0;  // sup norm of the unscaled data
};

/// Largest scale of the configured initial data (and forward input) for which
/// the fixed-point solver converges.
ProbeDeltaResult probe_delta_config(const ExperimentConfig& cfg, double s_max = 1.0);

/// WAVEINV_WORKERS when set to a positive integer, otherwise the hardware concurrency.
int worker_count();

/// Calls fn(i) for i in [0, n) on `workers` threads; exceptions are rethrown after all finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

struct SuiteEntry {
  std::string name;
  RunOutcome outcome;
};

/// Runs every *.yaml file of dir (sorted by name) into out/<stem> on a worker pool.
std::vector<SuiteEntry> run_suite(const std::filesystem::path& dir, const std::filesystem::path& out, int workers);

}  // namespace waveinv
