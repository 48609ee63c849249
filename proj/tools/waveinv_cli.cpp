// waveinv: batch driver for experiment configs.
//
//   waveinv run <config> [--out DIR]
//   waveinv suite <dir> [--out DIR]
//   waveinv converge <config> --levels L1 L2 ... [--out FILE]
//   waveinv probe-delta <config> [--s-max S]
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.
// WAVEINV_WORKERS sets the worker count of `suite`.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "waveinv/acceptance.hpp"
#include "waveinv/error.hpp"
#include "waveinv/experiment.hpp"
#include "waveinv/io.hpp"

namespace fs = std::filesystem;
using namespace waveinv;

namespace {

int report(const RunOutcome& r, Pipeline p) {
  for (const auto& [k, v] : r.summary) {
    if (p == Pipeline::suite && k.rfind("criterion_", 0) == 0) {
      const int id = std::stoi(k.substr(10));
      std::printf("%s  %2d  %s\n", v.c_str(), id, criterion_title(id).c_str());
    } else {
      std::printf("%s: %s\n", k.c_str(), v.c_str());
    }
  }
  if (r.exit_code == exit_ok) {
    std::printf("status: ok\noutput: %s\n", r.output.string().c_str());
  } else if (r.exit_code == exit_numerical) {
    std::fprintf(stderr, "numerical failure in stage %s: %s\n", r.stage.c_str(), r.message.c_str());
  } else {
    std::fprintf(stderr, "error: %s\n", r.message.c_str());
  }
  return r.exit_code;
}

int cmd_run(const fs::path& config, const fs::path& out) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_config;
  }
  return report(run_experiment(cfg, out), cfg.pipeline);
}

int cmd_suite(const fs::path& dir, const fs::path& out) {
  std::vector<SuiteEntry> entries;
  try {
    entries = run_suite(dir, out, worker_count());
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_config;
  }
  int code = exit_ok, ok = 0;
  std::size_t width = 4;
  for (const auto& e : entries) width = std::max(width, e.name.size());
  for (const auto& e : entries) {
    const char* status = e.outcome.exit_code == exit_ok ? "ok" : e.outcome.exit_code == exit_config ? "config-error"
                                                                                                   : "numerical-failure";
    std::printf("%-*s  %s", static_cast<int>(width), e.name.c_str(), status);
    if (!e.outcome.message.empty()) std::printf("  (%s)", e.outcome.message.c_str());
    std::printf("\n");
    ok += e.outcome.exit_code == exit_ok ? 1 : 0;
    code = std::max(code, e.outcome.exit_code);
  }
  std::printf("%d/%zu experiments succeeded\n", ok, entries.size());
  return code;
}

int cmd_converge(const fs::path& config, const std::vector<double>& levels, fs::path out) {
  try {
    const ExperimentConfig cfg = load_config(config);
    const auto rows = convergence_study(cfg, levels);
    if (out.empty()) out = cfg.output / "convergence.csv";
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_convergence_csv(out, rows);
    std::printf("%8s  %12s  %14s  %14s\n", "nx", "dt", "error", "observed_order");
    for (const auto& r : rows) {
      std::printf("%8d  %12.6g  %14.6e  %14s\n", r.nx, r.dt, r.error,
                  r.observed_order ? fmt(*r.observed_order).c_str() : "-");
    }
    std::printf("table: %s\n", out.string().c_str());
    return exit_ok;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure in stage %s: %s\n", e.stage().empty() ? "converge" : e.stage().c_str(),
                 e.what());
    return exit_numerical;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_config;
  }
}

int cmd_probe(const fs::path& config, double s_max) {
  try {
    const ExperimentConfig cfg = load_config(config);
    const ProbeDeltaResult r = probe_delta_config(cfg, s_max);
    std::printf("scale: %s\ndata_sup: %s\ndelta: %s\n", fmt(r.delta).c_str(), fmt(r.data_sup).c_str(),
                fmt(r.delta * r.data_sup).c_str());
    return exit_ok;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure in stage %s: %s\n", e.stage().empty() ? "probe-delta" : e.stage().c_str(),
                 e.what());
    return exit_numerical;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_config;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semilinear wave inverse-problem experiments"};
  app.require_subcommand(1);

  fs::path config, dir, out;
  std::vector<double> levels;
  double s_max = 1.0;

  auto* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("config", config, "config file")->required();
  run->add_option("--out", out, "output directory (default: the config's output)");

  auto* suite = app.add_subcommand("suite", "run every config of a directory on a worker pool");
  suite->add_option("dir", dir, "directory of *.yaml configs")->required();
  suite->add_option("--out", out, "root of the per-experiment output directories")->default_val("suite_out");

  auto* converge = app.add_subcommand("converge", "refinement study with observed orders");
  converge->add_option("config", config, "config file")->required();
  converge->add_option("--levels", levels, "nx values (tau values for cgo)")->required();
  converge->add_option("--out", out, "CSV path (default: <output>/convergence.csv)");

  auto* probe = app.add_subcommand("probe-delta", "largest convergent data scale of the fixed-point solver");
  probe->add_option("config", config, "config file")->required();
  probe->add_option("--s-max", s_max, "largest scale tried")->default_val(1.0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_config;
  }

  if (*run) return cmd_run(config, out);
  if (*suite) return cmd_suite(dir, out);
  if (*converge) return cmd_converge(config, levels, out);
  return cmd_probe(config, s_max);
}
