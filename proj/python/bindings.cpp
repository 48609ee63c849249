#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <complex>
#include <cstring>

#include "waveinv/acceptance.hpp"
#include "waveinv/config.hpp"
#include "waveinv/error.hpp"
#include "waveinv/experiment.hpp"
#include "waveinv/io.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace waveinv;

namespace {

py::array to_numpy(const WfldArray& a) {
  std::vector<py::ssize_t> shape(a.shape.begin(), a.shape.end());
  if (a.complex) {
    py::array_t<std::complex<double>> out(shape);
    std::memcpy(out.mutable_data(), a.data.data(), a.data.size() * sizeof(double));
    return std::move(out);
  }
  py::array_t<double> out(shape);
  std::memcpy(out.mutable_data(), a.data.data(), a.data.size() * sizeof(double));
  return std::move(out);
}

py::dict summary_dict(const Summary& s) {
  py::dict d;
  for (const auto& [k, v] : s) d[py::str(k)] = v;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Forward solvers, measurements and inversion pipelines for semilinear wave equations.";
  m.attr("__version__") = "0.1.0";
  m.attr("num_criteria") = kCriteria;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<RunOutcome>(m, "RunOutcome")
      .def_readonly("exit_code", &RunOutcome::exit_code)
      .def_readonly("stage", &RunOutcome::stage)
      .def_readonly("message", &RunOutcome::message)
      .def_readonly("output", &RunOutcome::output)
      .def_property_readonly("summary", [](const RunOutcome& r) { return summary_dict(r.summary); })
      .def_property_readonly("ok", [](const RunOutcome& r) { return r.exit_code == exit_ok; })
      .def("__repr__", [](const RunOutcome& r) {
        return "<RunOutcome exit_code=" + std::to_string(r.exit_code) + " output='" + r.output.string() + "'>";
      });

  py::class_<CriterionResult>(m, "CriterionResult")
      .def_readonly("id", &CriterionResult::id)
      .def_readonly("title", &CriterionResult::title)
      .def_readonly("passed", &CriterionResult::pass)
      .def_readonly("detail", &CriterionResult::detail)
      .def("__str__", &format_result_line);

  m.def("run", &run_config_file, py::arg("config"), py::arg("out") = fs::path{},
        py::call_guard<py::gil_scoped_release>(),
        "Run a YAML config file. Failures are reported through exit_code, never raised.");

  m.def(
      "run_config",
      [](const std::string& text, const fs::path& out) {
        const ExperimentConfig cfg = parse_config(text, "<string>");
        py::gil_scoped_release release;
        return run_experiment(cfg, out);
      },
      py::arg("text"), py::arg("out") = fs::path{},
      "Run a config given as YAML text. Malformed text raises ConfigError.");

  m.def(
      "validate",
      [](const std::string& text) { return to_string(parse_config(text, "<string>").pipeline); },
      py::arg("text"), "Parse a config and return its pipeline name.");

  m.def(
      "pipeline_keys", [](const std::string& name) { return pipeline_keys(pipeline_from_string(name)); },
      py::arg("pipeline"));

  m.def(
      "converge",
      [](const fs::path& config, const std::vector<double>& levels) {
        const ExperimentConfig cfg = load_config(config);
        std::vector<ConvergenceRow> rows;
        {
          py::gil_scoped_release release;
          rows = convergence_study(cfg, levels);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["nx"] = r.nx;
          d["dt"] = r.dt;
          d["error"] = r.error;
          d["observed_order"] = r.observed_order ? py::cast(*r.observed_order) : py::none();
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("levels"));

  m.def(
      "probe_delta",
      [](const fs::path& config, double s_max) {
        const ExperimentConfig cfg = load_config(config);
        ProbeDeltaResult r;
        {
          py::gil_scoped_release release;
          r = probe_delta_config(cfg, s_max);
        }
        py::dict d;
        d["delta"] = r.delta;
        d["data_sup"] = r.data_sup;
        return d;
      },
      py::arg("config"), py::arg("s_max") = 1.0);

  m.def("criterion_title", &criterion_title, py::arg("id"));
  m.def("run_criterion", &run_criterion, py::arg("id"), py::arg("scratch"), py::arg("seed") = 1,
        py::call_guard<py::gil_scoped_release>());

  m.def("read_wfld", [](const fs::path& path) { return to_numpy(read_wfld(path)); }, py::arg("path"));
  m.def("sha256", &sha256_file, py::arg("path"));
}
