#pragma once

// Experiment configuration: a strict YAML schema describing one pipeline run.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "waveinv/field.hpp"
#include "waveinv/grid.hpp"
#include "waveinv/nonlinearity.hpp"

namespace waveinv {

enum class Pipeline : std::uint8_t {
  forward,
  passive,
  active,
  stability,
  control,
  runge,
  cgo,
  linearize,
  recover_q,
  recover_taylor,
  recover_initial,
  simultaneous,
  nonuniqueness,
  suite,
};

std::string to_string(Pipeline p);
Pipeline pipeline_from_string(const std::string& s);

struct GridSpec {
  int dim = 1;
  Interval x{0.0, 1.0};
  Interval y{0.0, 1.0};
  int nx = 100;
  int ny = 0;  // 0 means nx
  double T = 1.0;
  int nt = 0;  // 0 means the CFL choice
  double cfl = 0.5;
  std::string gamma0 = "all";  // "all" or "x0"
  Point x0{-0.5, 0.5};
};

struct SigmaSpec {
  std::string x = "1";
  std::string y = "1";
};

struct NonlinearitySpec {
  std::string kind = "zero";  // zero linear cubic sine power taylor spliced
  double c = 1.0;
  int k = 2;
  std::vector<std::string> coefficients;  // taylor: c_1, c_2, ... as expressions in x, y, t
  std::optional<std::pair<double, double>> window;
  std::shared_ptr<NonlinearitySpec> before;
  std::shared_ptr<NonlinearitySpec> after;
  double at = 0.0;
};

struct ShapeSpec {
  std::string shape = "zero";  // zero eigenmode bump expression
  std::vector<int> mode{1};
  Point center{0.5, 0.5};
  double width = 0.25;
  double amplitude = 1.0;
  std::string expr;
};

using ParamValue = std::variant<double, std::string, std::vector<double>>;

/// Pipeline-specific parameters, type-checked against a per-pipeline schema when parsed.
class Params {
 public:
  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, ParamValue v) { values_[key] = std::move(v); }

 private:
  std::map<std::string, ParamValue> values_;
};

struct ExperimentConfig {
  Pipeline pipeline = Pipeline::forward;
  GridSpec grid;
  SigmaSpec sigma;
  NonlinearitySpec nonlinearity;
  ShapeSpec phi;
  ShapeSpec psi;
  Params params;
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
  std::string source;  // text the config was parsed from
  std::string origin;  // file name used in messages
};

/// Parses YAML text. Unknown keys, wrong types and unresolvable specs raise
/// ConfigError with "origin:line:column: message".
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Parameter keys accepted by a pipeline.
const std::vector<std::string>& pipeline_keys(Pipeline p);

GridPtr build_grid(const GridSpec& spec);
GridPtr build_grid(const GridSpec& spec, int nx);
Sigma build_sigma(const Grid& grid, const SigmaSpec& spec);
Nonlinearity build_nonlinearity(const NonlinearitySpec& spec);
Spatial build_shape(const Grid& grid, const ShapeSpec& spec);
/// k-th Taylor coefficient c_k of the spec when it has closed-form Taylor data.
std::optional<CoefFn> taylor_coefficient(const NonlinearitySpec& spec, int k);

}  // namespace waveinv
