#include "waveinv/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "waveinv/expression.hpp"

namespace waveinv {

namespace {

enum class Kind { number, integer, text, list };

struct Key {
  const char* name;
  Kind kind;
};

const std::vector<Key> kRecovery = {
    {"directions", Kind::integer}, {"first_center", Kind::number}, {"last_center", Kind::number},
    {"t1", Kind::number},          {"t2", Kind::number},           {"spatial", Kind::integer},
    {"temporal", Kind::integer},   {"reg", Kind::number},          {"noise", Kind::number},
    {"reg_sweep", Kind::list},     {"tuples", Kind::integer},      {"delta", Kind::number},
    {"eps", Kind::number},         {"solver_tol", Kind::number},   {"max_gn", Kind::integer},
};

std::vector<Key> with(std::vector<Key> base, std::initializer_list<Key> extra) {
  base.insert(base.end(), extra);
  return base;
}

const std::vector<Key>& schema(Pipeline p) {
  static const std::map<Pipeline, std::vector<Key>> table = {
      {Pipeline::forward, {{"exact", Kind::text}, {"input", Kind::text}}},
      {Pipeline::passive, {}},
      {Pipeline::active, {{"input", Kind::text}}},
      {Pipeline::stability, {{"samples", Kind::integer}, {"modes", Kind::integer}, {"pairs", Kind::integer}}},
      {Pipeline::control, {{"penalty", Kind::number}, {"tol", Kind::number}, {"max_cg", Kind::integer}}},
      {Pipeline::runge, {{"target", Kind::text}, {"t1", Kind::number}, {"t2", Kind::number}, {"sizes", Kind::list}}},
      {Pipeline::cgo,
       {{"taus", Kind::list}, {"ppw", Kind::number}, {"t1", Kind::number}, {"t2", Kind::number}, {"q", Kind::text},
        {"sign", Kind::integer}, {"x0", Kind::list}}},
      {Pipeline::linearize,
       {{"directions", Kind::integer}, {"first_center", Kind::number}, {"last_center", Kind::number},
        {"order", Kind::integer}, {"eps", Kind::list}, {"scheme", Kind::text}, {"index", Kind::list}}},
      {Pipeline::recover_q, kRecovery},
      {Pipeline::recover_taylor, with(kRecovery, {{"order", Kind::integer}})},
      {Pipeline::recover_initial,
       {{"mode", Kind::text}, {"t_star", Kind::number}, {"eps", Kind::number}, {"reg", Kind::number},
        {"max_cg", Kind::integer}, {"cg_tol", Kind::number}, {"max_outer", Kind::integer},
        {"flux_tol", Kind::number}, {"max_loops", Kind::integer}}},
      {Pipeline::simultaneous,
       with(kRecovery, {{"max_order", Kind::integer}, {"initial_reg", Kind::number}, {"max_cg", Kind::integer}})},
      {Pipeline::nonuniqueness, {{"collar", Kind::number}}},
      {Pipeline::suite, {{"criteria", Kind::list}}},
  };
  return table.at(p);
}

const std::vector<std::pair<Pipeline, const char*>> kNames = {
    {Pipeline::forward, "forward"},
    {Pipeline::passive, "passive"},
    {Pipeline::active, "active"},
    {Pipeline::stability, "stability"},
    {Pipeline::control, "control"},
    {Pipeline::runge, "runge"},
    {Pipeline::cgo, "cgo"},
    {Pipeline::linearize, "linearize"},
    {Pipeline::recover_q, "recover-q"},
    {Pipeline::recover_taylor, "recover-taylor"},
    {Pipeline::recover_initial, "recover-initial"},
    {Pipeline::simultaneous, "simultaneous"},
    {Pipeline::nonuniqueness, "nonuniqueness"},
    {Pipeline::suite, "suite"},
};

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    const YAML::Mark m = n.Mark();
    std::ostringstream os;
    os << origin_;
    if (m.line >= 0) os << ":" << m.line + 1 << ":" << m.column + 1;
    os << ": " << msg;
    throw ConfigError(os.str());
  }

  void map(const YAML::Node& n, const std::string& where, const std::set<std::string>& allowed) const {
    if (!n.IsMap()) fail(n, where + " must be a mapping");
    for (const auto& kv : n) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
    }
  }

  double number(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a number");
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be a number");
    }
  }

  int integer(const YAML::Node& n, const std::string& what) const {
    const double v = number(n, what);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(n, what + " must be an integer");
    return static_cast<int>(v);
  }

  std::string text(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a string");
    return n.as<std::string>();
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list of numbers");
    std::vector<double> out;
    for (const auto& e : n) out.push_back(number(e, what));
    return out;
  }

  Interval interval(const YAML::Node& n, const std::string& what) const {
    const auto v = numbers(n, what);
    if (v.size() != 2 || !(v[1] > v[0])) fail(n, what + " must be [lo, hi] with lo < hi");
    return {v[0], v[1]};
  }

  Point point(const YAML::Node& n, const std::string& what) const {
    const auto v = numbers(n, what);
    if (v.empty() || v.size() > 2) fail(n, what + " must have one or two coordinates");
    return {v[0], v.size() > 1 ? v[1] : 0.0};
  }

  std::string expression(const YAML::Node& n, const std::string& what) const {
    const std::string s = text(n, what);
    try {
      Expression::parse(s);
    } catch (const ConfigError& e) {
      fail(n, what + ": " + e.what());
    }
    return s;
  }

  GridSpec grid(const YAML::Node& n) const {
    map(n, "grid", {"dim", "x", "y", "nx", "ny", "T", "nt", "cfl", "gamma0", "x0"});
    GridSpec g;
    if (n["dim"]) {
      g.dim = integer(n["dim"], "grid.dim");
      if (g.dim != 1 && g.dim != 2) fail(n["dim"], "grid.dim must be 1 or 2");
    }
    if (n["x"]) g.x = interval(n["x"], "grid.x");
    if (n["y"]) {
      if (g.dim == 1) fail(n["y"], "grid.y is only valid for dim 2");
      g.y = interval(n["y"], "grid.y");
    }
    if (n["nx"]) g.nx = integer(n["nx"], "grid.nx");
    if (n["ny"]) g.ny = integer(n["ny"], "grid.ny");
    if (!n["T"]) fail(n, "grid.T is required");
    g.T = number(n["T"], "grid.T");
    if (n["nt"]) g.nt = integer(n["nt"], "grid.nt");
    if (n["cfl"]) g.cfl = number(n["cfl"], "grid.cfl");
    if (n["gamma0"]) {
      g.gamma0 = text(n["gamma0"], "grid.gamma0");
      if (g.gamma0 != "all" && g.gamma0 != "x0") fail(n["gamma0"], "grid.gamma0 must be 'all' or 'x0'");
    }
    if (n["x0"]) g.x0 = point(n["x0"], "grid.x0");
    if (g.gamma0 == "x0" && !n["x0"]) fail(n, "grid.gamma0: x0 needs grid.x0");
    if (g.nx < 2 || g.ny < 0 || g.nt < 0 || !(g.T > 0) || !(g.cfl > 0)) fail(n, "grid sizes must be positive");
    return g;
  }

  SigmaSpec sigma(const YAML::Node& n) const {
    SigmaSpec s;
    if (n.IsScalar()) {
      s.x = s.y = expression(n, "sigma");
      return s;
    }
    map(n, "sigma", {"x", "y"});
    if (n["x"]) s.x = expression(n["x"], "sigma.x");
    s.y = n["y"] ? expression(n["y"], "sigma.y") : s.x;
    return s;
  }

  NonlinearitySpec nonlinearity(const YAML::Node& n) const {
    NonlinearitySpec f;
    if (n.IsScalar()) {
      f.kind = text(n, "nonlinearity");
    } else {
      map(n, "nonlinearity", {"kind", "c", "k", "coefficients", "window", "before", "after", "at"});
      if (!n["kind"]) fail(n, "nonlinearity.kind is required");
      f.kind = text(n["kind"], "nonlinearity.kind");
      if (n["c"]) f.c = number(n["c"], "nonlinearity.c");
      if (n["k"]) f.k = integer(n["k"], "nonlinearity.k");
      if (n["coefficients"]) {
        if (!n["coefficients"].IsSequence()) fail(n["coefficients"], "nonlinearity.coefficients must be a list");
        for (const auto& e : n["coefficients"]) f.coefficients.push_back(expression(e, "nonlinearity.coefficients"));
      }
      if (n["window"]) {
        const Interval w = interval(n["window"], "nonlinearity.window");
        f.window = std::make_pair(w.lo, w.hi);
      }
      if (n["before"]) f.before = std::make_shared<NonlinearitySpec>(nonlinearity(n["before"]));
      if (n["after"]) f.after = std::make_shared<NonlinearitySpec>(nonlinearity(n["after"]));
      if (n["at"]) f.at = number(n["at"], "nonlinearity.at");
    }
    static const std::set<std::string> kinds{"zero", "linear", "cubic", "sine", "power", "taylor", "spliced"};
    if (!kinds.count(f.kind)) fail(n, "unknown nonlinearity kind '" + f.kind + "'");
    if (f.kind == "spliced" && (!f.before || !f.after || !n["at"])) {
      fail(n, "spliced nonlinearity needs before, after and at");
    }
    if (f.kind != "spliced" && (f.before || f.after)) fail(n, "before/after are only valid for kind spliced");
    if (f.kind == "taylor" && f.coefficients.empty()) fail(n, "taylor nonlinearity needs coefficients");
    if (f.kind == "power" && f.k < 1) fail(n, "nonlinearity.k must be >= 1");
    return f;
  }

  ShapeSpec shape(const YAML::Node& n, const std::string& where) const {
    ShapeSpec s;
    if (n.IsScalar()) {
      s.shape = text(n, where);
      if (s.shape != "zero") fail(n, where + ": only 'zero' may be given without parameters");
      return s;
    }
    map(n, where, {"shape", "mode", "center", "width", "amplitude", "expr"});
    if (!n["shape"]) fail(n, where + ".shape is required");
    s.shape = text(n["shape"], where + ".shape");
    if (n["mode"]) {
      s.mode.clear();
      for (double v : numbers(n["mode"], where + ".mode")) {
        if (v < 1 || v != std::floor(v)) fail(n["mode"], where + ".mode entries must be positive integers");
        s.mode.push_back(static_cast<int>(v));
      }
    }
    if (n["center"]) s.center = point(n["center"], where + ".center");
    if (n["width"]) s.width = number(n["width"], where + ".width");
    if (n["amplitude"]) s.amplitude = number(n["amplitude"], where + ".amplitude");
    if (n["expr"]) s.expr = expression(n["expr"], where + ".expr");
    if (s.shape == "expression" && s.expr.empty()) fail(n, where + ": expression shape needs expr");
    if (s.shape != "zero" && s.shape != "eigenmode" && s.shape != "bump" && s.shape != "expression") {
      fail(n["shape"], "unknown shape '" + s.shape + "'");
    }
    if (s.shape == "bump" && !(s.width > 0)) fail(n, where + ".width must be positive");
    return s;
  }

  Params params(const YAML::Node& n, Pipeline p) const {
    Params out;
    if (!n) return out;
    const auto& keys = schema(p);
    std::set<std::string> allowed;
    for (const auto& k : keys) allowed.insert(k.name);
    map(n, "params of pipeline " + to_string(p), allowed);
    for (const auto& k : keys) {
      const YAML::Node v = n[k.name];
      if (!v) continue;
      const std::string what = std::string("params.") + k.name;
      switch (k.kind) {
        case Kind::number: out.set(k.name, number(v, what)); break;
        case Kind::integer: out.set(k.name, static_cast<double>(integer(v, what))); break;
        case Kind::text: out.set(k.name, text(v, what)); break;
        case Kind::list: out.set(k.name, numbers(v, what)); break;
      }
    }
    return out;
  }

 private:
  std::string origin_;
};

Expression parsed(const std::string& s) { return Expression::parse(s); }

}  // namespace

std::string to_string(Pipeline p) {
  for (const auto& [k, v] : kNames) {
    if (k == p) return v;
  }
  return "?";
}

Pipeline pipeline_from_string(const std::string& s) {
  for (const auto& [k, v] : kNames) {
    if (s == v) return k;
  }
  throw ConfigError("unknown pipeline '" + s + "'");
}

const std::vector<std::string>& pipeline_keys(Pipeline p) {
  static std::map<Pipeline, std::vector<std::string>> cache = [] {
    std::map<Pipeline, std::vector<std::string>> m;
    for (const auto& [k, v] : kNames) {
      auto& keys = m[k];
      for (const auto& key : schema(k)) keys.push_back(key.name);
    }
    return m;
  }();
  return cache.at(p);
}

double Params::number(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const double* v = std::get_if<double>(&it->second)) return *v;
  throw ConfigError("parameter '" + key + "' is not a number");
}

int Params::integer(const std::string& key, int fallback) const {
  return static_cast<int>(number(key, static_cast<double>(fallback)));
}

std::string Params::text(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
  throw ConfigError("parameter '" + key + "' is not a string");
}

std::vector<double> Params::list(const std::string& key, const std::vector<double>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  throw ConfigError("parameter '" + key + "' is not a list");
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  Reader rd(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                      ": " + e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError(origin + ": empty config");
  rd.map(root, "config", {"pipeline", "grid", "sigma", "nonlinearity", "initial", "params", "output", "seed"});

  ExperimentConfig c;
  c.source = text;
  c.origin = origin;
  if (!root["pipeline"]) rd.fail(root, "pipeline is required");
  try {
    c.pipeline = pipeline_from_string(rd.text(root["pipeline"], "pipeline"));
  } catch (const ConfigError& e) {
    rd.fail(root["pipeline"], e.what());
  }
  if (root["grid"]) {
    c.grid = rd.grid(root["grid"]);
  } else if (c.pipeline != Pipeline::suite) {
    rd.fail(root, "grid is required");
  }
  if (root["sigma"]) c.sigma = rd.sigma(root["sigma"]);
  if (root["nonlinearity"]) c.nonlinearity = rd.nonlinearity(root["nonlinearity"]);
  if (const YAML::Node init = root["initial"]) {
    rd.map(init, "initial", {"phi", "psi"});
    if (init["phi"]) c.phi = rd.shape(init["phi"], "initial.phi");
    if (init["psi"]) c.psi = rd.shape(init["psi"], "initial.psi");
  }
  c.params = rd.params(root["params"], c.pipeline);
  if (root["output"]) c.output = rd.text(root["output"], "output");
  if (root["seed"]) {
    const int s = rd.integer(root["seed"], "seed");
    if (s < 0) rd.fail(root["seed"], "seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot read config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

GridPtr build_grid(const GridSpec& spec) { return build_grid(spec, spec.nx); }

GridPtr build_grid(const GridSpec& spec, int nx) {
  const int ny = spec.ny > 0 ? spec.ny * nx / spec.nx : nx;
  Grid g;
  if (spec.dim == 1) {
    const double dx = spec.x.length() / nx;
    g = build_grid_1d(spec.x, nx, spec.T, spec.nt > 0 ? spec.nt : steps_for(spec.T, dx, spec.cfl), spec.cfl);
  } else {
    const double dmin = std::min(spec.x.length() / nx, spec.y.length() / ny);
    g = build_grid_2d(spec.x, spec.y, nx, ny, spec.T, spec.nt > 0 ? spec.nt : steps_for(spec.T, dmin, spec.cfl),
                      spec.cfl);
  }
  return share(spec.gamma0 == "all" ? g.with_all_gamma0() : tag_gamma0(g, spec.x0));
}

Sigma build_sigma(const Grid& grid, const SigmaSpec& spec) {
  const Expression ex = parsed(spec.x), ey = parsed(spec.y);
  return Sigma::from_function(grid, [&](const Point& p) { return Point{ex(p[0], p[1], 0.0), ey(p[0], p[1], 0.0)}; });
}

Nonlinearity build_nonlinearity(const NonlinearitySpec& spec) {
  namespace nl = nonlinearities;
  Nonlinearity f;
  if (spec.kind == "zero") {
    f = nl::zero();
  } else if (spec.kind == "linear") {
    f = nl::linear(spec.c);
  } else if (spec.kind == "cubic") {
    f = nl::cubic(spec.c);
  } else if (spec.kind == "sine") {
    f = nl::sine(spec.c);
  } else if (spec.kind == "power") {
    f = nl::power(spec.c, spec.k);
  } else if (spec.kind == "taylor") {
    std::vector<CoefFn> cs;
    for (const auto& s : spec.coefficients) {
      cs.push_back([e = parsed(s)](const Point& x, double t) { return e(x[0], x[1], t); });
    }
    f = nl::taylor(std::move(cs));
  } else if (spec.kind == "spliced") {
    f = spliced(build_nonlinearity(*spec.before), build_nonlinearity(*spec.after), spec.at);
  } else {
    throw ConfigError("unknown nonlinearity kind '" + spec.kind + "'");
  }
  if (spec.window) f = windowed(std::move(f), spec.window->first, spec.window->second);
  return f;
}

std::optional<CoefFn> taylor_coefficient(const NonlinearitySpec& spec, int k) {
  auto constant = [](double v) -> CoefFn { return [v](const Point&, double) { return v; }; };
  std::optional<CoefFn> c;
  if (spec.kind == "zero") {
    c = constant(0.0);
  } else if (spec.kind == "linear") {
    c = constant(k == 1 ? spec.c : 0.0);
  } else if (spec.kind == "cubic") {
    c = constant(k == 3 ? spec.c : 0.0);
  } else if (spec.kind == "power") {
    c = constant(k == spec.k ? spec.c : 0.0);
  } else if (spec.kind == "sine") {
    // c sin(s) = c (s - s^3/6 + s^5/120 - ...)
    double v = 0.0;
    if (k % 2 == 1) {
      double fact = 1.0;
      for (int j = 2; j <= k; ++j) fact *= j;
      v = ((k / 2) % 2 == 0 ? 1.0 : -1.0) * spec.c / fact;
    }
    c = constant(v);
  } else if (spec.kind == "taylor") {
    if (k > static_cast<int>(spec.coefficients.size())) {
      c = constant(0.0);
    } else {
      c = [e = parsed(spec.coefficients[k - 1])](const Point& x, double t) { return e(x[0], x[1], t); };
    }
  } else if (spec.kind == "spliced") {
    auto b = taylor_coefficient(*spec.before, k), a = taylor_coefficient(*spec.after, k);
    if (!b || !a) return std::nullopt;
    c = [b = *b, a = *a, at = spec.at](const Point& x, double t) { return t <= at ? b(x, t) : a(x, t); };
  }
  if (c && spec.window) {
    c = [f = *c, w = *spec.window](const Point& x, double t) {
      return t >= w.first - 1e-12 && t <= w.second + 1e-12 ? f(x, t) : 0.0;
    };
  }
  return c;
}

Spatial build_shape(const Grid& grid, const ShapeSpec& spec) {
  const int dim = grid.dim();
  if (spec.shape == "zero") return Spatial(grid.num_nodes(), 0.0);
  if (spec.shape == "eigenmode") {
    if (static_cast<int>(spec.mode.size()) != dim) {
      throw ConfigError("eigenmode needs one mode index per dimension");
    }
    return sample_spatial(grid, [&](const Point& x) {
      double v = spec.amplitude;
      for (int a = 0; a < dim; ++a) {
        const Interval& e = grid.extent(a);
        v *= std::sin(spec.mode[a] * std::numbers::pi * (x[a] - e.lo) / e.length());
      }
      return v;
    });
  }
  if (spec.shape == "bump") {
    return sample_spatial(grid, [&](const Point& x) {
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) r2 += std::pow((x[a] - spec.center[a]) / spec.width, 2);
      return r2 < 1.0 ? spec.amplitude * std::pow(1.0 - r2, 4) : 0.0;
    });
  }
  const Expression e = parsed(spec.expr);
  return sample_spatial(grid, [&](const Point& x) { return spec.amplitude * e(x[0], x[1], 0.0); });
}

}  // namespace waveinv
