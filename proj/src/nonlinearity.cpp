#include "waveinv/nonlinearity.hpp"

#include <algorithm>
#include <cmath>

#include "waveinv/error.hpp"

namespace waveinv {

std::string to_string(GrowthClass g) {
  switch (g) {
    case GrowthClass::lipschitz: return "lipschitz";
    case GrowthClass::log_superlinear: return "log_superlinear";
    case GrowthClass::polynomial: return "polynomial";
  }
  return "lipschitz";
}

double Nonlinearity::quotient(const Point& x, double t, double s) const {
  if (std::abs(s) <= 1e-12) return deriv(x, t, 0.0);
  return (eval(x, t, s) - eval(x, t, 0.0)) / s;
}

namespace nonlinearities {

Nonlinearity zero() {
  Nonlinearity f;
  f.name = "zero";
  f.eval = [](const Point&, double, double) { return 0.0; };
  f.deriv = f.eval;
  return f;
}

Nonlinearity linear(double c) {
  Nonlinearity f;
  f.name = "linear(" + std::to_string(c) + ")";
  f.eval = [c](const Point&, double, double s) { return c * s; };
  f.deriv = [c](const Point&, double, double) { return c; };
  f.taylor = {[c](const Point&, double) { return c; }};
  return f;
}

Nonlinearity power(double c, int k) {
  if (k < 1) throw PreconditionError("power nonlinearity needs k >= 1");
  Nonlinearity f;
  f.name = "power(" + std::to_string(c) + "," + std::to_string(k) + ")";
  f.eval = [c, k](const Point&, double, double s) { return c * std::pow(s, k); };
  f.deriv = [c, k](const Point&, double, double s) { return c * k * std::pow(s, k - 1); };
  f.taylor.assign(static_cast<std::size_t>(k), [](const Point&, double) { return 0.0; });
  f.taylor[k - 1] = [c](const Point&, double) { return c; };
  f.meta.growth = k == 1 ? GrowthClass::lipschitz : GrowthClass::polynomial;
  return f;
}

Nonlinearity cubic(double c) {
  Nonlinearity f = power(c, 3);
  f.name = "cubic(" + std::to_string(c) + ")";
  return f;
}

Nonlinearity sine(double c) {
  Nonlinearity f;
  f.name = "sine(" + std::to_string(c) + ")";
  f.eval = [c](const Point&, double, double s) { return c * std::sin(s); };
  f.deriv = [c](const Point&, double, double s) { return c * std::cos(s); };
  double fact = 1.0;
  for (int k = 1; k <= 15; ++k) {
    fact *= k;
    const double ck = (k % 2 == 0) ? 0.0 : ((k / 2) % 2 == 0 ? c / fact : -c / fact);
    f.taylor.push_back([ck](const Point&, double) { return ck; });
  }
  return f;
}

Nonlinearity taylor(std::vector<CoefFn> coeffs, GrowthClass growth) {
  Nonlinearity f;
  f.name = "taylor[" + std::to_string(coeffs.size()) + "]";
  auto c = std::make_shared<const std::vector<CoefFn>>(coeffs);
  f.eval = [c](const Point& x, double t, double s) {
    double v = 0.0;
    for (std::size_t k = c->size(); k-- > 0;) v = (v + (*c)[k](x, t)) * s;
    return v;
  };
  f.deriv = [c](const Point& x, double t, double s) {
    double v = 0.0;
    for (std::size_t k = c->size(); k-- > 0;) v = v * s + static_cast<double>(k + 1) * (*c)[k](x, t);
    return v;
  };
  f.taylor = std::move(coeffs);
  f.meta.growth = f.taylor.size() <= 1 ? GrowthClass::lipschitz : growth;
  return f;
}

namespace {

// Nearest node and level of (x, t) on the field's grid.
double lookup(const Field& F, const Point& x, double t) {
  const Grid& g = F.grid();
  int ij[2] = {0, 0};
  for (int a = 0; a < g.dim(); ++a) {
    const long i = std::lround((x[a] - g.extent(a).lo) / g.spacing(a));
    ij[a] = static_cast<int>(std::clamp<long>(i, 0, g.cells(a)));
  }
  const long n = std::lround((t - g.t_start()) / g.dt());
  return F.at(static_cast<int>(std::clamp<long>(n, 0, g.nt())), g.flat(ij[0], ij[1]));
}

}  // namespace

Nonlinearity potential(std::shared_ptr<const Field> q) {
  Nonlinearity f;
  f.name = "potential-field";
  f.eval = [q](const Point& x, double t, double s) { return lookup(*q, x, t) * s; };
  f.deriv = [q](const Point& x, double t, double) { return lookup(*q, x, t); };
  f.taylor = {[q](const Point& x, double t) { return lookup(*q, x, t); }};
  return f;
}

Nonlinearity state_independent(std::shared_ptr<const Field> F) {
  Nonlinearity f;
  f.name = "state-independent-field";
  f.eval = [F](const Point& x, double t, double) { return lookup(*F, x, t); };
  f.deriv = [](const Point&, double, double) { return 0.0; };
  f.meta.f_zero_is_zero = false;
  return f;
}

}  // namespace nonlinearities

Nonlinearity windowed(Nonlinearity f, double t1, double t2) {
  if (!(t2 > t1)) throw PreconditionError("empty support window");
  Nonlinearity w;
  w.name = f.name + "@[" + std::to_string(t1) + "," + std::to_string(t2) + "]";
  auto inside = [t1, t2](double t) { return t >= t1 - 1e-12 && t <= t2 + 1e-12; };
  w.eval = [e = f.eval, inside](const Point& x, double t, double s) { return inside(t) ? e(x, t, s) : 0.0; };
  w.deriv = [d = f.deriv, inside](const Point& x, double t, double s) { return inside(t) ? d(x, t, s) : 0.0; };
  for (auto& c : f.taylor) w.taylor.push_back([c, inside](const Point& x, double t) { return inside(t) ? c(x, t) : 0.0; });
  w.meta = f.meta;
  if (f.meta.support_window) {
    const auto [a, b] = *f.meta.support_window;
    w.meta.support_window = std::make_pair(std::max(a, t1), std::min(b, t2));
  } else {
    w.meta.support_window = std::make_pair(t1, t2);
  }
  return w;
}

Nonlinearity spliced(Nonlinearity before, Nonlinearity after, double t_split) {
  Nonlinearity s;
  s.name = before.name + "|" + std::to_string(t_split) + "|" + after.name;
  s.eval = [b = before.eval, a = after.eval, t_split](const Point& x, double t, double u) {
    return t <= t_split ? b(x, t, u) : a(x, t, u);
  };
  s.deriv = [b = before.deriv, a = after.deriv, t_split](const Point& x, double t, double u) {
    return t <= t_split ? b(x, t, u) : a(x, t, u);
  };
  const std::size_t K = std::max(before.taylor.size(), after.taylor.size());
  if (!before.taylor.empty() && !after.taylor.empty()) {
    for (std::size_t k = 0; k < K; ++k) {
      CoefFn cb = k < before.taylor.size() ? before.taylor[k] : CoefFn([](const Point&, double) { return 0.0; });
      CoefFn ca = k < after.taylor.size() ? after.taylor[k] : CoefFn([](const Point&, double) { return 0.0; });
      s.taylor.push_back([cb, ca, t_split](const Point& x, double t) { return t <= t_split ? cb(x, t) : ca(x, t); });
    }
  }
  s.meta.f_zero_is_zero = before.meta.f_zero_is_zero && after.meta.f_zero_is_zero;
  s.meta.growth = std::max(before.meta.growth, after.meta.growth);
  return s;
}

Nonlinearity scaled(Nonlinearity f, double a) {
  Nonlinearity s;
  s.name = std::to_string(a) + "*" + f.name;
  s.eval = [e = f.eval, a](const Point& x, double t, double u) { return a * e(x, t, u); };
  s.deriv = [d = f.deriv, a](const Point& x, double t, double u) { return a * d(x, t, u); };
  for (auto& c : f.taylor) s.taylor.push_back([c, a](const Point& x, double t) { return a * c(x, t); });
  s.meta = f.meta;
  return s;
}

void check_admissible(const Nonlinearity& f, const Grid& g) {
  const int stride_t = std::max(1, g.nt() / 16);
  const std::size_t stride_x = std::max<std::size_t>(1, g.num_nodes() / 16);
  const double probes[] = {-1.0, -0.5, -0.1, 0.1, 0.5, 1.0};
  for (int n = 0; n <= g.nt(); n += stride_t) {
    const double t = g.time(n);
    for (std::size_t i = 0; i < g.num_nodes(); i += stride_x) {
      const Point x = g.coord(i);
      if (f.meta.f_zero_is_zero && f.eval(x, t, 0.0) != 0.0) {
        throw PreconditionError(f.name + ": f(x, t, 0) is not zero");
      }
      if (f.meta.support_window) {
        const auto [t1, t2] = *f.meta.support_window;
        if (t < t1 - 1e-12 || t > t2 + 1e-12) {
          for (double s : probes) {
            if (f.eval(x, t, s) != 0.0) throw PreconditionError(f.name + ": nonzero outside its support window");
          }
        }
      }
      if (!f.taylor.empty()) {
        for (double s : probes) {
          double v = 0.0, d = 0.0;
          for (std::size_t k = f.taylor.size(); k-- > 0;) {
            const double c = f.taylor[k](x, t);
            v = (v + c) * s;
            d = d * s + static_cast<double>(k + 1) * c;
          }
          if (std::abs(v - f.eval(x, t, s)) > 1e-10 || std::abs(d - f.deriv(x, t, s)) > 1e-10) {
            throw PreconditionError(f.name + ": Taylor coefficients disagree with the evaluator");
          }
        }
      }
    }
  }
}

}  // namespace waveinv
