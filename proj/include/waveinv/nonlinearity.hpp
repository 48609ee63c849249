#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "waveinv/field.hpp"
#include "waveinv/grid.hpp"

namespace waveinv {

enum class GrowthClass : std::uint8_t { lipschitz, log_superlinear, polynomial };

std::string to_string(GrowthClass g);

struct NonlinearityMeta {
  std::optional<std::pair<double, double>> support_window;
  bool f_zero_is_zero = true;
  GrowthClass growth = GrowthClass::lipschitz;
};

using StateFn = std::function<double(const Point&, double t, double s)>;
using CoefFn = std::function<double(const Point&, double t)>;

/// f(x, t, s) with its s-derivative and, optionally, a finite Taylor series
/// f = sum_{k>=1} c_k(x, t) s^k (taylor[k-1] holds c_k).
struct Nonlinearity {
  std::string name;
  StateFn eval;
  StateFn deriv;
  std::vector<CoefFn> taylor;
  NonlinearityMeta meta;

  double operator()(const Point& x, double t, double s) const { return eval(x, t, s); }
  /// (f(s) - f(0)) / s, or f_s(0) when |s| <= 1e-12.
  double quotient(const Point& x, double t, double s) const;
};

namespace nonlinearities {

Nonlinearity zero();
/// c s
Nonlinearity linear(double c);
/// c s^3
Nonlinearity cubic(double c);
/// c sin(s)
Nonlinearity sine(double c);
/// c s^k
Nonlinearity power(double c, int k);
/// sum_k c_k(x, t) s^k
Nonlinearity taylor(std::vector<CoefFn> coeffs, GrowthClass growth = GrowthClass::polynomial);
/// q(x, t) s with q looked up at the nearest node and level of the field's grid.
Nonlinearity potential(std::shared_ptr<const Field> q);
/// F(x, t), independent of the state (looked up at the nearest node and level).
Nonlinearity state_independent(std::shared_ptr<const Field> F);

}  // namespace nonlinearities

/// f masked to zero outside [t1, t2].
Nonlinearity windowed(Nonlinearity f, double t1, double t2);
/// `before` for t <= t_split, `after` beyond.
Nonlinearity spliced(Nonlinearity before, Nonlinearity after, double t_split);
/// a * f
Nonlinearity scaled(Nonlinearity f, double a);

/// Samples the declared invariants on the grid (f(0)=0, window support,
/// Taylor agreement on |s| <= 1) and throws PreconditionError on violation.
void check_admissible(const Nonlinearity& f, const Grid& grid);

}  // namespace waveinv
