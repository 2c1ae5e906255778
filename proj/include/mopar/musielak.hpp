#pragma once

#include "mopar/mesh.hpp"
#include "mopar/quadrature.hpp"

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mopar {

enum class MusielakKind { power, variable_power, custom };

/// A generalized N-function phi(x, t): convex, non-decreasing and superlinear
/// in t for every x. Power kinds are coefficient * t^{p(x)} with the affine
/// exponent p(x) = p0 + p1 x1 + p2 x2.
class MusielakFunction {
public:
  using Map = std::function<double(const Point&, double)>;

  static MusielakFunction power(double exponent, double coefficient = 1.0);
  static MusielakFunction variable_power(std::array<double, 3> exponent, double coefficient = 1.0);
  /// deriv may be empty; conjugates then fall back to derivative-free search.
  static MusielakFunction custom(std::string name, Map value, Map deriv = {});

  [[nodiscard]] double operator()(const Point& x, double t) const { return value_(x, t); }
  [[nodiscard]] double derivative(const Point& x, double t) const { return deriv_(x, t); }
  [[nodiscard]] bool has_derivative() const noexcept { return static_cast<bool>(deriv_); }

  [[nodiscard]] MusielakKind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] double coefficient() const noexcept { return coefficient_; }
  [[nodiscard]] const std::array<double, 3>& exponent_coefficients() const noexcept { return exponent_; }
  /// p(x) for power kinds; NaN for custom functions.
  [[nodiscard]] double exponent_at(const Point& x) const;

private:
  MusielakFunction(MusielakKind kind, std::string name, Map value, Map deriv);

  MusielakKind kind_;
  std::string name_;
  Map value_;
  Map deriv_;
  std::array<double, 3> exponent_{0.0, 0.0, 0.0};
  double coefficient_ = 1.0;
};

// ---------------------------------------------------------------------------
// Modulars and norms of P1 fields given by their values at every mesh vertex.

/// rho(u) = sum over cells of the quadrature of phi(x, scale * |u(x)|). For
/// constant-exponent powers the cell integrals are exact and quad is unused.
/// Throws divergent_modular naming the first cell with a non-finite integrand.
double modular(const MusielakFunction& phi, const Mesh& mesh, std::span<const double> nodal,
               const QuadratureRule& quad, double scale = 1.0);

/// Same with |grad u| in place of |u|.
double gradient_modular(const MusielakFunction& phi, const Mesh& mesh,
                        std::span<const double> nodal, const QuadratureRule& quad,
                        double scale = 1.0);

/// inf{lambda > 0 : rho(u / lambda) <= 1} by bracketing and bisection to
/// relative width tol. Returns 0 for the zero field.
double luxemburg_norm(const MusielakFunction& phi, const Mesh& mesh,
                      std::span<const double> nodal, const QuadratureRule& quad,
                      double tol = 1e-10);

/// Twice the Luxemburg norm under the Young conjugate; bounds the Orlicz
/// (dual) norm from above.
double orlicz_dual_bound(const MusielakFunction& phi, const Mesh& mesh,
                         std::span<const double> nodal, const QuadratureRule& quad,
                         double tol = 1e-10);

// ---------------------------------------------------------------------------
// Young conjugate.

/// Maximizer t* >= 0 of s t - phi(x, t).
double conjugate_maximizer(const MusielakFunction& phi, const Point& x, double s);

/// sup_{t >= 0} (s t - phi(x, t)). Throws conjugate_infinite when the
/// objective keeps growing past t = 2^40 (phi not superlinear).
double young_conjugate(const MusielakFunction& phi, const Point& x, double s);

/// The s with conj(x, s) = y, found by bisection on the non-decreasing conjugate.
double conjugate_inverse(const MusielakFunction& phi, const Point& x, double y);

/// The conjugate packaged as a Musielak function (its derivative is the maximizer).
MusielakFunction conjugate_function(const MusielakFunction& phi);

/// phi(x, s) + conj(x, t) - s t; non-negative up to round-off.
double young_inequality_check(const MusielakFunction& phi, const Point& x, double s, double t);

// ---------------------------------------------------------------------------
// Sampled diagnostics. These flag, they do not prove.

struct Delta2Report {
  bool satisfied = false;
  double C_estimate = 0.0;       ///< sup of phi(x,2t) / (phi(x,t) + h), h = 1
  double top_decade_max = 0.0;   ///< sup ratio over t in [t_max/10, t_max]
  double prev_decade_max = 0.0;  ///< sup ratio over t in [t_max/100, t_max/10)
};

/// t = 2^k for k = k_min..k_max.
std::vector<double> dyadic_grid(int k_min, int k_max);

/// Doubling ratio phi(x,2t)/(phi(x,t)+1) over the grid. Satisfied when the
/// ratio stays finite and does not grow by more than 10% between the two top
/// decades of the grid. Requires max(t_grid) >= 2^10.
Delta2Report delta2_probe(const MusielakFunction& phi, std::span<const double> t_grid,
                          std::span<const Point> x_samples);

struct NFunctionReport {
  bool passed = true;
  std::vector<std::string> violations;
};

/// Checks phi(x,0) = 0, monotonicity and convexity by second differences on a
/// dyadic grid, and the limits phi/t -> 0 and -> infinity at the grid ends.
NFunctionReport n_function_probe(const MusielakFunction& phi, std::span<const Point> x_samples,
                                 double tol = 1e-9);

/// Largest sampled |p(x) - p(y)| log(1/|x-y|) over pairs with |x-y| <= 1/2.
/// Only meaningful for power kinds.
double log_holder_constant(const MusielakFunction& phi, std::span<const Point> x_samples);

}  // namespace mopar
