#pragma once

#include "mopar/mesh.hpp"
#include "mopar/musielak.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mopar {

using Params = std::map<std::string, double>;

/// The accumulation law b(s) with b(0) = 0 and b0 < b'(s) < 2 b0.
struct AccumulationLaw {
  std::string kind;
  Params params;
  std::function<double(double)> value;
  std::function<double(double)> deriv;

  double operator()(double s) const { return value(s); }
};

/// The stress a(x, xi). jacobian(x, xi, eps) returns d a / d xi with |xi|
/// replaced by sqrt(|xi|^2 + eps^2) wherever the exact derivative is singular;
/// secant(x, xi) is a scalar kappa with a(x, xi) = kappa xi, used by Picard sweeps.
struct StressLaw {
  std::string kind;
  Params params;
  std::function<Vec2(const Point&, const Vec2&)> value;
  std::function<Mat2(const Point&, const Vec2&, double)> jacobian;
  std::function<double(const Point&, const Vec2&)> secant;
};

/// The convective flux K(s) in R^d and its derivative.
struct ConvectionLaw {
  std::string kind;
  Params params;
  std::function<Vec2(double)> value;
  std::function<Vec2(double)> deriv;

  [[nodiscard]] bool is_zero() const noexcept { return kind == "zero"; }
};

/// A closed-form map (x, t) -> R, identified by an expression id.
struct SpaceTimeFunction {
  std::string id;
  Params params;
  std::function<double(const Point&, double)> value;

  double operator()(const Point& x, double t) const { return value(x, t); }
};

struct StructureConstants {
  double b0 = 0.75;
  double nu = 2.0;
  double nu0 = 0.1;
  double nu1 = 0.0;
  double lambda = 1.0;

  [[nodiscard]] double b1() const noexcept { return 2.0 * b0; }
  /// nu - 4 nu0; must be positive.
  [[nodiscard]] double structure_margin() const noexcept { return nu - 4.0 * nu0; }
  /// 2 tau (nu b0 - 2 b1 nu0), the weight of the gradient modular in the energy bound.
  [[nodiscard]] double energy_margin(double tau) const noexcept {
    return 2.0 * tau * (nu * b0 - 2.0 * b1() * nu0);
  }
};

/// One PDE instance: d_t b(u) - div(a(grad u) + K(u)) = f with u = 0 on the
/// boundary and u(0) = u0. Immutable once built.
struct ProblemSpec {
  std::string name;
  int dim = 1;
  AccumulationLaw b;
  StressLaw a;
  ConvectionLaw K;
  SpaceTimeFunction f;
  SpaceTimeFunction u0;  ///< time argument ignored
  StructureConstants constants;
  MusielakFunction phi = MusielakFunction::power(2.0, 0.5);
};

/// Throws structure_violation unless nu > 4 nu0 and all constants are positive.
void check_structure(const ProblemSpec& spec);

/// Clamp to [-k, k].
class Truncation {
public:
  explicit Truncation(double level);
  [[nodiscard]] double level() const noexcept { return level_; }
  [[nodiscard]] double operator()(double r) const noexcept;

private:
  double level_;
};

// ---------------------------------------------------------------------------
// Law and expression library.

namespace laws {
AccumulationLaw b_linear(double beta);
AccumulationLaw b_linear_sine(double beta, double gamma);
AccumulationLaw b_square();

StressLaw stress_linear(double coefficient);
/// |xi|^{p(x)-2} xi with p(x) = p0 + p1 x + p2 y.
StressLaw stress_p_laplace(std::array<double, 3> exponent);

ConvectionLaw convection_zero();
ConvectionLaw convection_linear(double c, Vec2 direction);
ConvectionLaw convection_sine(double c, Vec2 direction);
ConvectionLaw convection_quadratic(double c, Vec2 direction);
}  // namespace laws

namespace expressions {
SpaceTimeFunction zero();
SpaceTimeFunction constant(double value);
/// amplitude * cos(omega t) * prod_i sin(pi x_i)
SpaceTimeFunction sin_pi(int dim, double amplitude, double omega = 0.0);
/// amplitude * prod_i x_i (1 - x_i)
SpaceTimeFunction bubble(int dim, double amplitude);
/// amplitude * prod_i (1 - |2 x_i - 1|), the pyramid peaking at the centre
SpaceTimeFunction hat(int dim, double amplitude);
/// Looks up an expression by id; throws config on unknown ids.
SpaceTimeFunction by_id(const std::string& id, const Params& params, int dim);
}  // namespace expressions

/// Shipped model library; every model passes all validators with its constants.
namespace models {
/// b(u) = u, a = grad u, K = 0, phi = t^2/2, nu = 2.
ProblemSpec heat_limit(int dim);
/// b(u) = 1.5 u with b0 = 1; otherwise the heat limit.
ProblemSpec scaled_heat(int dim);
/// b(u) = u, a = |grad u|^{p(x)-2} grad u with p(x) = 2 + 0.5 x, phi = t^{p(x)}, nu = 1.
ProblemSpec p_laplacian(int dim);
/// b(u) = 1.5 u, a = grad u, K(u) = 0.4 sin(u) e, phi = t^2/2, nu = 2, nu0 = nu1 = 0.4.
ProblemSpec lipschitz_convection(int dim);
/// The three models the audits and probes run on.
std::vector<ProblemSpec> shipped(int dim);
}  // namespace models

// ---------------------------------------------------------------------------
// Sampled assumption checks.

struct ValidationReport {
  std::string assumption;
  bool passed = true;
  std::vector<std::string> violations;  ///< at most 10 messages
  std::map<std::string, double> measured;

  void fail(const std::string& message);
};

struct SamplingOptions {
  std::size_t x_samples = 1000;
  std::size_t xi_samples = 10000;
  double xi_radius = 1e3;
  std::size_t s_samples = 1001;
  double s_range = 100.0;
  std::uint64_t seed = 1;
};

/// n equispaced samples of [-range, range]; n is rounded up to an odd count so
/// that s = 0 is included.
std::vector<double> symmetric_samples(std::size_t n, double range);
/// Uniform samples of the unit interval/square (second coordinate 0 in 1D).
std::vector<Point> domain_samples(int dim, std::size_t n, std::uint64_t seed);
/// Uniform samples of the ball of the given radius in R^dim.
std::vector<Vec2> ball_samples(int dim, std::size_t n, double radius, std::uint64_t seed);

/// b(0) = 0 and b0 < b'(s) < b1 (analytic and central-difference derivatives).
ValidationReport validate_b(const ProblemSpec& spec, std::span<const double> s_samples);

/// Growth conj(x, |a|) <= phi(x, |xi|) (equivalent to |a| <= conj^{-1}(phi)),
/// strict monotonicity on sampled pairs, and coercivity a.xi >= nu phi(x,|xi|).
ValidationReport validate_stress(const ProblemSpec& spec, std::span<const Vec2> xi_samples,
                                 std::span<const Point> x_samples);

/// Growth |K(s)| <= nu0 conj^{-1}(phi(x, |s|/lambda)) and Lipschitz bound nu1.
ValidationReport validate_convection(const ProblemSpec& spec, std::span<const double> s_samples,
                                     std::span<const Point> x_samples);

/// nu > 4 nu0 and positivity of the constants.
ValidationReport validate_structure(const ProblemSpec& spec);

/// Every check above plus the N-function probe of phi, with default sampling.
std::vector<ValidationReport> validate_all(const ProblemSpec& spec, const SamplingOptions& opts);

}  // namespace mopar
