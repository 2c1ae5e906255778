#include "mopar/problem.hpp"

#include "mopar/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace mopar {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRelTol = 1e-9;

std::string fmt_vec(const Vec2& v, int dim) {
  std::ostringstream os;
  os.precision(6);
  if (dim == 1) {
    os << v.x();
  } else {
    os << "(" << v.x() << "," << v.y() << ")";
  }
  return os.str();
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void check_structure(const ProblemSpec& spec) {
  const auto& c = spec.constants;
  if (!(c.b0 > 0.0 && c.nu > 0.0 && c.nu0 > 0.0 && c.lambda > 0.0 && c.nu1 >= 0.0)) {
    throw Error(ErrorCode::structure_violation,
                "structure constants b0, nu, nu0, lambda must be positive and nu1 non-negative");
  }
  if (!(c.structure_margin() > 0.0)) {
    throw Error(ErrorCode::structure_violation,
                "structure condition nu > 4 nu0 violated: nu=" + fmt_num(c.nu) +
                    ", nu0=" + fmt_num(c.nu0) + " (energy margin 2tau(nu b0 - 2 b1 nu0) <= 0)");
  }
}

Truncation::Truncation(double level) : level_(level) {
  require(level > 0.0, "truncation level must be positive");
}

double Truncation::operator()(double r) const noexcept {
  return std::max(-level_, std::min(level_, r));
}

// ---------------------------------------------------------------------------

namespace laws {

AccumulationLaw b_linear(double beta) {
  return {"linear", {{"beta", beta}}, [beta](double s) { return beta * s; },
          [beta](double) { return beta; }};
}

AccumulationLaw b_linear_sine(double beta, double gamma) {
  return {"linear_sine",
          {{"beta", beta}, {"gamma", gamma}},
          [beta, gamma](double s) { return beta * s + gamma * std::sin(s); },
          [beta, gamma](double s) { return beta + gamma * std::cos(s); }};
}

AccumulationLaw b_square() {
  return {"square", {}, [](double s) { return s * s; }, [](double s) { return 2.0 * s; }};
}

StressLaw stress_linear(double coefficient) {
  StressLaw law;
  law.kind = "linear";
  law.params = {{"coefficient", coefficient}};
  law.value = [coefficient](const Point&, const Vec2& xi) -> Vec2 { return coefficient * xi; };
  law.jacobian = [coefficient](const Point&, const Vec2&, double) -> Mat2 {
    return coefficient * Mat2::Identity();
  };
  law.secant = [coefficient](const Point&, const Vec2&) { return coefficient; };
  return law;
}

StressLaw stress_p_laplace(std::array<double, 3> exponent) {
  auto p = [exponent](const Point& x) {
    return exponent[0] + exponent[1] * x.x() + exponent[2] * x.y();
  };
  StressLaw law;
  law.kind = "p_laplace";
  law.params = {{"p0", exponent[0]}, {"p1", exponent[1]}, {"p2", exponent[2]}};
  law.value = [p](const Point& x, const Vec2& xi) -> Vec2 {
    const double r = xi.norm();
    if (r == 0.0) {
      return Vec2::Zero();
    }
    return std::pow(r, p(x) - 2.0) * xi;
  };
  law.jacobian = [p](const Point& x, const Vec2& xi, double eps) -> Mat2 {
    const double e = p(x);
    const double r2 = xi.squaredNorm() + eps * eps;
    const double r = std::sqrt(r2);
    const double scale = std::pow(r, e - 2.0);
    return scale * (Mat2::Identity() + (e - 2.0) * xi * xi.transpose() / r2);
  };
  law.secant = [p](const Point& x, const Vec2& xi) {
    const double r = std::sqrt(xi.squaredNorm() + 1e-20);
    return std::pow(r, p(x) - 2.0);
  };
  return law;
}

namespace {
ConvectionLaw directed(std::string kind, double c, Vec2 dir, std::function<double(double)> g,
                       std::function<double(double)> dg) {
  ConvectionLaw law;
  law.kind = std::move(kind);
  law.params = {{"c", c}, {"dx", dir.x()}, {"dy", dir.y()}};
  law.value = [c, dir, g](double s) -> Vec2 { return c * g(s) * dir; };
  law.deriv = [c, dir, dg](double s) -> Vec2 { return c * dg(s) * dir; };
  return law;
}
}  // namespace

ConvectionLaw convection_zero() {
  ConvectionLaw law;
  law.kind = "zero";
  law.value = [](double) -> Vec2 { return Vec2::Zero(); };
  law.deriv = [](double) -> Vec2 { return Vec2::Zero(); };
  return law;
}

ConvectionLaw convection_linear(double c, Vec2 direction) {
  return directed(
      "linear", c, direction, [](double s) { return s; }, [](double) { return 1.0; });
}

ConvectionLaw convection_sine(double c, Vec2 direction) {
  return directed(
      "sine", c, direction, [](double s) { return std::sin(s); },
      [](double s) { return std::cos(s); });
}

ConvectionLaw convection_quadratic(double c, Vec2 direction) {
  return directed(
      "quadratic", c, direction, [](double s) { return s * s; },
      [](double s) { return 2.0 * s; });
}

}  // namespace laws

// ---------------------------------------------------------------------------

namespace expressions {

SpaceTimeFunction zero() {
  return {"zero", {}, [](const Point&, double) { return 0.0; }};
}

SpaceTimeFunction constant(double value) {
  return {"constant", {{"value", value}}, [value](const Point&, double) { return value; }};
}

SpaceTimeFunction sin_pi(int dim, double amplitude, double omega) {
  return {"sin_pi",
          {{"amplitude", amplitude}, {"omega", omega}},
          [dim, amplitude, omega](const Point& x, double t) {
            double v = amplitude * std::cos(omega * t) * std::sin(kPi * x.x());
            if (dim == 2) {
              v *= std::sin(kPi * x.y());
            }
            return v;
          }};
}

SpaceTimeFunction bubble(int dim, double amplitude) {
  return {"bubble", {{"amplitude", amplitude}}, [dim, amplitude](const Point& x, double) {
            double v = amplitude * x.x() * (1.0 - x.x());
            if (dim == 2) {
              v *= x.y() * (1.0 - x.y());
            }
            return v;
          }};
}

SpaceTimeFunction hat(int dim, double amplitude) {
  return {"hat", {{"amplitude", amplitude}}, [dim, amplitude](const Point& x, double) {
            double v = amplitude * (1.0 - std::abs(2.0 * x.x() - 1.0));
            if (dim == 2) {
              v *= 1.0 - std::abs(2.0 * x.y() - 1.0);
            }
            return v;
          }};
}

SpaceTimeFunction by_id(const std::string& id, const Params& params, int dim) {
  auto get = [&](const char* key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (id == "zero") {
    return zero();
  }
  if (id == "constant") {
    return constant(get("value", 0.0));
  }
  if (id == "sin_pi") {
    return sin_pi(dim, get("amplitude", 1.0), get("omega", 0.0));
  }
  if (id == "bubble") {
    return bubble(dim, get("amplitude", 1.0));
  }
  if (id == "hat") {
    return hat(dim, get("amplitude", 1.0));
  }
  throw Error(ErrorCode::config, "unknown expression id '" + id + "'");
}

}  // namespace expressions

// ---------------------------------------------------------------------------

namespace models {

ProblemSpec heat_limit(int dim) {
  ProblemSpec spec;
  spec.name = "heat_limit";
  spec.dim = dim;
  spec.b = laws::b_linear(1.0);
  spec.a = laws::stress_linear(1.0);
  spec.K = laws::convection_zero();
  spec.f = expressions::zero();
  spec.u0 = expressions::sin_pi(dim, 1.0);
  spec.constants = {.b0 = 0.75, .nu = 2.0, .nu0 = 0.1, .nu1 = 0.0, .lambda = 1.0};
  spec.phi = MusielakFunction::power(2.0, 0.5);
  return spec;
}

ProblemSpec scaled_heat(int dim) {
  ProblemSpec spec = heat_limit(dim);
  spec.name = "scaled_heat";
  spec.b = laws::b_linear(1.5);
  spec.constants.b0 = 1.0;
  return spec;
}

ProblemSpec p_laplacian(int dim) {
  ProblemSpec spec;
  spec.name = "p_laplacian";
  spec.dim = dim;
  spec.b = laws::b_linear(1.0);
  spec.a = laws::stress_p_laplace({2.0, 0.5, 0.0});
  spec.K = laws::convection_zero();
  spec.f = expressions::constant(1.0);
  spec.u0 = expressions::bubble(dim, dim == 1 ? 4.0 : 16.0);
  spec.constants = {.b0 = 0.75, .nu = 1.0, .nu0 = 0.1, .nu1 = 0.0, .lambda = 1.0};
  spec.phi = MusielakFunction::variable_power({2.0, 0.5, 0.0});
  return spec;
}

ProblemSpec lipschitz_convection(int dim) {
  ProblemSpec spec;
  spec.name = "lipschitz_convection";
  spec.dim = dim;
  spec.b = laws::b_linear(1.5);
  spec.a = laws::stress_linear(1.0);
  const Vec2 dir = dim == 1 ? Vec2(1.0, 0.0) : Vec2(1.0, 1.0).normalized();
  spec.K = laws::convection_sine(0.4, dir);
  spec.f = expressions::sin_pi(dim, 2.0, 3.0);
  spec.u0 = expressions::sin_pi(dim, 1.0);
  spec.constants = {.b0 = 1.0, .nu = 2.0, .nu0 = 0.4, .nu1 = 0.4, .lambda = 1.0};
  spec.phi = MusielakFunction::power(2.0, 0.5);
  return spec;
}

std::vector<ProblemSpec> shipped(int dim) {
  return {heat_limit(dim), p_laplacian(dim), lipschitz_convection(dim)};
}

}  // namespace models

// ---------------------------------------------------------------------------

void ValidationReport::fail(const std::string& message) {
  passed = false;
  if (violations.size() < 10) {
    violations.push_back(message);
  }
}

std::vector<double> symmetric_samples(std::size_t n, double range) {
  if (n % 2 == 0) {
    ++n;
  }
  std::vector<double> s(n);
  const double step = n > 1 ? 2.0 * range / static_cast<double>(n - 1) : 0.0;
  const std::size_t mid = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = (static_cast<double>(i) - static_cast<double>(mid)) * step;
  }
  return s;
}

std::vector<Point> domain_samples(int dim, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> out(n);
  for (auto& p : out) {
    const double x = unit(rng);
    const double y = dim == 2 ? unit(rng) : 0.0;
    p = Point(x, y);
  }
  return out;
}

std::vector<Vec2> ball_samples(int dim, std::size_t n, double radius, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vec2> out;
  out.reserve(n);
  while (out.size() < n) {
    Vec2 v(unit(rng), dim == 2 ? unit(rng) : 0.0);
    if (v.squaredNorm() <= 1.0) {
      // Spread magnitudes over several decades instead of clustering at the rim.
      const double decades = std::log10(radius) + 3.0;
      const double scale = std::pow(10.0, -3.0 + decades * (0.5 * (unit(rng) + 1.0)));
      out.push_back(std::min(scale, radius) * v);
    }
  }
  return out;
}

ValidationReport validate_b(const ProblemSpec& spec, std::span<const double> s_samples) {
  ValidationReport report;
  report.assumption = "accumulation bounds b0 < b'(s) < b1 = 2 b0";
  const double b0 = spec.constants.b0;
  const double b1 = spec.constants.b1();
  const double tol = 1e-12;

  if (std::abs(spec.b(0.0)) > tol) {
    report.fail("b(0) = " + fmt_num(spec.b(0.0)) + " is not zero");
  }
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = -dmin;
  for (double s : s_samples) {
    const double d = spec.b.deriv(s);
    const double h = 1e-5 * std::max(1.0, std::abs(s));
    const double fd = (spec.b(s + h) - spec.b(s - h)) / (2.0 * h);
    dmin = std::min({dmin, d, fd});
    dmax = std::max({dmax, d, fd});
    if (!(d > b0 - tol && d < b1 + tol)) {
      report.fail("accumulation bound fails at s=" + fmt_num(s) + ": b'(s)=" + fmt_num(d) +
                  " outside (" + fmt_num(b0) + ", " + fmt_num(b1) + ")");
    } else if (!(fd > b0 - 1e-7 && fd < b1 + 1e-7)) {
      report.fail("accumulation bound fails at s=" + fmt_num(s) +
                  ": finite-difference b'(s)=" + fmt_num(fd));
    }
  }
  report.measured["b_prime_min"] = dmin;
  report.measured["b_prime_max"] = dmax;
  return report;
}

ValidationReport validate_stress(const ProblemSpec& spec, std::span<const Vec2> xi_samples,
                                 std::span<const Point> x_samples) {
  require(!xi_samples.empty() && !x_samples.empty(), "stress validation needs samples");
  ValidationReport report;
  report.assumption = "stress growth, strict monotonicity and coercivity";
  const double nu = spec.constants.nu;
  double nu_obs = std::numeric_limits<double>::infinity();
  double growth_max = 0.0;
  double monotone_min = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const std::size_t n = xi_samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& xi = xi_samples[i];
    const Point& x = x_samples[i % x_samples.size()];
    const Vec2 a = spec.a.value(x, xi);
    const double r = xi.norm();
    const double phi_r = spec.phi(x, r);

    // Growth in the equivalent form conj(x, |a|) <= phi(x, |xi|).
    const double conj = young_conjugate(spec.phi, x, a.norm());
    if (phi_r > 0.0) {
      growth_max = std::max(growth_max, conj / phi_r);
    }
    if (conj > phi_r * (1.0 + kRelTol) + 1e-300) {
      report.fail("stress growth fails at sampled xi=" + fmt_vec(xi, spec.dim) +
                  ": conj(|a|)=" + fmt_num(conj) + " > phi(|xi|)=" + fmt_num(phi_r));
    }

    // Coercivity a.xi >= nu phi(x, |xi|).
    const double work = a.dot(xi);
    if (phi_r > 0.0) {
      nu_obs = std::min(nu_obs, work / phi_r);
    }
    if (work < nu * phi_r * (1.0 - 1e-12)) {
      report.fail("coercivity fails at sampled xi=" + fmt_vec(xi, spec.dim) + ": a.xi=" +
                  fmt_num(work) + " < nu phi=" + fmt_num(nu * phi_r));
    }

    // Strict monotonicity against a neighbour sample and a nearby perturbation.
    Vec2 dir(unit(rng), spec.dim == 2 ? unit(rng) : 0.0);
    if (dir.norm() == 0.0) {
      dir = Vec2(1.0, 0.0);
    }
    const double step = std::pow(10.0, -static_cast<double>(i % 8));
    const Vec2 partners[2] = {xi_samples[(i + 1) % n], xi + step * dir.normalized()};
    for (const Vec2& other : partners) {
      const Vec2 diff = xi - other;
      if (diff.norm() == 0.0) {
        continue;
      }
      const double m = (a - spec.a.value(x, other)).dot(diff);
      monotone_min = std::min(monotone_min, m / diff.squaredNorm());
      if (!(m > 0.0)) {
        report.fail("strict monotonicity fails at sampled xi=" + fmt_vec(xi, spec.dim) +
                    ", xi*=" + fmt_vec(other, spec.dim));
      }
    }
  }
  report.measured["nu_observed"] = nu_obs;
  report.measured["growth_ratio_max"] = growth_max;
  report.measured["monotonicity_min"] = monotone_min;
  return report;
}

ValidationReport validate_convection(const ProblemSpec& spec, std::span<const double> s_samples,
                                     std::span<const Point> x_samples) {
  require(!s_samples.empty() && !x_samples.empty(), "convection validation needs samples");
  ValidationReport report;
  report.assumption = "convection growth and Lipschitz bounds";
  const auto& c = spec.constants;
  double nu0_obs = 0.0;
  double nu1_obs = 0.0;

  for (std::size_t i = 0; i < s_samples.size(); ++i) {
    const double s = s_samples[i];
    const Point& x = x_samples[i % x_samples.size()];
    const double k = spec.K.value(s).norm();
    if (s != 0.0 && k > 0.0) {
      const double bound = conjugate_inverse(spec.phi, x, spec.phi(x, std::abs(s) / c.lambda));
      nu0_obs = std::max(nu0_obs, k / bound);
      if (k > c.nu0 * bound * (1.0 + kRelTol)) {
        report.fail("convection growth fails at sampled s=" + fmt_num(s) + ": |K(s)|=" +
                    fmt_num(k) + " > nu0 bound=" + fmt_num(c.nu0 * bound));
      }
    } else if (s == 0.0 && k > 0.0) {
      report.fail("convection growth fails at s=0: K(0) != 0");
    }
  }

  std::mt19937_64 rng(0xC0FFEE);
  std::uniform_int_distribution<std::size_t> pick(0, s_samples.size() - 1);
  auto check_pair = [&](double s, double t) {
    if (s == t) {
      return;
    }
    const double q = (spec.K.value(s) - spec.K.value(t)).norm() / std::abs(s - t);
    nu1_obs = std::max(nu1_obs, q);
    if (q > c.nu1 * (1.0 + kRelTol) + 1e-14) {
      report.fail("convection Lipschitz bound fails at sampled s=" + fmt_num(s) +
                  ", s'=" + fmt_num(t) + ": quotient " + fmt_num(q) + " > nu1=" + fmt_num(c.nu1));
    }
  };
  for (std::size_t i = 0; i + 1 < s_samples.size(); ++i) {
    check_pair(s_samples[i], s_samples[i + 1]);
    check_pair(s_samples[i], s_samples[pick(rng)]);
  }
  report.measured["nu0_observed"] = nu0_obs;
  report.measured["nu1_observed"] = nu1_obs;
  return report;
}

ValidationReport validate_structure(const ProblemSpec& spec) {
  ValidationReport report;
  report.assumption = "structure condition nu > 4 nu0";
  try {
    check_structure(spec);
  } catch (const Error& e) {
    report.fail(e.what());
  }
  report.measured["structure_margin"] = spec.constants.structure_margin();
  return report;
}

std::vector<ValidationReport> validate_all(const ProblemSpec& spec, const SamplingOptions& opts) {
  std::vector<ValidationReport> out;
  out.push_back(validate_structure(spec));

  const auto xs = domain_samples(spec.dim, opts.x_samples, opts.seed);
  const auto s = symmetric_samples(opts.s_samples, opts.s_range);
  out.push_back(validate_b(spec, s));
  out.push_back(validate_stress(spec, ball_samples(spec.dim, opts.xi_samples, opts.xi_radius,
                                                   opts.seed + 1),
                                xs));
  out.push_back(validate_convection(spec, s, xs));

  ValidationReport nf;
  nf.assumption = "phi is an N-function";
  const std::vector<Point> few(xs.begin(), xs.begin() + std::min<std::size_t>(xs.size(), 16));
  const NFunctionReport probe = n_function_probe(spec.phi, few);
  for (const auto& v : probe.violations) {
    nf.fail(v);
  }
  if (spec.phi.kind() != MusielakKind::custom) {
    nf.measured["log_holder_constant"] = log_holder_constant(spec.phi, few);
  }
  out.push_back(std::move(nf));
  return out;
}

}  // namespace mopar
