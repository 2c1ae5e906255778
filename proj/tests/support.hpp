#pragma once

// Independent oracles and hand-rolled generators shared by the test binaries.
// Nothing here calls into the library's numerics.

#include "mopar/fem.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) {
    s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  }
  return s * h / 3.0;
}

/// Plain bisection for a sign change on [lo, hi].
inline double bisect(const std::function<double(double)>& g, double lo, double hi) {
  double glo = g(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Golden-section maximum of a unimodal function on [lo, hi].
inline double golden_max(const std::function<double(double)>& g, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  for (int i = 0; i < 300; ++i) {
    if (g(c) > g(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return g(0.5 * (a + b));
}

/// Hat basis of the single interior vertex of the two-cell mesh of (0, 1):
/// mass M = 1/3 and stiffness A = 4 by direct integration of the piecewise
/// linear shape function.
inline double one_dof_mass() {
  return simpson([](double x) { return std::pow(1.0 - std::abs(2.0 * x - 1.0), 2); }, 0.0, 0.5) * 2.0;
}
inline double one_dof_stiffness() { return 2.0 * 0.5 * 4.0; }

/// int over a segment of length h of |u|^p, u linear from a to b.
inline double segment_power(double a, double b, double h, double p) {
  const double A = std::abs(a), B = std::abs(b);
  if (a * b < 0.0) {
    return h * (std::pow(A, p + 1.0) + std::pow(B, p + 1.0)) / ((p + 1.0) * (A + B));
  }
  if (A == B) {
    return h * std::pow(A, p);
  }
  return h * (std::pow(B, p + 1.0) - std::pow(A, p + 1.0)) / ((p + 1.0) * (B - A));
}

}  // namespace oracle

namespace gen {

/// Deterministic generator used by the property tests.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  mopar::Point point(int dim) {
    return {uniform(0.0, 1.0), dim == 1 ? 0.0 : uniform(0.0, 1.0)};
  }
  mopar::Vector vector(Eigen::Index n, double amplitude) {
    mopar::Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v[i] = uniform(-amplitude, amplitude);
    }
    return v;
  }
  mopar::FemFunction field(const mopar::SpacePtr& space, double amplitude) {
    return mopar::FemFunction(space, vector(static_cast<Eigen::Index>(space->num_dofs()), amplitude));
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace gen
