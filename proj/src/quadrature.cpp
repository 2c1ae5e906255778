#include "mopar/quadrature.hpp"

#include "mopar/error.hpp"

#include <cmath>
#include <numbers>

namespace mopar {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  require(n >= 1, "Gauss-Legendre rule needs at least one point");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    nodes[n / 2] = 0.0;
  }
}

QuadratureRule gauss_segment(int n) {
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre(n, x, w);
  QuadratureRule rule;
  rule.dim = 1;
  rule.degree = 2 * n - 1;
  for (int i = 0; i < n; ++i) {
    const double s = 0.5 * (x[i] + 1.0);
    rule.points.push_back({1.0 - s, s, 0.0});
    rule.weights.push_back(0.5 * w[i]);
  }
  return rule;
}

QuadratureRule triangle_rule(int degree) {
  QuadratureRule rule;
  rule.dim = 2;
  if (degree <= 4) {
    rule.degree = 4;
    struct Orbit {
      double a;
      double w;
    };
    const Orbit orbits[] = {{0.44594849091596488632, 0.22338158967801146570},
                            {0.09157621350977074346, 0.10995174365532186764}};
    for (const auto& o : orbits) {
      const double b = 1.0 - 2.0 * o.a;
      rule.points.push_back({o.a, o.a, b});
      rule.points.push_back({o.a, b, o.a});
      rule.points.push_back({b, o.a, o.a});
      for (int k = 0; k < 3; ++k) {
        rule.weights.push_back(0.5 * o.w);
      }
    }
    return rule;
  }

  // Collapsed (Duffy) product: x = s, y = r (1 - s), Jacobian (1 - s).
  const int n = (degree + 3) / 2;
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre(n, x, w);
  rule.degree = 2 * n - 2;
  for (int i = 0; i < n; ++i) {
    const double s = 0.5 * (x[i] + 1.0);
    for (int j = 0; j < n; ++j) {
      const double r = 0.5 * (x[j] + 1.0);
      const double l1 = s;
      const double l2 = r * (1.0 - s);
      rule.points.push_back({1.0 - l1 - l2, l1, l2});
      rule.weights.push_back(0.25 * w[i] * w[j] * (1.0 - s));
    }
  }
  return rule;
}

QuadratureRule default_rule(int dim) { return dim == 1 ? gauss_segment(4) : triangle_rule(4); }

QuadratureRule refined_rule(int dim) { return dim == 1 ? gauss_segment(8) : triangle_rule(8); }

}  // namespace mopar
