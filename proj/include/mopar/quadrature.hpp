#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace mopar {

/// Quadrature on the reference simplex in barycentric coordinates. Weights sum
/// to the reference measure (1 for the unit segment, 1/2 for the unit triangle).
struct QuadratureRule {
  int dim = 1;
  int degree = 0;  ///< polynomial exactness
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return weights.size(); }
  [[nodiscard]] double reference_measure() const noexcept { return dim == 1 ? 1.0 : 0.5; }
};

/// n-point Gauss-Legendre rule on [0,1], exact for degree 2n-1.
QuadratureRule gauss_segment(int n);

/// Triangle rule exact at least for the requested degree: the 6-point
/// symmetric rule up to degree 4, collapsed Gauss products beyond.
QuadratureRule triangle_rule(int degree);

/// Default assembly rule: 4-point Gauss in 1D, degree-4 symmetric rule on triangles.
QuadratureRule default_rule(int dim);

/// A rule of at least twice the default exactness, for robustness checks.
QuadratureRule refined_rule(int dim);

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace mopar
