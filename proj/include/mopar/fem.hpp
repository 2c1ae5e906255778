#pragma once

#include "mopar/mesh.hpp"
#include "mopar/problem.hpp"
#include "mopar/quadrature.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace mopar {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Conforming P1 space on a mesh with homogeneous Dirichlet data: one degree
/// of freedom per interior vertex, numbered in vertex order.
class FemSpace {
public:
  explicit FemSpace(Mesh mesh);
  FemSpace(Mesh mesh, QuadratureRule quad);

  static std::shared_ptr<const FemSpace> create(int dim, int m);

  [[nodiscard]] const Mesh& mesh() const noexcept { return mesh_; }
  [[nodiscard]] const QuadratureRule& quadrature() const noexcept { return quad_; }
  [[nodiscard]] std::size_t num_dofs() const noexcept { return dof_vertex_.size(); }
  /// Dof index of a vertex, or -1 on the boundary.
  [[nodiscard]] std::ptrdiff_t dof(std::size_t vertex) const { return vertex_dof_[vertex]; }
  [[nodiscard]] std::size_t vertex_of(std::size_t dof) const { return dof_vertex_[dof]; }

  /// Expands dof coefficients to all vertices (zero on the boundary).
  [[nodiscard]] std::vector<double> nodal_values(const Vector& coeffs) const;

private:
  Mesh mesh_;
  QuadratureRule quad_;
  std::vector<std::ptrdiff_t> vertex_dof_;
  std::vector<std::size_t> dof_vertex_;
};

using SpacePtr = std::shared_ptr<const FemSpace>;

/// An element of the discrete space: coefficients on the free vertices.
class FemFunction {
public:
  explicit FemFunction(SpacePtr space);
  FemFunction(SpacePtr space, Vector coefficients);

  [[nodiscard]] const FemSpace& space() const noexcept { return *space_; }
  [[nodiscard]] const SpacePtr& space_ptr() const noexcept { return space_; }
  [[nodiscard]] const Vector& coefficients() const noexcept { return coeffs_; }
  [[nodiscard]] Vector& coefficients() noexcept { return coeffs_; }

  [[nodiscard]] double vertex_value(std::size_t vertex) const;
  [[nodiscard]] std::vector<double> nodal_values() const { return space_->nodal_values(coeffs_); }
  [[nodiscard]] double value(std::size_t cell, std::span<const double> bary) const;
  [[nodiscard]] Vec2 gradient(std::size_t cell) const;

private:
  SpacePtr space_;
  Vector coeffs_;
};

/// Nodal interpolation onto the space (the restriction operator). Throws
/// trace_violation if v is not zero (within tol) at a boundary vertex.
FemFunction restrict_to(const SpacePtr& space, const std::function<double(const Point&)>& v,
                        double tol = 1e-12);

// ---------------------------------------------------------------------------
// Integration helpers.

using CellIntegrand =
    std::function<double(std::size_t cell, const Point& x, std::span<const double> bary)>;

/// Sum over cells of the quadrature of the integrand.
double integrate(const Mesh& mesh, const QuadratureRule& quad, const CellIntegrand& integrand);

/// P1 value on a cell from nodal values of all vertices.
double eval_nodal(const Mesh& mesh, std::span<const double> nodal, std::size_t cell,
                  std::span<const double> bary);
Vec2 grad_nodal(const Mesh& mesh, std::span<const double> nodal, std::size_t cell);

double l2_norm(const FemFunction& u);
double l2_distance(const FemFunction& u, const FemFunction& v);

// ---------------------------------------------------------------------------
// The backward Euler system. Component i of the residual is
//   int [ (b(u) - b(u_prev))/tau v_i + a(x, grad u).grad v_i + K(u).grad v_i - f(x, t_n) v_i ] dx.

Vector assemble_residual(const ProblemSpec& spec, const FemSpace& space, const Vector& u,
                         const Vector& u_prev, double tau, double t_n);
Vector assemble_residual(const ProblemSpec& spec, const FemFunction& u, const FemFunction& u_prev,
                         double tau, double t_n);

/// Derivative of the residual with respect to u. The stress Jacobian is
/// regularized with eps where it is singular at grad u = 0.
SparseMatrix assemble_jacobian(const ProblemSpec& spec, const FemSpace& space, const Vector& u,
                               double tau, double eps = 1e-10);
SparseMatrix assemble_jacobian(const ProblemSpec& spec, const FemFunction& u, double tau,
                               double eps = 1e-10);

/// Linearization with the stress frozen as kappa(x, grad u_old) grad u.
SparseMatrix assemble_picard_matrix(const ProblemSpec& spec, const FemSpace& space,
                                    const Vector& u_old, double tau);

/// CSV with columns vertex,x[,y],value over all vertices.
void write_field_csv(std::ostream& os, const FemFunction& u);

}  // namespace mopar
