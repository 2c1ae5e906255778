#include "mopar/fem.hpp"

#include "mopar/error.hpp"
#include "mopar/parallel.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mopar {

FemSpace::FemSpace(Mesh mesh) : FemSpace(std::move(mesh), QuadratureRule{}) {}

FemSpace::FemSpace(Mesh mesh, QuadratureRule quad) : mesh_(std::move(mesh)), quad_(std::move(quad)) {
  if (quad_.size() == 0) {
    quad_ = default_rule(mesh_.dim());
  }
  require(quad_.dim == mesh_.dim(), "quadrature dimension does not match mesh");
  vertex_dof_.assign(mesh_.num_vertices(), -1);
  for (std::size_t v = 0; v < mesh_.num_vertices(); ++v) {
    if (!mesh_.is_boundary(v)) {
      vertex_dof_[v] = static_cast<std::ptrdiff_t>(dof_vertex_.size());
      dof_vertex_.push_back(v);
    }
  }
}

SpacePtr FemSpace::create(int dim, int m) {
  return std::make_shared<const FemSpace>(build_mesh(dim, m));
}

std::vector<double> FemSpace::nodal_values(const Vector& coeffs) const {
  require(static_cast<std::size_t>(coeffs.size()) == num_dofs(),
          "coefficient vector does not match the space");
  std::vector<double> nodal(mesh_.num_vertices(), 0.0);
  for (std::size_t d = 0; d < dof_vertex_.size(); ++d) {
    nodal[dof_vertex_[d]] = coeffs[static_cast<Eigen::Index>(d)];
  }
  return nodal;
}

FemFunction::FemFunction(SpacePtr space)
    : space_(std::move(space)), coeffs_(Vector::Zero(static_cast<Eigen::Index>(space_->num_dofs()))) {}

FemFunction::FemFunction(SpacePtr space, Vector coefficients)
    : space_(std::move(space)), coeffs_(std::move(coefficients)) {
  require(static_cast<std::size_t>(coeffs_.size()) == space_->num_dofs(),
          "coefficient vector does not match the space");
}

double FemFunction::vertex_value(std::size_t vertex) const {
  const auto d = space_->dof(vertex);
  return d < 0 ? 0.0 : coeffs_[d];
}

double FemFunction::value(std::size_t cell, std::span<const double> bary) const {
  const Mesh& mesh = space_->mesh();
  const auto& c = mesh.cell(cell);
  double u = 0.0;
  for (std::size_t k = 0; k < mesh.vertices_per_cell(); ++k) {
    u += bary[k] * vertex_value(c[k]);
  }
  return u;
}

Vec2 FemFunction::gradient(std::size_t cell) const {
  const Mesh& mesh = space_->mesh();
  const auto& c = mesh.cell(cell);
  const auto grads = mesh.basis_gradients(cell);
  Vec2 g = Vec2::Zero();
  for (std::size_t k = 0; k < mesh.vertices_per_cell(); ++k) {
    g += vertex_value(c[k]) * grads[k];
  }
  return g;
}

FemFunction restrict_to(const SpacePtr& space, const std::function<double(const Point&)>& v,
                        double tol) {
  const Mesh& mesh = space->mesh();
  for (std::size_t vert : mesh.boundary_vertices()) {
    const double value = v(mesh.vertex(vert));
    if (!(std::abs(value) <= tol)) {
      throw Error(ErrorCode::trace_violation,
                  "restricted function is " + std::to_string(value) + " at boundary vertex " +
                      std::to_string(vert));
    }
  }
  Vector coeffs(static_cast<Eigen::Index>(space->num_dofs()));
  for (std::size_t d = 0; d < space->num_dofs(); ++d) {
    coeffs[static_cast<Eigen::Index>(d)] = v(mesh.vertex(space->vertex_of(d)));
  }
  return FemFunction(space, std::move(coeffs));
}

double integrate(const Mesh& mesh, const QuadratureRule& quad, const CellIntegrand& integrand) {
  require(quad.dim == mesh.dim(), "quadrature dimension does not match mesh");
  const std::size_t nv = mesh.vertices_per_cell();
  const double ref = quad.reference_measure();
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const std::span<const double> bary(quad.points[q].data(), nv);
      cell_sum += quad.weights[q] * integrand(c, mesh.map(c, bary), bary);
    }
    total += mesh.measure(c) / ref * cell_sum;
  }
  return total;
}

double eval_nodal(const Mesh& mesh, std::span<const double> nodal, std::size_t cell,
                  std::span<const double> bary) {
  const auto& c = mesh.cell(cell);
  double u = 0.0;
  for (std::size_t k = 0; k < mesh.vertices_per_cell(); ++k) {
    u += bary[k] * nodal[c[k]];
  }
  return u;
}

Vec2 grad_nodal(const Mesh& mesh, std::span<const double> nodal, std::size_t cell) {
  const auto& c = mesh.cell(cell);
  const auto grads = mesh.basis_gradients(cell);
  Vec2 g = Vec2::Zero();
  for (std::size_t k = 0; k < mesh.vertices_per_cell(); ++k) {
    g += nodal[c[k]] * grads[k];
  }
  return g;
}

double l2_norm(const FemFunction& u) {
  const Mesh& mesh = u.space().mesh();
  const auto nodal = u.nodal_values();
  return std::sqrt(integrate(mesh, u.space().quadrature(),
                             [&](std::size_t c, const Point&, std::span<const double> bary) {
                               const double v = eval_nodal(mesh, nodal, c, bary);
                               return v * v;
                             }));
}

double l2_distance(const FemFunction& u, const FemFunction& v) {
  require(&u.space() == &v.space(), "l2_distance needs functions on the same space");
  return l2_norm(FemFunction(u.space_ptr(), u.coefficients() - v.coefficients()));
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kMaxLocal = 3;

struct LocalVector {
  std::array<double, kMaxLocal> r{};
  bool finite = true;
};

struct LocalMatrix {
  std::array<double, kMaxLocal * kMaxLocal> k{};
  bool finite = true;
};

void throw_nan(std::size_t cell) {
  throw Error(ErrorCode::assembly_nan,
              "non-finite integrand during assembly on cell " + std::to_string(cell));
}

void check_sizes(const FemSpace& space, const Vector& u) {
  require(static_cast<std::size_t>(u.size()) == space.num_dofs(),
          "state vector does not match the space");
}

template <class CellKernel>
SparseMatrix assemble_matrix(const FemSpace& space, CellKernel&& kernel) {
  const Mesh& mesh = space.mesh();
  const std::size_t nv = mesh.vertices_per_cell();
  std::vector<LocalMatrix> local(mesh.num_cells());
  parallel_for(mesh.num_cells(), [&](std::size_t c) { local[c] = kernel(c); });

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.num_cells() * nv * nv);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    if (!local[c].finite) {
      throw_nan(c);
    }
    const auto& cell = mesh.cell(c);
    for (std::size_t i = 0; i < nv; ++i) {
      const auto di = space.dof(cell[i]);
      if (di < 0) {
        continue;
      }
      for (std::size_t j = 0; j < nv; ++j) {
        const auto dj = space.dof(cell[j]);
        if (dj < 0) {
          continue;
        }
        triplets.emplace_back(static_cast<int>(di), static_cast<int>(dj), local[c].k[i * nv + j]);
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(space.num_dofs());
  SparseMatrix mat(n, n);
  mat.setFromTriplets(triplets.begin(), triplets.end());
  return mat;
}

struct CellState {
  std::array<double, kMaxLocal> u{};
  Vec2 grad = Vec2::Zero();
};

CellState cell_state(const FemSpace& space, const Vector& coeffs, std::size_t c) {
  const Mesh& mesh = space.mesh();
  const auto& cell = mesh.cell(c);
  const auto grads = mesh.basis_gradients(c);
  CellState s;
  for (std::size_t k = 0; k < mesh.vertices_per_cell(); ++k) {
    const auto d = space.dof(cell[k]);
    s.u[k] = d < 0 ? 0.0 : coeffs[d];
    s.grad += s.u[k] * grads[k];
  }
  return s;
}

}  // namespace

Vector assemble_residual(const ProblemSpec& spec, const FemSpace& space, const Vector& u,
                         const Vector& u_prev, double tau, double t_n) {
  require(tau > 0.0, "time step must be positive");
  check_sizes(space, u);
  check_sizes(space, u_prev);
  const Mesh& mesh = space.mesh();
  const QuadratureRule& quad = space.quadrature();
  const std::size_t nv = mesh.vertices_per_cell();
  const double ref = quad.reference_measure();

  std::vector<LocalVector> local(mesh.num_cells());
  parallel_for(mesh.num_cells(), [&](std::size_t c) {
    const CellState cur = cell_state(space, u, c);
    const CellState prev = cell_state(space, u_prev, c);
    const auto grads = mesh.basis_gradients(c);
    const double jac = mesh.measure(c) / ref;
    LocalVector out;
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const std::span<const double> bary(quad.points[q].data(), nv);
      const Point x = mesh.map(c, bary);
      double uq = 0.0;
      double pq = 0.0;
      for (std::size_t k = 0; k < nv; ++k) {
        uq += bary[k] * cur.u[k];
        pq += bary[k] * prev.u[k];
      }
      const double w = quad.weights[q] * jac;
      const double rate = (spec.b(uq) - spec.b(pq)) / tau - spec.f(x, t_n);
      const Vec2 flux = spec.a.value(x, cur.grad) + spec.K.value(uq);
      for (std::size_t k = 0; k < nv; ++k) {
        out.r[k] += w * (rate * bary[k] + flux.dot(grads[k]));
      }
    }
    for (std::size_t k = 0; k < nv; ++k) {
      out.finite = out.finite && std::isfinite(out.r[k]);
    }
    local[c] = out;
  });

  Vector res = Vector::Zero(static_cast<Eigen::Index>(space.num_dofs()));
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    if (!local[c].finite) {
      throw_nan(c);
    }
    const auto& cell = mesh.cell(c);
    for (std::size_t k = 0; k < nv; ++k) {
      const auto d = space.dof(cell[k]);
      if (d >= 0) {
        res[d] += local[c].r[k];
      }
    }
  }
  return res;
}

Vector assemble_residual(const ProblemSpec& spec, const FemFunction& u, const FemFunction& u_prev,
                         double tau, double t_n) {
  require(&u.space() == &u_prev.space(), "u and u_prev must live on the same space");
  return assemble_residual(spec, u.space(), u.coefficients(), u_prev.coefficients(), tau, t_n);
}

SparseMatrix assemble_jacobian(const ProblemSpec& spec, const FemSpace& space, const Vector& u,
                               double tau, double eps) {
  require(tau > 0.0, "time step must be positive");
  check_sizes(space, u);
  const Mesh& mesh = space.mesh();
  const QuadratureRule& quad = space.quadrature();
  const std::size_t nv = mesh.vertices_per_cell();
  const double ref = quad.reference_measure();

  return assemble_matrix(space, [&](std::size_t c) {
    const CellState cur = cell_state(space, u, c);
    const auto grads = mesh.basis_gradients(c);
    const double jac = mesh.measure(c) / ref;
    LocalMatrix out;
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const std::span<const double> bary(quad.points[q].data(), nv);
      const Point x = mesh.map(c, bary);
      double uq = 0.0;
      for (std::size_t k = 0; k < nv; ++k) {
        uq += bary[k] * cur.u[k];
      }
      const double w = quad.weights[q] * jac;
      const double mass = spec.b.deriv(uq) / tau;
      const Mat2 da = spec.a.jacobian(x, cur.grad, eps);
      const Vec2 dk = spec.K.deriv(uq);
      for (std::size_t i = 0; i < nv; ++i) {
        for (std::size_t j = 0; j < nv; ++j) {
          out.k[i * nv + j] += w * (mass * bary[i] * bary[j] + grads[i].dot(da * grads[j]) +
                                    dk.dot(grads[i]) * bary[j]);
        }
      }
    }
    for (double v : out.k) {
      out.finite = out.finite && std::isfinite(v);
    }
    return out;
  });
}

SparseMatrix assemble_jacobian(const ProblemSpec& spec, const FemFunction& u, double tau,
                               double eps) {
  return assemble_jacobian(spec, u.space(), u.coefficients(), tau, eps);
}

SparseMatrix assemble_picard_matrix(const ProblemSpec& spec, const FemSpace& space,
                                    const Vector& u_old, double tau) {
  require(tau > 0.0, "time step must be positive");
  check_sizes(space, u_old);
  const Mesh& mesh = space.mesh();
  const QuadratureRule& quad = space.quadrature();
  const std::size_t nv = mesh.vertices_per_cell();
  const double ref = quad.reference_measure();

  return assemble_matrix(space, [&](std::size_t c) {
    const CellState cur = cell_state(space, u_old, c);
    const auto grads = mesh.basis_gradients(c);
    const double jac = mesh.measure(c) / ref;
    LocalMatrix out;
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const std::span<const double> bary(quad.points[q].data(), nv);
      const Point x = mesh.map(c, bary);
      double uq = 0.0;
      for (std::size_t k = 0; k < nv; ++k) {
        uq += bary[k] * cur.u[k];
      }
      const double w = quad.weights[q] * jac;
      const double mass = spec.b.deriv(uq) / tau;
      const double kappa = spec.a.secant(x, cur.grad);
      const Vec2 dk = spec.K.deriv(uq);
      for (std::size_t i = 0; i < nv; ++i) {
        for (std::size_t j = 0; j < nv; ++j) {
          out.k[i * nv + j] += w * (mass * bary[i] * bary[j] + kappa * grads[i].dot(grads[j]) +
                                    dk.dot(grads[i]) * bary[j]);
        }
      }
    }
    for (double v : out.k) {
      out.finite = out.finite && std::isfinite(v);
    }
    return out;
  });
}

void write_field_csv(std::ostream& os, const FemFunction& u) {
  const Mesh& mesh = u.space().mesh();
  os << (mesh.dim() == 1 ? "vertex,x,value\n" : "vertex,x,y,value\n");
  char buf[128];
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const Point& p = mesh.vertex(v);
    if (mesh.dim() == 1) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", v, p.x(), u.vertex_value(v));
    } else {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", v, p.x(), p.y(),
                    u.vertex_value(v));
    }
    os << buf;
  }
}

}  // namespace mopar
