#include "mopar/mesh.hpp"

#include "mopar/error.hpp"

#include <Eigen/LU>

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace mopar {

Mesh::Mesh(int dim, std::vector<Point> vertices, std::vector<Cell> cells,
           std::vector<bool> on_boundary, int resolution)
    : dim_(dim),
      resolution_(resolution),
      vertices_(std::move(vertices)),
      cells_(std::move(cells)),
      on_boundary_(std::move(on_boundary)) {
  require(dim_ == 1 || dim_ == 2, "mesh dimension must be 1 or 2");
  require(on_boundary_.size() == vertices_.size(), "boundary flags do not match vertex count");

  const std::size_t nv = vertices_per_cell();
  measure_.resize(cells_.size());
  gradients_.resize(cells_.size() * nv);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const Cell& cell = cells_[c];
    if (dim_ == 1) {
      const double x0 = vertices_[cell[0]].x();
      const double x1 = vertices_[cell[1]].x();
      const double len = x1 - x0;
      require(std::abs(len) > 0.0, "degenerate segment " + std::to_string(c));
      measure_[c] = std::abs(len);
      gradients_[c * nv + 0] = Vec2(-1.0 / len, 0.0);
      gradients_[c * nv + 1] = Vec2(1.0 / len, 0.0);
      h_max_ = std::max(h_max_, std::abs(len));
    } else {
      const Point& p0 = vertices_[cell[0]];
      const Point& p1 = vertices_[cell[1]];
      const Point& p2 = vertices_[cell[2]];
      Mat2 jac;
      jac.col(0) = p1 - p0;
      jac.col(1) = p2 - p0;
      const double det = jac.determinant();
      require(std::abs(det) > 0.0, "degenerate triangle " + std::to_string(c));
      measure_[c] = 0.5 * std::abs(det);
      // Rows of J^{-1} are the gradients of the barycentric coordinates 1 and 2.
      const Mat2 inv = jac.inverse();
      const Vec2 g1 = inv.row(0).transpose();
      const Vec2 g2 = inv.row(1).transpose();
      gradients_[c * nv + 0] = -g1 - g2;
      gradients_[c * nv + 1] = g1;
      gradients_[c * nv + 2] = g2;
      const double diam = std::max({(p1 - p0).norm(), (p2 - p0).norm(), (p2 - p1).norm()});
      h_max_ = std::max(h_max_, diam);
    }
  }
}

std::vector<std::size_t> Mesh::boundary_vertices() const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < on_boundary_.size(); ++v) {
    if (on_boundary_[v]) {
      out.push_back(v);
    }
  }
  return out;
}

std::span<const Vec2> Mesh::basis_gradients(std::size_t c) const {
  const std::size_t nv = vertices_per_cell();
  return {gradients_.data() + c * nv, nv};
}

Point Mesh::map(std::size_t c, std::span<const double> bary) const {
  Point x = Point::Zero();
  const Cell& cell = cells_[c];
  for (std::size_t k = 0; k < vertices_per_cell(); ++k) {
    x += bary[k] * vertices_[cell[k]];
  }
  return x;
}

double Mesh::domain_measure() const noexcept {
  double total = 0.0;
  for (double m : measure_) {
    total += m;
  }
  return total;
}

Mesh build_mesh(int dim, int m) {
  if (m < 2) {
    throw Error(ErrorCode::invalid_resolution,
                "mesh resolution must be at least 2, got " + std::to_string(m));
  }
  if (dim == 1) {
    std::vector<Point> vertices(m + 1);
    std::vector<bool> boundary(m + 1, false);
    std::vector<Mesh::Cell> cells(m);
    for (int i = 0; i <= m; ++i) {
      vertices[i] = Point(static_cast<double>(i) / m, 0.0);
    }
    boundary.front() = true;
    boundary.back() = true;
    for (int i = 0; i < m; ++i) {
      cells[i] = {static_cast<std::size_t>(i), static_cast<std::size_t>(i + 1), Mesh::npos};
    }
    return Mesh(1, std::move(vertices), std::move(cells), std::move(boundary), m);
  }
  if (dim != 2) {
    throw Error(ErrorCode::config, "mesh dimension must be 1 or 2, got " + std::to_string(dim));
  }

  const int n = m + 1;
  auto id = [n](int i, int j) { return static_cast<std::size_t>(j * n + i); };
  std::vector<Point> vertices(static_cast<std::size_t>(n) * n);
  std::vector<bool> boundary(vertices.size(), false);
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) {
      vertices[id(i, j)] = Point(static_cast<double>(i) / m, static_cast<double>(j) / m);
      boundary[id(i, j)] = i == 0 || j == 0 || i == m || j == m;
    }
  }
  std::vector<Mesh::Cell> cells;
  cells.reserve(2 * static_cast<std::size_t>(m) * m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const auto v00 = id(i, j);
      const auto v10 = id(i + 1, j);
      const auto v01 = id(i, j + 1);
      const auto v11 = id(i + 1, j + 1);
      // Even squares split along "/", odd squares along "\"; this keeps the
      // diagonals of a coarse square inside its children after refinement.
      if ((i + j) % 2 == 0) {
        cells.push_back({v00, v10, v11});
        cells.push_back({v00, v11, v01});
      } else {
        cells.push_back({v00, v10, v01});
        cells.push_back({v10, v11, v01});
      }
    }
  }
  return Mesh(2, std::move(vertices), std::move(cells), std::move(boundary), m);
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  char buf[128];
  os << mesh.dim() << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells() << '\n';
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const Point& p = mesh.vertex(v);
    if (mesh.dim() == 1) {
      std::snprintf(buf, sizeof buf, "%zu %.17g %d\n", v, p.x(), mesh.is_boundary(v) ? 1 : 0);
    } else {
      std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %d\n", v, p.x(), p.y(),
                    mesh.is_boundary(v) ? 1 : 0);
    }
    os << buf;
  }
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto& cell = mesh.cell(c);
    os << c;
    for (std::size_t k = 0; k < mesh.vertices_per_cell(); ++k) {
      os << ' ' << cell[k];
    }
    os << '\n';
  }
}

}  // namespace mopar
