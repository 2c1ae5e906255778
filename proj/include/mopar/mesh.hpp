#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mopar {

using Point = Eigen::Vector2d;  ///< 1D meshes keep the second coordinate at zero
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Simplicial mesh of (0,1) or (0,1)^2. Cells store 2 (segment) or 3
/// (triangle) vertex indices; unused slots hold npos.
class Mesh {
public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  using Cell = std::array<std::size_t, 3>;

  Mesh(int dim, std::vector<Point> vertices, std::vector<Cell> cells,
       std::vector<bool> on_boundary, int resolution);

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] int resolution() const noexcept { return resolution_; }
  [[nodiscard]] std::size_t num_vertices() const noexcept { return vertices_.size(); }
  [[nodiscard]] std::size_t num_cells() const noexcept { return cells_.size(); }
  [[nodiscard]] std::size_t vertices_per_cell() const noexcept { return dim_ + 1; }

  [[nodiscard]] const Point& vertex(std::size_t v) const { return vertices_[v]; }
  [[nodiscard]] const Cell& cell(std::size_t c) const { return cells_[c]; }
  [[nodiscard]] bool is_boundary(std::size_t v) const { return on_boundary_[v]; }
  [[nodiscard]] std::vector<std::size_t> boundary_vertices() const;

  /// Length or area of cell c.
  [[nodiscard]] double measure(std::size_t c) const { return measure_[c]; }
  /// Constant gradients of the P1 basis functions attached to the cell's vertices.
  [[nodiscard]] std::span<const Vec2> basis_gradients(std::size_t c) const;
  /// Physical point for barycentric coordinates on cell c.
  [[nodiscard]] Point map(std::size_t c, std::span<const double> bary) const;

  [[nodiscard]] double h_max() const noexcept { return h_max_; }
  /// Total measure of the domain.
  [[nodiscard]] double domain_measure() const noexcept;

private:
  int dim_;
  int resolution_;
  std::vector<Point> vertices_;
  std::vector<Cell> cells_;
  std::vector<bool> on_boundary_;
  std::vector<double> measure_;
  std::vector<Vec2> gradients_;  // vertices_per_cell() entries per cell
  double h_max_ = 0.0;
};

/// Uniform partition of (0,1) into m cells (dim 1), or the union-jack
/// triangulation of the unit square with 2 m^2 triangles (dim 2). Doubling m
/// yields a nested refinement in both cases.
Mesh build_mesh(int dim, int m);

/// Plain-text listing: a header line "dim nv nc", one line per vertex
/// "id x [y] boundary", then one line per cell with its vertex ids.
void write_mesh(std::ostream& os, const Mesh& mesh);

}  // namespace mopar
