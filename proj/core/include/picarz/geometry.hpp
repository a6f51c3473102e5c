#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace picarz {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct BoundingBox {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(const Point2& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  /// Expand by `fraction` of the span on every side.
  BoundingBox padded(double fraction) const;
};

BoundingBox bounding_box(std::span<const Point2> points);

enum class MeshMode { regular_lattice, delaunay };

using Triangle = std::array<Index, 3>;

/// Barycentric location of a point inside a mesh triangle.
struct Location {
  Index triangle = -1;
  std::array<double, 3> weights{};
};

/// Immutable triangular mesh. Triangles are stored counter-clockwise and a
/// bucket grid over triangle bounding boxes accelerates point location.
class TriangleMesh {
 public:
  TriangleMesh(std::vector<Point2> vertices, std::vector<Triangle> triangles,
               double boundary_padding = 0.0);

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  double boundary_padding() const { return padding_; }
  Index vertex_count() const { return static_cast<Index>(vertices_.size()); }
  Index triangle_count() const { return static_cast<Index>(triangles_.size()); }
  BoundingBox bounds() const { return bounds_; }

  double signed_area(Index t) const;

  /// Containing triangle (lowest index on ties) and barycentric weights.
  /// Throws InputError("location outside mesh") when no triangle contains p.
  Location locate(const Point2& p) const;

 private:
  void build_index();
  bool barycentric(Index t, const Point2& p, std::array<double, 3>& w) const;

  std::vector<Point2> vertices_;
  std::vector<Triangle> triangles_;
  double padding_;
  BoundingBox bounds_;
  Index grid_nx_ = 1, grid_ny_ = 1;
  double cell_w_ = 1.0, cell_h_ = 1.0;
  std::vector<std::vector<Index>> buckets_;
};

struct MeshOptions {
  MeshMode mode = MeshMode::regular_lattice;
  Index target_vertices = 400;
  double padding = 0.1;
};

/// Mesh enveloping `locations`; its outer boundary is the location bounding
/// box expanded by `padding` of the span on every side.
TriangleMesh build_mesh(std::span<const Point2> locations, const MeshOptions& options);

/// Vertex adjacency of the mesh graph.
struct AdjacencyMatrix {
  SparseMatrix weights;     ///< symmetric 0/1, zero diagonal
  Eigen::VectorXd degree;   ///< weights * 1

  Index size() const { return weights.rows(); }
  Index edge_count() const { return weights.nonZeros() / 2; }
};

AdjacencyMatrix adjacency(const TriangleMesh& mesh);

/// Build adjacency directly from an undirected edge list (used for graphs
/// that do not come from a mesh).
AdjacencyMatrix adjacency_from_edges(Index vertex_count,
                                     std::span<const std::pair<Index, Index>> edges);

/// n x m piecewise-linear interpolation matrix; row i holds the barycentric
/// weights of sites[i] in its containing triangle.
SparseRowMatrix build_projector(const TriangleMesh& mesh, std::span<const Point2> sites);

/// Text format: "m t", m lines "x y", t lines "i j k" (0-based).
void write_mesh(std::ostream& out, const TriangleMesh& mesh);
TriangleMesh read_mesh(std::istream& in);

}  // namespace picarz
