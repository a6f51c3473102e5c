#include "picarz/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>

#include "picarz/error.hpp"

namespace picarz {
namespace {

constexpr double kInsideTolerance = 1e-12;

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Positive when d lies strictly inside the circumcircle of counter-clockwise (a, b, c).
double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

void check_non_degenerate(std::span<const Point2> pts) {
  if (pts.size() < 3) throw InputError("degenerate point set");
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InputError("non-finite location");
  }
  const Point2 p0 = pts[0];
  std::size_t far = 0;
  double best = -1.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = std::hypot(pts[i].x - p0.x, pts[i].y - p0.y);
    if (d > best) {
      best = d;
      far = i;
    }
  }
  if (best <= 0.0) throw InputError("degenerate point set");
  double max_cross = 0.0;
  for (const auto& q : pts) max_cross = std::max(max_cross, std::abs(cross(p0, pts[far], q)));
  if (max_cross <= 1e-12 * best * best) throw InputError("degenerate point set");
}

// Grid shape whose vertex count is close to target and whose cells are close to square.
std::pair<Index, Index> lattice_shape(Index target, double width, double height) {
  const double aspect = width / height;
  Index best_nx = 2, best_ny = 2;
  double best_aspect_err = std::numeric_limits<double>::infinity();
  double best_count_err = std::numeric_limits<double>::infinity();
  bool have_within = false;
  for (Index nx = 2; nx <= std::max<Index>(2, target / 2); ++nx) {
    const Index ny = std::max<Index>(2, std::llround(static_cast<double>(target) / nx));
    const double count_err =
        std::abs(static_cast<double>(nx * ny - target)) / static_cast<double>(target);
    const double aspect_err =
        std::abs(std::log((static_cast<double>(nx - 1) / static_cast<double>(ny - 1)) / aspect));
    const bool within = count_err <= 0.1;
    if (within) {
      if (!have_within || aspect_err < best_aspect_err ||
          (aspect_err == best_aspect_err && count_err < best_count_err)) {
        have_within = true;
        best_nx = nx;
        best_ny = ny;
        best_aspect_err = aspect_err;
        best_count_err = count_err;
      }
    } else if (!have_within && (count_err < best_count_err ||
                                (count_err == best_count_err && aspect_err < best_aspect_err))) {
      best_nx = nx;
      best_ny = ny;
      best_aspect_err = aspect_err;
      best_count_err = count_err;
    }
  }
  return {best_nx, best_ny};
}

TriangleMesh lattice_mesh(const BoundingBox& box, Index target, double padding) {
  const auto [nx, ny] = lattice_shape(target, box.width(), box.height());
  std::vector<Point2> vertices;
  vertices.reserve(static_cast<std::size_t>(nx * ny));
  for (Index j = 0; j < ny; ++j) {
    // Pin the last row/column to the box edge exactly.
    const double y = j + 1 == ny ? box.ymax : box.ymin + box.height() * j / (ny - 1);
    for (Index i = 0; i < nx; ++i) {
      const double x = i + 1 == nx ? box.xmax : box.xmin + box.width() * i / (nx - 1);
      vertices.push_back({x, y});
    }
  }
  std::vector<Triangle> triangles;
  triangles.reserve(static_cast<std::size_t>(2 * (nx - 1) * (ny - 1)));
  for (Index j = 0; j + 1 < ny; ++j) {
    for (Index i = 0; i + 1 < nx; ++i) {
      const Index v00 = j * nx + i, v10 = v00 + 1, v01 = v00 + nx, v11 = v01 + 1;
      triangles.push_back({v00, v10, v11});
      triangles.push_back({v00, v11, v01});
    }
  }
  return TriangleMesh(std::move(vertices), std::move(triangles), padding);
}

// Bowyer-Watson incremental insertion inside a large super triangle.
std::vector<Triangle> bowyer_watson(const std::vector<Point2>& pts) {
  const BoundingBox box = bounding_box(pts);
  const double span = std::max(box.width(), box.height());
  const Point2 c{0.5 * (box.xmin + box.xmax), 0.5 * (box.ymin + box.ymax)};
  std::vector<Point2> all = pts;
  const Index s0 = static_cast<Index>(all.size());
  all.push_back({c.x - 40.0 * span, c.y - 20.0 * span});
  all.push_back({c.x + 40.0 * span, c.y - 20.0 * span});
  all.push_back({c.x, c.y + 40.0 * span});

  std::vector<Triangle> tris{{s0, s0 + 1, s0 + 2}};
  std::vector<char> bad;
  std::vector<std::pair<Index, Index>> edges;
  for (Index p = 0; p < s0; ++p) {
    const Point2& q = all[p];
    bad.assign(tris.size(), 0);
    edges.clear();
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const auto& tr = tris[t];
      if (incircle(all[tr[0]], all[tr[1]], all[tr[2]], q) > 0.0) {
        bad[t] = 1;
        for (int e = 0; e < 3; ++e) edges.emplace_back(tr[e], tr[(e + 1) % 3]);
      }
    }
    // Cavity boundary: directed edges whose reverse is not also present.
    std::vector<std::pair<Index, Index>> boundary;
    std::sort(edges.begin(), edges.end());
    for (const auto& e : edges) {
      if (!std::binary_search(edges.begin(), edges.end(), std::make_pair(e.second, e.first))) {
        boundary.push_back(e);
      }
    }
    std::vector<Triangle> next;
    next.reserve(tris.size() + boundary.size());
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!bad[t]) next.push_back(tris[t]);
    }
    for (const auto& e : boundary) next.push_back({e.first, e.second, p});
    tris.swap(next);
  }
  std::vector<Triangle> out;
  for (const auto& tr : tris) {
    if (tr[0] >= s0 || tr[1] >= s0 || tr[2] >= s0) continue;
    if (cross(pts[tr[0]], pts[tr[1]], pts[tr[2]]) <= 0.0) continue;
    out.push_back(tr);
  }
  return out;
}

TriangleMesh delaunay_mesh(std::span<const Point2> locations, const BoundingBox& box,
                           Index target, double padding) {
  std::vector<Point2> pts;
  const Index per_side = std::max<Index>(2, std::llround(std::sqrt(static_cast<double>(target))));
  for (Index k = 0; k < per_side; ++k) {
    const double t = static_cast<double>(k) / per_side;
    pts.push_back({box.xmin + t * box.width(), box.ymin});
    pts.push_back({box.xmax, box.ymin + t * box.height()});
    pts.push_back({box.xmax - t * box.width(), box.ymax});
    pts.push_back({box.xmin, box.ymax - t * box.height()});
  }
  pts.insert(pts.end(), locations.begin(), locations.end());
  std::vector<Point2> unique;
  unique.reserve(pts.size());
  {
    std::vector<std::size_t> order(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(pts[a].x, pts[a].y) < std::tie(pts[b].x, pts[b].y);
    });
    std::vector<char> keep(pts.size(), 1);
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (pts[order[i]] == pts[order[i - 1]]) keep[order[i]] = 0;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (keep[i]) unique.push_back(pts[i]);
    }
  }
  auto triangles = bowyer_watson(unique);
  return TriangleMesh(std::move(unique), std::move(triangles), padding);
}

}  // namespace

BoundingBox BoundingBox::padded(double fraction) const {
  const double dx = fraction * width();
  const double dy = fraction * height();
  return {xmin - dx, xmax + dx, ymin - dy, ymax + dy};
}

BoundingBox bounding_box(std::span<const Point2> points) {
  if (points.empty()) throw InputError("bounding_box: empty point set");
  BoundingBox b{points[0].x, points[0].x, points[0].y, points[0].y};
  for (const auto& p : points) {
    b.xmin = std::min(b.xmin, p.x);
    b.xmax = std::max(b.xmax, p.x);
    b.ymin = std::min(b.ymin, p.y);
    b.ymax = std::max(b.ymax, p.y);
  }
  return b;
}

TriangleMesh::TriangleMesh(std::vector<Point2> vertices, std::vector<Triangle> triangles,
                           double boundary_padding)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), padding_(boundary_padding) {
  if (vertices_.size() < 3 || triangles_.empty()) throw InputError("mesh needs vertices and triangles");
  const Index m = vertex_count();
  for (auto& t : triangles_) {
    for (Index v : t) {
      if (v < 0 || v >= m) throw InputError("mesh triangle references a missing vertex");
    }
    const double area = cross(vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
    if (area == 0.0) throw InputError("mesh contains a zero-area triangle");
    if (area < 0.0) std::swap(t[1], t[2]);
  }
  bounds_ = bounding_box(vertices_);
  build_index();
}

double TriangleMesh::signed_area(Index t) const {
  const auto& tr = triangles_[t];
  return 0.5 * cross(vertices_[tr[0]], vertices_[tr[1]], vertices_[tr[2]]);
}

void TriangleMesh::build_index() {
  const double n = static_cast<double>(triangles_.size());
  const Index side = std::max<Index>(1, static_cast<Index>(std::sqrt(n / 2.0)));
  grid_nx_ = grid_ny_ = side;
  cell_w_ = std::max(bounds_.width(), 1e-300) / grid_nx_;
  cell_h_ = std::max(bounds_.height(), 1e-300) / grid_ny_;
  buckets_.assign(static_cast<std::size_t>(grid_nx_ * grid_ny_), {});
  auto cell_x = [&](double x) {
    return std::clamp<Index>(static_cast<Index>(std::floor((x - bounds_.xmin) / cell_w_)), 0,
                             grid_nx_ - 1);
  };
  auto cell_y = [&](double y) {
    return std::clamp<Index>(static_cast<Index>(std::floor((y - bounds_.ymin) / cell_h_)), 0,
                             grid_ny_ - 1);
  };
  for (Index t = 0; t < triangle_count(); ++t) {
    const auto& tr = triangles_[t];
    double x0 = vertices_[tr[0]].x, x1 = x0, y0 = vertices_[tr[0]].y, y1 = y0;
    for (int k = 1; k < 3; ++k) {
      x0 = std::min(x0, vertices_[tr[k]].x);
      x1 = std::max(x1, vertices_[tr[k]].x);
      y0 = std::min(y0, vertices_[tr[k]].y);
      y1 = std::max(y1, vertices_[tr[k]].y);
    }
    const double ex = 1e-9 * cell_w_, ey = 1e-9 * cell_h_;
    for (Index j = cell_y(y0 - ey); j <= cell_y(y1 + ey); ++j) {
      for (Index i = cell_x(x0 - ex); i <= cell_x(x1 + ex); ++i) {
        buckets_[static_cast<std::size_t>(j * grid_nx_ + i)].push_back(t);
      }
    }
  }
}

bool TriangleMesh::barycentric(Index t, const Point2& p, std::array<double, 3>& w) const {
  const auto& tr = triangles_[t];
  const Point2& a = vertices_[tr[0]];
  const Point2& b = vertices_[tr[1]];
  const Point2& c = vertices_[tr[2]];
  const double det = (b.y - c.y) * (a.x - c.x) + (c.x - b.x) * (a.y - c.y);
  w[0] = ((b.y - c.y) * (p.x - c.x) + (c.x - b.x) * (p.y - c.y)) / det;
  w[1] = ((c.y - a.y) * (p.x - c.x) + (a.x - c.x) * (p.y - c.y)) / det;
  w[2] = 1.0 - w[0] - w[1];
  if (w[0] < -kInsideTolerance || w[1] < -kInsideTolerance || w[2] < -kInsideTolerance) return false;
  double sum = 0.0;
  for (double& v : w) {
    v = std::clamp(v, 0.0, 1.0);
    sum += v;
  }
  for (double& v : w) v /= sum;
  return true;
}

Location TriangleMesh::locate(const Point2& p) const {
  const double tx = 1e-12 * std::max(1.0, bounds_.width());
  const double ty = 1e-12 * std::max(1.0, bounds_.height());
  if (!(p.x >= bounds_.xmin - tx && p.x <= bounds_.xmax + tx && p.y >= bounds_.ymin - ty &&
        p.y <= bounds_.ymax + ty)) {
    throw InputError("location outside mesh");
  }
  const Index i = std::clamp<Index>(static_cast<Index>(std::floor((p.x - bounds_.xmin) / cell_w_)),
                                    0, grid_nx_ - 1);
  const Index j = std::clamp<Index>(static_cast<Index>(std::floor((p.y - bounds_.ymin) / cell_h_)),
                                    0, grid_ny_ - 1);
  Location loc;
  for (Index t : buckets_[static_cast<std::size_t>(j * grid_nx_ + i)]) {
    if (barycentric(t, p, loc.weights)) {
      loc.triangle = t;
      return loc;
    }
  }
  throw InputError("location outside mesh");
}

TriangleMesh build_mesh(std::span<const Point2> locations, const MeshOptions& options) {
  if (options.target_vertices < 4) throw InputError("target_vertices must be at least 4");
  if (!(options.padding >= 0.0)) throw InputError("padding must be non-negative");
  check_non_degenerate(locations);
  const BoundingBox box = bounding_box(locations).padded(options.padding);
  if (options.mode == MeshMode::regular_lattice) {
    return lattice_mesh(box, options.target_vertices, options.padding);
  }
  return delaunay_mesh(locations, box, options.target_vertices, options.padding);
}

AdjacencyMatrix adjacency_from_edges(Index vertex_count,
                                     std::span<const std::pair<Index, Index>> edges) {
  std::vector<std::pair<Index, Index>> unique;
  unique.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a == b) continue;
    if (a < 0 || b < 0 || a >= vertex_count || b >= vertex_count) {
      throw InputError("adjacency: edge references a missing vertex");
    }
    unique.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * unique.size());
  for (auto [a, b] : unique) {
    trips.emplace_back(a, b, 1.0);
    trips.emplace_back(b, a, 1.0);
  }
  AdjacencyMatrix adj;
  adj.weights.resize(vertex_count, vertex_count);
  adj.weights.setFromTriplets(trips.begin(), trips.end());
  adj.weights.makeCompressed();
  adj.degree = adj.weights * Eigen::VectorXd::Ones(vertex_count);
  return adj;
}

AdjacencyMatrix adjacency(const TriangleMesh& mesh) {
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(3 * mesh.triangles().size());
  for (const auto& t : mesh.triangles()) {
    edges.emplace_back(t[0], t[1]);
    edges.emplace_back(t[1], t[2]);
    edges.emplace_back(t[2], t[0]);
  }
  return adjacency_from_edges(mesh.vertex_count(), edges);
}

SparseRowMatrix build_projector(const TriangleMesh& mesh, std::span<const Point2> sites) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(3 * sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const Location loc = mesh.locate(sites[i]);
    const auto& tr = mesh.triangles()[loc.triangle];
    for (int k = 0; k < 3; ++k) {
      if (loc.weights[k] != 0.0) {
        trips.emplace_back(static_cast<Index>(i), tr[k], loc.weights[k]);
      }
    }
  }
  SparseRowMatrix a(static_cast<Index>(sites.size()), mesh.vertex_count());
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

void write_mesh(std::ostream& out, const TriangleMesh& mesh) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << mesh.vertex_count() << ' ' << mesh.triangle_count() << '\n';
  for (const auto& v : mesh.vertices()) out << v.x << ' ' << v.y << '\n';
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out.precision(old);
  if (!out) throw IoError("failed to write mesh");
}

TriangleMesh read_mesh(std::istream& in) {
  Index m = 0, t = 0;
  if (!(in >> m >> t) || m < 3 || t < 1) throw InputError("mesh file: bad header");
  std::vector<Point2> vertices(static_cast<std::size_t>(m));
  for (auto& v : vertices) {
    if (!(in >> v.x >> v.y)) throw InputError("mesh file: truncated vertex list");
  }
  std::vector<Triangle> triangles(static_cast<std::size_t>(t));
  for (auto& tr : triangles) {
    if (!(in >> tr[0] >> tr[1] >> tr[2])) throw InputError("mesh file: truncated triangle list");
  }
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

}  // namespace picarz
