#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace epibarrier::geometry {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Which part of a set's boundary an edge belongs to.
enum class Portion : std::uint8_t { Barrier, Usable, Face };

double segment_distance(Point2 p, Point2 a, Point2 b);
bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d);

/// Douglas–Peucker: indices of the vertices kept so that no dropped vertex lies farther
/// than `tol` from the simplified chain. Endpoints are always kept.
std::vector<std::size_t> simplify_polyline(const std::vector<Point2>& pts, double tol);

/// Closed polygon with tagged edges (edge k runs from vertex k to vertex k+1 mod n).
/// Parity queries use horizontal strips; nearest-edge queries use a uniform grid over
/// the edges that are not simplex faces.
class BoundaryPolygon {
 public:
  BoundaryPolygon() = default;
  BoundaryPolygon(std::vector<Point2> vertices, std::vector<Portion> tags);

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<Portion>& tags() const { return tags_; }
  bool empty() const { return vertices_.empty(); }

  /// Even-odd rule with a ray towards +x.
  bool contains(Point2 p) const;

  struct Nearest {
    double distance;
    Portion portion;
    std::size_t edge;
  };
  /// Closest non-face edge; distance is +inf when there is none.
  Nearest nearest(Point2 p) const;

  /// True if two non-adjacent edges intersect.
  bool self_intersects() const;

 private:
  void build_index();
  Point2 edge_a(std::size_t k) const { return vertices_[k]; }
  Point2 edge_b(std::size_t k) const { return vertices_[(k + 1) % vertices_.size()]; }

  std::vector<Point2> vertices_;
  std::vector<Portion> tags_;

  double strip_y0_ = 0.0, strip_dy_ = 1.0;
  std::vector<std::vector<std::uint32_t>> strips_;

  double grid_x0_ = 0.0, grid_y0_ = 0.0, cell_w_ = 1.0, cell_h_ = 1.0;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;
};

struct TriMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

double point_triangle_distance(Point3 p, Point3 a, Point3 b, Point3 c);

enum class Crossing { None, Hit, Ambiguous };

/// Segment p→q against triangle abc. Ambiguous when the crossing falls within
/// `edge_tol` (barycentric) of a triangle edge or the segment is near-parallel.
Crossing segment_triangle(Point3 p, Point3 q, Point3 a, Point3 b, Point3 c, double edge_tol);

/// Triangle mesh with per-triangle bounding boxes to prune distance and crossing queries.
class MeshIndex {
 public:
  MeshIndex() = default;
  explicit MeshIndex(TriMesh mesh);

  const TriMesh& mesh() const { return mesh_; }
  bool empty() const { return mesh_.triangles.empty(); }
  double distance(Point3 p) const;

  struct Parity {
    int hits = 0;
    bool ambiguous = false;
  };
  Parity crossings(Point3 p, Point3 q, double edge_tol) const;

 private:
  struct Box {
    Point3 lo, hi;
  };
  TriMesh mesh_;
  std::vector<Box> boxes_;
};

}  // namespace epibarrier::geometry
