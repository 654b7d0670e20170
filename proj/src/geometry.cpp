#include "epibarrier/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace epibarrier::geometry {

namespace {

double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

bool on_segment(Point2 p, Point2 a, Point2 b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

Point3 sub(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Point3 add(Point3 a, Point3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Point3 scale(Point3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
double dot(Point3 a, Point3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Point3 cross3(Point3 a, Point3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
double norm(Point3 a) { return std::sqrt(dot(a, a)); }

constexpr int kStrips = 512;
constexpr int kTargetCells = 8192;

}  // namespace

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

std::vector<std::size_t> simplify_polyline(const std::vector<Point2>& pts, double tol) {
  const std::size_t n = pts.size();
  if (n <= 2) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  std::vector<bool> keep(n, false);
  keep[0] = keep[n - 1] = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    double worst = -1.0;
    std::size_t at = a;
    for (std::size_t i = a + 1; i < b; ++i) {
      const double d = segment_distance(pts[i], pts[a], pts[b]);
      if (d > worst) {
        worst = d;
        at = i;
      }
    }
    if (worst > tol) {
      keep[at] = true;
      stack.push_back({a, at});
      stack.push_back({at, b});
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(i);
  }
  return out;
}

BoundaryPolygon::BoundaryPolygon(std::vector<Point2> vertices, std::vector<Portion> tags)
    : vertices_(std::move(vertices)), tags_(std::move(tags)) {
  tags_.resize(vertices_.size(), Portion::Face);
  build_index();
}

void BoundaryPolygon::build_index() {
  const std::size_t n = vertices_.size();
  if (n < 3) return;

  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -ymin;
  for (const auto& v : vertices_) {
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
  }
  strip_y0_ = ymin;
  strip_dy_ = std::max((ymax - ymin) / kStrips, 1e-300);
  strips_.assign(kStrips, {});
  for (std::size_t k = 0; k < n; ++k) {
    const double lo = std::min(edge_a(k).y, edge_b(k).y);
    const double hi = std::max(edge_a(k).y, edge_b(k).y);
    const int s0 = std::clamp(static_cast<int>(std::floor((lo - strip_y0_) / strip_dy_)), 0, kStrips - 1);
    const int s1 = std::clamp(static_cast<int>(std::floor((hi - strip_y0_) / strip_dy_)), 0, kStrips - 1);
    for (int s = s0; s <= s1; ++s) strips_[s].push_back(static_cast<std::uint32_t>(k));
  }

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  bool any = false;
  for (std::size_t k = 0; k < n; ++k) {
    if (tags_[k] == Portion::Face) continue;
    any = true;
    for (Point2 p : {edge_a(k), edge_b(k)}) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
  }
  if (!any) return;
  const double w = std::max(x1 - x0, 1e-12);
  const double h = std::max(y1 - y0, 1e-12);
  nx_ = std::clamp(static_cast<int>(std::sqrt(kTargetCells * w / h)), 1, kTargetCells);
  ny_ = std::clamp(kTargetCells / nx_, 1, kTargetCells);
  grid_x0_ = x0;
  grid_y0_ = y0;
  cell_w_ = w / nx_;
  cell_h_ = h / ny_;
  cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (std::size_t k = 0; k < n; ++k) {
    if (tags_[k] == Portion::Face) continue;
    const Point2 a = edge_a(k), b = edge_b(k);
    const int cx0 = std::clamp(static_cast<int>((std::min(a.x, b.x) - x0) / cell_w_), 0, nx_ - 1);
    const int cx1 = std::clamp(static_cast<int>((std::max(a.x, b.x) - x0) / cell_w_), 0, nx_ - 1);
    const int cy0 = std::clamp(static_cast<int>((std::min(a.y, b.y) - y0) / cell_h_), 0, ny_ - 1);
    const int cy1 = std::clamp(static_cast<int>((std::max(a.y, b.y) - y0) / cell_h_), 0, ny_ - 1);
    for (int cy = cy0; cy <= cy1; ++cy) {
      for (int cx = cx0; cx <= cx1; ++cx) cells_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(static_cast<std::uint32_t>(k));
    }
  }
}

bool BoundaryPolygon::contains(Point2 p) const {
  if (vertices_.size() < 3) return false;
  const int s = static_cast<int>(std::floor((p.y - strip_y0_) / strip_dy_));
  if (s < 0 || s >= kStrips) {
    // Outside the vertical extent, except for the top boundary itself.
    if (s != kStrips) return false;
  }
  const auto& edges = strips_[std::clamp(s, 0, kStrips - 1)];
  bool inside = false;
  for (std::uint32_t k : edges) {
    const Point2 a = edge_a(k), b = edge_b(k);
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

BoundaryPolygon::Nearest BoundaryPolygon::nearest(Point2 p) const {
  Nearest best{std::numeric_limits<double>::infinity(), Portion::Face, 0};
  if (cells_.empty()) return best;
  const int cx = std::clamp(static_cast<int>(std::floor((p.x - grid_x0_) / cell_w_)), 0, nx_ - 1);
  const int cy = std::clamp(static_cast<int>(std::floor((p.y - grid_y0_) / cell_h_)), 0, ny_ - 1);
  const double step = std::min(cell_w_, cell_h_);
  const int max_ring = std::max(nx_, ny_);
  auto visit = [&](int x, int y) {
    for (std::uint32_t k : cells_[static_cast<std::size_t>(y) * nx_ + x]) {
      const double d = segment_distance(p, edge_a(k), edge_b(k));
      if (d < best.distance || (d == best.distance && k < best.edge)) best = {d, tags_[k], k};
    }
  };
  for (int r = 0; r <= max_ring; ++r) {
    if (r == 0) {
      visit(cx, cy);
    } else {
      const int x0 = std::max(cx - r, 0), x1 = std::min(cx + r, nx_ - 1);
      const int y0 = std::max(cy - r + 1, 0), y1 = std::min(cy + r - 1, ny_ - 1);
      if (cy - r >= 0) {
        for (int x = x0; x <= x1; ++x) visit(x, cy - r);
      }
      if (cy + r < ny_) {
        for (int x = x0; x <= x1; ++x) visit(x, cy + r);
      }
      if (cx - r >= 0) {
        for (int y = y0; y <= y1; ++y) visit(cx - r, y);
      }
      if (cx + r < nx_) {
        for (int y = y0; y <= y1; ++y) visit(cx + r, y);
      }
    }
    if (best.distance <= r * step) break;
  }
  return best;
}

bool BoundaryPolygon::self_intersects() const {
  const std::size_t n = vertices_.size();
  if (n < 4) return false;
  // Bucket every edge by strip; only edges sharing a strip can intersect.
  for (const auto& strip : strips_) {
    for (std::size_t i = 0; i < strip.size(); ++i) {
      for (std::size_t j = i + 1; j < strip.size(); ++j) {
        const std::size_t a = strip[i], b = strip[j];
        if ((a + 1) % n == b || (b + 1) % n == a) continue;
        if (segments_intersect(edge_a(a), edge_b(a), edge_a(b), edge_b(b))) return true;
      }
    }
  }
  return false;
}

double point_triangle_distance(Point3 p, Point3 a, Point3 b, Point3 c) {
  // Closest point by Voronoi-region classification.
  const Point3 ab = sub(b, a), ac = sub(c, a), ap = sub(p, a);
  const double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0 && d2 <= 0) return norm(ap);
  const Point3 bp = sub(p, b);
  const double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0 && d4 <= d3) return norm(bp);
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double v = d1 / (d1 - d3);
    return norm(sub(p, add(a, scale(ab, v))));
  }
  const Point3 cp = sub(p, c);
  const double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0 && d5 <= d6) return norm(cp);
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double w = d2 / (d2 - d6);
    return norm(sub(p, add(a, scale(ac, w))));
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return norm(sub(p, add(b, scale(sub(c, b), w))));
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return norm(sub(p, add(a, add(scale(ab, v), scale(ac, w)))));
}

Crossing segment_triangle(Point3 p, Point3 q, Point3 a, Point3 b, Point3 c, double edge_tol) {
  const Point3 dir = sub(q, p);
  const Point3 e1 = sub(b, a), e2 = sub(c, a);
  const Point3 pv = cross3(dir, e2);
  const double det = dot(e1, pv);
  const double scale_ref = norm(dir) * norm(e1) * norm(e2);
  if (scale_ref == 0.0) return Crossing::None;
  if (std::abs(det) < 1e-12 * scale_ref) {
    // Near-parallel: only ambiguous if the segment actually runs close to the plane.
    const Point3 n = cross3(e1, e2);
    const double nn = norm(n);
    if (nn == 0.0) return Crossing::None;
    const double dist = std::abs(dot(sub(p, a), n)) / nn;
    return dist < 1e-12 ? Crossing::Ambiguous : Crossing::None;
  }
  const double inv = 1.0 / det;
  const Point3 tv = sub(p, a);
  const double u = dot(tv, pv) * inv;
  const Point3 qv = cross3(tv, e1);
  const double v = dot(dir, qv) * inv;
  const double t = dot(e2, qv) * inv;
  const double w = 1.0 - u - v;
  if (u < -edge_tol || v < -edge_tol || w < -edge_tol || t < 0.0 || t > 1.0) return Crossing::None;
  if (u < edge_tol || v < edge_tol || w < edge_tol) return Crossing::Ambiguous;
  return Crossing::Hit;
}

MeshIndex::MeshIndex(TriMesh mesh) : mesh_(std::move(mesh)) {
  boxes_.reserve(mesh_.triangles.size());
  for (const auto& tri : mesh_.triangles) {
    Box b{mesh_.vertices[tri[0]], mesh_.vertices[tri[0]]};
    for (int k = 1; k < 3; ++k) {
      const Point3 v = mesh_.vertices[tri[k]];
      b.lo = {std::min(b.lo.x, v.x), std::min(b.lo.y, v.y), std::min(b.lo.z, v.z)};
      b.hi = {std::max(b.hi.x, v.x), std::max(b.hi.y, v.y), std::max(b.hi.z, v.z)};
    }
    boxes_.push_back(b);
  }
}

double MeshIndex::distance(Point3 p) const {
  double best = std::numeric_limits<double>::infinity();
  if (empty()) return best;
  for (std::size_t k = 0; k < boxes_.size(); ++k) {
    const Box& b = boxes_[k];
    const double dx = std::max({b.lo.x - p.x, 0.0, p.x - b.hi.x});
    const double dy = std::max({b.lo.y - p.y, 0.0, p.y - b.hi.y});
    const double dz = std::max({b.lo.z - p.z, 0.0, p.z - b.hi.z});
    if (dx * dx + dy * dy + dz * dz >= best * best) continue;
    const auto& tri = mesh_.triangles[k];
    best = std::min(best, point_triangle_distance(p, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
                                                  mesh_.vertices[tri[2]]));
  }
  return best;
}

MeshIndex::Parity MeshIndex::crossings(Point3 p, Point3 q, double edge_tol) const {
  Parity out;
  if (empty()) return out;
  const Point3 lo{std::min(p.x, q.x), std::min(p.y, q.y), std::min(p.z, q.z)};
  const Point3 hi{std::max(p.x, q.x), std::max(p.y, q.y), std::max(p.z, q.z)};
  for (std::size_t k = 0; k < boxes_.size(); ++k) {
    const Box& b = boxes_[k];
    if (b.hi.x < lo.x || b.lo.x > hi.x || b.hi.y < lo.y || b.lo.y > hi.y || b.hi.z < lo.z || b.lo.z > hi.z) continue;
    const auto& tri = mesh_.triangles[k];
    switch (segment_triangle(p, q, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]], mesh_.vertices[tri[2]],
                             edge_tol)) {
      case Crossing::Hit: ++out.hits; break;
      case Crossing::Ambiguous: out.ambiguous = true; break;
      case Crossing::None: break;
    }
  }
  return out;
}

}  // namespace epibarrier::geometry
