#include "navcarve/convex_hull.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "navcarve/error.hpp"

namespace navcarve {
namespace {

struct Face {
  std::array<int, 3> v{};
  Vec3 n = Vec3::Zero();
  double off = 0.0;
  bool alive = true;
};

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

class IncrementalHull {
 public:
  IncrementalHull(const std::vector<Point3>& pts, double eps) : pts_(pts), eps_(eps) {}

  void build() {
    const int n = static_cast<int>(pts_.size());
    if (n < 4) throw Error(ErrorCode::DegenerateInput, "convex hull needs at least 4 points");

    // Initial simplex from extreme points.
    int i0 = 0;
    int i1 = -1;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      const double d = (pts_[i] - pts_[i0]).squaredNorm();
      if (d > best) best = d, i1 = i;
    }
    if (std::sqrt(best) <= eps_) throw Error(ErrorCode::DegenerateInput, "all points coincide");

    const Vec3 dir = (pts_[i1] - pts_[i0]).normalized();
    int i2 = -1;
    best = -1.0;
    for (int i = 0; i < n; ++i) {
      const Vec3 r = pts_[i] - pts_[i0];
      const double d = (r - r.dot(dir) * dir).norm();
      if (d > best) best = d, i2 = i;
    }
    if (best <= eps_) throw Error(ErrorCode::DegenerateInput, "points are collinear");

    const Vec3 pn = (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]).normalized();
    int i3 = -1;
    best = -1.0;
    for (int i = 0; i < n; ++i) {
      const double d = std::abs(pn.dot(pts_[i] - pts_[i0]));
      if (d > best) best = d, i3 = i;
    }
    if (best <= eps_) throw Error(ErrorCode::DegenerateInput, "points are coplanar");

    interior_ = (pts_[i0] + pts_[i1] + pts_[i2] + pts_[i3]) / 4.0;
    if (pn.dot(pts_[i3] - pts_[i0]) > 0.0) std::swap(i1, i2);
    add_face(i0, i1, i2);
    add_face(i0, i3, i1);
    add_face(i1, i3, i2);
    add_face(i2, i3, i0);

    // Remaining points, farthest from the simplex centroid first.
    std::vector<int> order;
    order.reserve(n);
    for (int i = 0; i < n; ++i) {
      if (i != i0 && i != i1 && i != i2 && i != i3) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return (pts_[a] - interior_).squaredNorm() > (pts_[b] - interior_).squaredNorm();
    });
    for (int i : order) insert(i);
  }

  const std::vector<Face>& faces() const { return faces_; }

 private:
  void add_face(int a, int b, int c) {
    Face f;
    f.v = {a, b, c};
    Vec3 n = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]);
    const double len = n.norm();
    f.n = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
    f.off = f.n.dot(pts_[a]);
    const int id = static_cast<int>(faces_.size());
    faces_.push_back(f);
    edges_[edge_key(a, b)] = id;
    edges_[edge_key(b, c)] = id;
    edges_[edge_key(c, a)] = id;
  }

  void kill_face(int id) {
    Face& f = faces_[id];
    f.alive = false;
    for (int k = 0; k < 3; ++k) {
      auto it = edges_.find(edge_key(f.v[k], f.v[(k + 1) % 3]));
      if (it != edges_.end() && it->second == id) edges_.erase(it);
    }
  }

  double dist(const Face& f, int p) const { return f.n.dot(pts_[p]) - f.off; }

  void insert(int p) {
    int start = -1;
    double best = eps_;
    for (int id = 0; id < static_cast<int>(faces_.size()); ++id) {
      if (!faces_[id].alive) continue;
      const double d = dist(faces_[id], p);
      if (d > best) best = d, start = id;
    }
    if (start < 0) return;

    // Connected visible region grown from the most visible face.
    std::vector<int> visible{start};
    std::unordered_set<int> seen{start};
    for (std::size_t q = 0; q < visible.size(); ++q) {
      const Face& f = faces_[visible[q]];
      for (int k = 0; k < 3; ++k) {
        auto it = edges_.find(edge_key(f.v[(k + 1) % 3], f.v[k]));
        if (it == edges_.end()) continue;
        const int nb = it->second;
        if (seen.count(nb) != 0U) continue;
        if (dist(faces_[nb], p) > eps_) {
          seen.insert(nb);
          visible.push_back(nb);
        }
      }
    }

    std::vector<std::pair<int, int>> horizon;
    for (int id : visible) {
      const Face& f = faces_[id];
      for (int k = 0; k < 3; ++k) {
        const int a = f.v[k];
        const int b = f.v[(k + 1) % 3];
        auto it = edges_.find(edge_key(b, a));
        if (it == edges_.end() || seen.count(it->second) == 0U) horizon.emplace_back(a, b);
      }
    }
    for (int id : visible) kill_face(id);
    for (const auto& [a, b] : horizon) add_face(a, b, p);
  }

  const std::vector<Point3>& pts_;
  double eps_;
  Point3 interior_ = Point3::Zero();
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, int> edges_;
};

struct BuiltHull {
  std::vector<Face> faces;  // alive only
  std::vector<int> group;
};

BuiltHull build_hull(const std::vector<Point3>& pts, double eps) {
  IncrementalHull hull(pts, eps);
  hull.build();
  BuiltHull out;
  for (const Face& f : hull.faces()) {
    if (f.alive) out.faces.push_back(f);
  }

  // Merge edge-adjacent coplanar triangles into facet groups.
  const int nf = static_cast<int>(out.faces.size());
  std::unordered_map<std::uint64_t, int> edge_face;
  for (int i = 0; i < nf; ++i) {
    const auto& v = out.faces[i].v;
    for (int k = 0; k < 3; ++k) edge_face[edge_key(v[k], v[(k + 1) % 3])] = i;
  }
  std::vector<int> parent(nf);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < nf; ++i) {
    const Face& f = out.faces[i];
    for (int k = 0; k < 3; ++k) {
      auto it = edge_face.find(edge_key(f.v[(k + 1) % 3], f.v[k]));
      if (it == edge_face.end()) continue;
      const Face& g = out.faces[it->second];
      int apex = -1;
      for (int m = 0; m < 3; ++m) {
        if (g.v[m] != f.v[k] && g.v[m] != f.v[(k + 1) % 3]) apex = g.v[m];
      }
      if (apex >= 0 && std::abs(f.n.dot(pts[apex]) - f.off) <= eps && f.n.dot(g.n) > 0.0) {
        const int ra = find(i);
        const int rb = find(it->second);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  }
  std::unordered_map<int, int> label;
  out.group.resize(nf);
  for (int i = 0; i < nf; ++i) {
    const int r = find(i);
    auto [it, inserted] = label.emplace(r, static_cast<int>(label.size()));
    out.group[i] = it->second;
  }
  return out;
}

}  // namespace

TriangleMesh convex_hull_3d(std::span<const Point3> points, double rel_tol) {
  for (const Point3& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite point in hull input");
  }
  if (points.size() < 4) throw Error(ErrorCode::DegenerateInput, "convex hull needs at least 4 points");

  std::vector<Point3> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Point3& a, const Point3& b) {
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  const double diam = Aabb::of(pts).diameter();
  const double eps = std::max(rel_tol * diam, std::numeric_limits<double>::min());

  BuiltHull hull = build_hull(pts, eps);
  // Rebuild on strict corners only: a corner touches at least three facet groups.
  for (int pass = 0; pass < 3; ++pass) {
    std::vector<std::vector<int>> incident(pts.size());
    for (std::size_t i = 0; i < hull.faces.size(); ++i) {
      for (int v : hull.faces[i].v) incident[v].push_back(hull.group[i]);
    }
    std::vector<Point3> corners;
    bool dropped = false;
    for (std::size_t v = 0; v < pts.size(); ++v) {
      auto& g = incident[v];
      if (g.empty()) continue;
      std::sort(g.begin(), g.end());
      g.erase(std::unique(g.begin(), g.end()), g.end());
      if (g.size() >= 3) {
        corners.push_back(pts[v]);
      } else {
        dropped = true;
      }
    }
    if (!dropped) break;
    pts = std::move(corners);
    hull = build_hull(pts, eps);
  }

  // Compact vertices to those referenced, preserving canonical order.
  std::vector<int> remap(pts.size(), -1);
  for (const Face& f : hull.faces) {
    for (int v : f.v) remap[v] = 0;
  }
  TriangleMesh mesh;
  for (std::size_t v = 0; v < pts.size(); ++v) {
    if (remap[v] == 0) {
      remap[v] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(pts[v]);
    }
  }
  for (std::size_t i = 0; i < hull.faces.size(); ++i) {
    const Face& f = hull.faces[i];
    mesh.triangles.push_back({static_cast<std::uint32_t>(remap[f.v[0]]),
                              static_cast<std::uint32_t>(remap[f.v[1]]),
                              static_cast<std::uint32_t>(remap[f.v[2]])});
    mesh.facet_plane.emplace_back(f.n, f.off);
    mesh.facet_group.push_back(hull.group[i]);
  }
  return mesh;
}

}  // namespace navcarve
