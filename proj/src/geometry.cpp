#include "navcarve/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "navcarve/convex_hull.hpp"
#include "navcarve/error.hpp"

namespace navcarve {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::UnboundedPolytope: return "UnboundedPolytope";
    case ErrorCode::InfeasibleInterior: return "InfeasibleInterior";
    case ErrorCode::OriginOutside: return "OriginOutside";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::CenterCoincides: return "CenterCoincides";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::DegenerateSeed: return "DegenerateSeed";
    case ErrorCode::SeedOnBoundary: return "SeedOnBoundary";
    case ErrorCode::CollinearFacetPoints: return "CollinearFacetPoints";
    case ErrorCode::EmptyArea: return "EmptyArea";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Halfspace Halfspace::normalized() const {
  const double n = a.norm();
  return {a / n, b / n};
}

Ellipsoid Ellipsoid::ball(const Point3& center, double radius) {
  return {radius * Mat3::Identity(), center};
}

double Ellipsoid::det() const { return C.determinant(); }

double Ellipsoid::volume() const { return 4.0 * std::numbers::pi / 3.0 * std::abs(det()); }

Aabb Aabb::of(std::span<const Point3> points) {
  Aabb box;
  for (const Point3& p : points) box.extend(p);
  return box;
}

void Aabb::extend(const Point3& p) {
  min = min.cwiseMin(p);
  max = max.cwiseMax(p);
}

bool Aabb::contains(const Point3& p, double tol) const {
  return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
}

bool Aabb::intersects(const Aabb& other, double tol) const {
  return (min.array() <= other.max.array() + tol).all() &&
         (other.min.array() <= max.array() + tol).all();
}

double Aabb::volume() const { return valid() ? (max - min).prod() : 0.0; }

double Aabb::diameter() const { return valid() ? (max - min).norm() : 0.0; }

Aabb Aabb::inflated(double margin) const {
  return {min.array() - margin, max.array() + margin};
}

double TriangleMesh::diameter() const { return bounds().diameter(); }

double TriangleMesh::volume() const {
  if (vertices.empty()) return 0.0;
  const Point3& o = vertices.front();
  double v = 0.0;
  for (const Triangle& t : triangles) {
    v += (vertices[t[0]] - o).dot((vertices[t[1]] - o).cross(vertices[t[2]] - o));
  }
  return v / 6.0;
}

double TriangleMesh::surface_area() const {
  double area = 0.0;
  for (const Triangle& t : triangles) {
    area += 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
  }
  return area;
}

double halfspace_margin(const Halfspace& h, const Point3& p) { return h.a.dot(p) - h.b; }

bool polytope_contains(const Polytope& q, const Point3& p, double tol) {
  return std::all_of(q.halfspaces.begin(), q.halfspaces.end(),
                     [&](const Halfspace& h) { return halfspace_margin(h, p) <= tol; });
}

double polytope_max_margin(const Polytope& q, const Point3& p) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const Halfspace& h : q.halfspaces) {
    worst = std::max(worst, halfspace_margin(h, p) / h.a.norm());
  }
  return worst;
}

Polytope normalized(const Polytope& q) {
  Polytope out;
  out.bounded_flag = q.bounded_flag;
  out.halfspaces.reserve(q.size());
  for (const Halfspace& h : q.halfspaces) out.halfspaces.push_back(h.normalized());
  return out;
}

Polytope box_polytope(const Point3& lo, const Point3& hi) {
  Polytope q;
  for (int axis = 0; axis < 3; ++axis) {
    const Vec3 e = Vec3::Unit(axis);
    q.halfspaces.emplace_back(e, hi[axis]);
    q.halfspaces.emplace_back(-e, -lo[axis]);
  }
  return q;
}

std::vector<Point3> polytope_vertices(const Polytope& q, const Point3& interior) {
  if (q.empty()) throw Error(ErrorCode::UnboundedPolytope, "polytope has no halfspaces");

  // Polar dual around the interior point: halfspace a.x <= b maps to a/(b - a.x0).
  std::vector<Point3> dual;
  dual.reserve(q.size());
  for (const Halfspace& raw : q.halfspaces) {
    const Halfspace h = raw.normalized();
    const double slack = h.b - h.a.dot(interior);
    if (!(slack > 1e-9)) {
      throw Error(ErrorCode::InfeasibleInterior, "interior point does not strictly satisfy every halfspace");
    }
    dual.push_back(h.a / slack);
  }

  TriangleMesh dual_hull;
  try {
    dual_hull = convex_hull_3d(dual);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateInput) {
      throw Error(ErrorCode::UnboundedPolytope, "halfspace normals do not span 3D");
    }
    throw;
  }

  const double dual_diam = dual_hull.diameter();
  for (const Halfspace& plane : dual_hull.facet_plane) {
    if (!(plane.b > 1e-9 * dual_diam)) {
      throw Error(ErrorCode::UnboundedPolytope, "dual origin is not strictly inside the dual hull");
    }
  }

  // Each dual facet group is one primal vertex: the least-squares intersection
  // v.y = 1 over the group's dual points.
  std::map<int, std::vector<std::uint32_t>> group_vertices;
  for (std::size_t t = 0; t < dual_hull.triangles.size(); ++t) {
    auto& gv = group_vertices[dual_hull.facet_group[t]];
    gv.insert(gv.end(), dual_hull.triangles[t].begin(), dual_hull.triangles[t].end());
  }
  std::vector<Point3> vertices;
  vertices.reserve(group_vertices.size());
  for (auto& [group, ids] : group_vertices) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    Mat3 normal = Mat3::Zero();
    Vec3 rhs = Vec3::Zero();
    for (std::uint32_t id : ids) {
      const Point3& y = dual_hull.vertices[id];
      normal += y * y.transpose();
      rhs += y;
    }
    vertices.push_back(interior + normal.ldlt().solve(rhs));
  }

  // Nearly-coplanar dual groups that escaped merging produce near-duplicate vertices.
  const double diam = Aabb::of(vertices).diameter();
  std::vector<Point3> unique;
  for (const Point3& v : vertices) {
    const bool dup = std::any_of(unique.begin(), unique.end(),
                                 [&](const Point3& u) { return (u - v).norm() <= 1e-9 * diam; });
    if (!dup) unique.push_back(v);
  }
  return unique;
}

TriangleMesh polytope_hull(const Polytope& q, const Point3& interior) {
  const std::vector<Point3> verts = polytope_vertices(q, interior);
  TriangleMesh mesh = convex_hull_3d(verts);
  const double tol = 1e-7 * mesh.diameter();
  const Polytope unit = normalized(q);
  const std::int32_t fallback = static_cast<std::int32_t>(q.size());

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.triangles[t];
    std::int32_t group = -1;
    for (std::size_t j = 0; j < unit.size(); ++j) {
      const Halfspace& h = unit.halfspaces[j];
      if (h.a.dot(mesh.facet_plane[t].a) < 0.9) continue;
      const bool on = std::all_of(tri.begin(), tri.end(), [&](std::uint32_t v) {
        return std::abs(halfspace_margin(h, mesh.vertices[v])) <= tol;
      });
      if (on) {
        group = static_cast<std::int32_t>(j);
        break;
      }
    }
    if (group >= 0) {
      mesh.facet_plane[t] = unit.halfspaces[group];
      mesh.facet_group[t] = group;
    } else {
      mesh.facet_group[t] += fallback;
    }
  }
  return mesh;
}

namespace {

template <typename PlaneAt>
RayHit first_exit(std::size_t count, PlaneAt plane_at, const Point3& origin, const Vec3& direction) {
  if (!(direction.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "ray direction has zero length");
  RayHit hit;
  hit.t = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < count; ++j) {
    const Halfspace& h = plane_at(j);
    const double slack = h.b - h.a.dot(origin);
    if (!(slack > 0.0)) throw Error(ErrorCode::OriginOutside, "ray origin is not strictly inside");
    const double rate = h.a.dot(direction);
    if (rate <= 0.0) continue;
    const double t = slack / rate;
    if (t < hit.t * (1.0 - 1e-12)) {
      hit.t = t;
      hit.facet = j;
    }
  }
  if (!std::isfinite(hit.t)) throw Error(ErrorCode::UnboundedPolytope, "ray never leaves the region");
  hit.point = origin + hit.t * direction;
  return hit;
}

}  // namespace

RayHit ray_exit(const Polytope& q, const Point3& origin, const Vec3& direction) {
  return first_exit(q.size(), [&](std::size_t j) -> const Halfspace& { return q.halfspaces[j]; }, origin,
                    direction);
}

RayHit ray_exit(const TriangleMesh& mesh, const Point3& origin, const Vec3& direction) {
  return first_exit(mesh.triangles.size(),
                    [&](std::size_t j) -> const Halfspace& { return mesh.facet_plane[j]; }, origin, direction);
}

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double monte_carlo_volume(const std::function<bool(const Point3&)>& inside, const Aabb& bounds, std::size_t n,
                          std::uint64_t rng_seed) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "monte_carlo_volume needs n >= 1");
  if (!bounds.valid()) throw Error(ErrorCode::InvalidArgument, "empty sampling bounds");
  std::mt19937_64 rng(rng_seed);
  const Vec3 extent = bounds.max - bounds.min;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Point3 p;
    for (int k = 0; k < 3; ++k) p[k] = bounds.min[k] + extent[k] * unit_uniform(rng());
    if (inside(p)) ++hits;
  }
  return bounds.volume() * static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace navcarve
