#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace navcarve {

using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Relative tolerance applied to the local diameter for all geometric predicates.
inline constexpr double kRelTol = 1e-9;

/// Region {x | a.x <= b}. The normal need not be unit length.
struct Halfspace {
  Vec3 a = Vec3::UnitX();
  double b = 0.0;

  Halfspace() = default;
  Halfspace(const Vec3& normal, double offset) : a(normal), b(offset) {}

  /// Same region with a unit normal.
  Halfspace normalized() const;
};

struct Polytope {
  std::vector<Halfspace> halfspaces;
  bool bounded_flag = false;

  std::size_t size() const { return halfspaces.size(); }
  bool empty() const { return halfspaces.empty(); }
};

/// {C x + d : |x| <= 1} with C symmetric positive-definite.
struct Ellipsoid {
  Mat3 C = Mat3::Identity();
  Point3 d = Point3::Zero();

  static Ellipsoid ball(const Point3& center, double radius);

  double volume() const;
  double det() const;
};

struct Aabb {
  Point3 min = Point3::Constant(std::numeric_limits<double>::infinity());
  Point3 max = Point3::Constant(-std::numeric_limits<double>::infinity());

  static Aabb of(std::span<const Point3> points);

  bool valid() const { return (min.array() <= max.array()).all(); }
  void extend(const Point3& p);
  bool contains(const Point3& p, double tol = 0.0) const;
  bool intersects(const Aabb& other, double tol = 0.0) const;
  double volume() const;
  double diameter() const;
  Aabb inflated(double margin) const;
};

using Triangle = std::array<std::uint32_t, 3>;

/// Closed triangle mesh. Triangles sharing a facet_group lie on one supporting
/// plane; for polytope hulls the group is the index of the originating halfspace.
struct TriangleMesh {
  std::vector<Point3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Halfspace> facet_plane;  // unit outward normal per triangle
  std::vector<std::int32_t> facet_group;

  bool empty() const { return triangles.empty(); }
  double diameter() const;
  double volume() const;
  double surface_area() const;
  Aabb bounds() const { return Aabb::of(vertices); }
};

struct RayHit {
  Point3 point;
  std::size_t facet = 0;  // halfspace index (polytope) or triangle index (mesh)
  double t = 0.0;
};

/// a.p - b; positive means p lies outside the halfspace region.
double halfspace_margin(const Halfspace& h, const Point3& p);

/// True iff every constraint satisfies a.p - b <= tol.
bool polytope_contains(const Polytope& q, const Point3& p, double tol);

/// Largest normalized violation max_j (a_j.p - b_j)/|a_j|.
double polytope_max_margin(const Polytope& q, const Point3& p);

/// Polytope whose halfspaces all have unit normals.
Polytope normalized(const Polytope& q);

/// Axis-aligned box [lo, hi] as six unit-normal halfspaces, ordered
/// +x, -x, +y, -y, +z, -z.
Polytope box_polytope(const Point3& lo, const Point3& hi);

/// Vertices of the halfspace intersection, via the polar dual around an
/// interior point. Throws InfeasibleInterior / UnboundedPolytope.
std::vector<Point3> polytope_vertices(const Polytope& q, const Point3& interior);

/// Hull mesh of a bounded polytope. Triangle facet groups are relabelled with
/// the index of the lowest-numbered halfspace whose plane carries them.
TriangleMesh polytope_hull(const Polytope& q, const Point3& interior);

/// First boundary crossing of origin + t*direction, t > 0. Ties within a
/// relative 1e-12 go to the lowest facet index.
RayHit ray_exit(const Polytope& q, const Point3& origin, const Vec3& direction);
RayHit ray_exit(const TriangleMesh& mesh, const Point3& origin, const Vec3& direction);

/// Deterministic uniform double in [0,1) from a 64-bit engine draw.
double unit_uniform(std::uint64_t bits);

double monte_carlo_volume(const std::function<bool(const Point3&)>& inside, const Aabb& bounds,
                          std::size_t n, std::uint64_t rng_seed);

}  // namespace navcarve
