#pragma once

#include <cstdint>
#include <vector>

#include "navcarve/geometry.hpp"
#include "navcarve/preprocess.hpp"
#include "navcarve/regulation.hpp"

namespace navcarve {

/// 2D working frame on a facet plane. u x v equals the plane normal.
struct FacetFrame {
  std::int32_t facet_group = 0;
  Point3 origin = Point3::Zero();
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();

  /// Canonical frame: origin is the plane point nearest the world origin.
  static FacetFrame of(const Halfspace& plane, std::int32_t facet_group = 0);

  Eigen::Vector2d to_2d(const Point3& p) const;
  Point3 to_3d(const Eigen::Vector2d& q) const;
};

/// Facet triangulation. Per-vertex source ids run parallel to mesh.vertices.
struct SurfaceMesh {
  TriangleMesh mesh;
  std::vector<std::int32_t> vertex_group;
  std::vector<std::uint32_t> vertex_seed;
  std::vector<Halfspace> vertex_plane;
  std::size_t skipped_facets = 0;  // facets with too few or collinear points

  std::size_t vertex_count() const { return mesh.vertices.size(); }
  /// Appends another mesh, offsetting its indices.
  void append(const SurfaceMesh& other);
};

struct RefineConfig {
  double cell = 0.0;        // voxel side; 0 selects 0.05 * median hull diameter
  double max_edge = 0.0;    // 0 selects 2 * cell
  double mls_radius = 0.0;  // 0 selects 3 * cell
  int mls_degree = 1;

  void validate() const;
  /// Copy with every zero field replaced by its default for `space`.
  RefineConfig resolved(const NavigableSpace& space) const;
};

/// One centroid per occupied (seed, facet, cell), re-snapped onto the facet
/// plane. Output follows the first occurrence of each cell in the input.
ProjectedCloud voxel_downsample(const ProjectedCloud& cloud, double cell);

/// Planar Delaunay triangulation of one facet's points, lifted back to 3D.
/// Cocircular ties are triangulated as a fan from the lowest input index.
/// Duplicate positions keep their first occurrence. Throws CollinearFacetPoints.
SurfaceMesh triangulate_facet(const ProjectedCloud& facet_points);

/// Triangulates every (seed, facet) group in order of first appearance.
SurfaceMesh triangulate_facets(const ProjectedCloud& cloud, std::size_t workers = 1);

/// Mesh vertices followed by evenly spaced points on every unique edge
/// longer than max_edge, ordered by edge then parameter.
ProjectedCloud densify(const SurfaceMesh& mesh, double max_edge);

/// Moving least squares with Gaussian weights exp(-d^2 / r^2). Degree 1 fits a
/// plane, degree 2 a height-field quadric over that plane. Points with fewer
/// than three other points within `radius` pass through unchanged.
PointCloud mls_smooth(const ProjectedCloud& cloud, double radius, int degree, std::size_t workers = 1);

}  // namespace navcarve
