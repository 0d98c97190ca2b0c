#include "navcarve/regulation.hpp"

#include <algorithm>
#include <string>

#include "navcarve/error.hpp"
#include "navcarve/mvie.hpp"
#include "navcarve/parallel.hpp"

namespace navcarve {

bool NavigableSpace::adjacent(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(adjacency.begin(), adjacency.end(), std::make_pair(i, j));
}

Aabb NavigableSpace::bounds() const {
  Aabb box;
  for (const RegionResult& r : regions) {
    for (const Point3& v : r.hull.vertices) box.extend(v);
  }
  return box;
}

RegionResult region_from_polytope(std::uint32_t seed_id, const Point3& seed, const Polytope& q) {
  RegionResult r;
  r.seed_id = seed_id;
  r.seed = seed;
  r.polytope = normalized(q);
  r.ellipsoid = inscribed_ellipsoid(r.polytope);
  r.hull = polytope_hull(r.polytope, seed);
  r.det_history = {r.ellipsoid.det()};
  return r;
}

bool polytopes_overlap(const Polytope& a, const Polytope& b, double rel_tol) {
  Polytope joint = a;
  joint.halfspaces.insert(joint.halfspaces.end(), b.halfspaces.begin(), b.halfspaces.end());
  const ChebyshevBall ball = chebyshev_center(joint);
  // Scale: the Chebyshev solve is exact up to its barrier gap, so compare with
  // the offset magnitude of the constraints around the found center.
  double scale = 0.0;
  for (const Halfspace& h : joint.halfspaces) {
    const Halfspace u = h.normalized();
    scale = std::max(scale, std::abs(u.b - u.a.dot(ball.center)));
  }
  return ball.radius > rel_tol * std::max(scale, 1e-300);
}

NavigableSpace build_navigable_space(std::vector<RegionResult> regions) {
  NavigableSpace space;
  space.regions = std::move(regions);
  const std::size_t n = space.regions.size();
  std::vector<Aabb> boxes(n);
  for (std::size_t i = 0; i < n; ++i) boxes[i] = space.regions[i].hull.bounds();

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!boxes[i].intersects(boxes[j])) continue;
      if (polytopes_overlap(space.regions[i].polytope, space.regions[j].polytope)) space.adjacency.emplace_back(i, j);
    }
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!space.adjacent(i, i + 1)) {
      space.warnings.push_back("regions " + std::to_string(i) + " (seed " + std::to_string(space.regions[i].seed_id) +
                               ") and " + std::to_string(i + 1) + " (seed " +
                               std::to_string(space.regions[i + 1].seed_id) + ") do not overlap");
    }
  }
  return space;
}

ProjectedCloud project_to_hull(const RegionResult& region, const NeighborSet& nbrs) {
  const TriangleMesh& hull = region.hull;
  const double tol = kRelTol * hull.diameter();
  for (const Halfspace& plane : hull.facet_plane) {
    if (plane.b - plane.a.dot(region.seed) <= tol) {
      throw Error(ErrorCode::SeedOnBoundary, "seed " + std::to_string(region.seed_id) + " lies on its hull surface");
    }
  }

  ProjectedCloud out;
  out.points.reserve(nbrs.count());
  for (std::size_t i = 0; i < nbrs.count(); ++i) {
    const Vec3 dir = nbrs.points[i] - region.seed;
    if (!(dir.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "neighbor coincides with the seed");
    const RayHit hit = ray_exit(hull, region.seed, dir);
    ProjectedPoint pp;
    pp.point = hit.point;
    pp.seed_id = region.seed_id;
    pp.facet_group = hull.facet_group[hit.facet];
    pp.plane = hull.facet_plane[hit.facet];
    pp.source_index = static_cast<std::uint32_t>(i);
    out.points.push_back(pp);
  }
  return out;
}

double default_cull_tolerance(const NavigableSpace& space) { return 1e-7 * space.bounds().diameter(); }

ProjectedCloud cull_overlapping(const std::vector<ProjectedCloud>& clouds, const NavigableSpace& space, double tol,
                                std::size_t workers) {
  if (clouds.size() != space.regions.size()) {
    throw Error(ErrorCode::InvalidArgument, "one projected cloud per region is required");
  }
  const std::size_t n = space.regions.size();
  std::vector<Aabb> boxes(n);
  std::vector<Polytope> unit(n);
  for (std::size_t j = 0; j < n; ++j) {
    boxes[j] = space.regions[j].hull.bounds();
    unit[j] = normalized(space.regions[j].polytope);
  }

  std::vector<ProjectedCloud> kept(n);
  parallel_for(n, workers, [&](std::size_t i) {
    for (const ProjectedPoint& pp : clouds[i].points) {
      bool culled = false;
      for (std::size_t j = 0; j < n && !culled; ++j) {
        if (j == i || !boxes[j].contains(pp.point, tol)) continue;
        culled = std::all_of(unit[j].halfspaces.begin(), unit[j].halfspaces.end(),
                             [&](const Halfspace& h) { return halfspace_margin(h, pp.point) < -tol; });
      }
      if (!culled) kept[i].points.push_back(pp);
    }
  });

  ProjectedCloud out;
  for (auto& c : kept) out.points.insert(out.points.end(), c.points.begin(), c.points.end());
  return out;
}

}  // namespace navcarve
