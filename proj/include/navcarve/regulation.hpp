#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "navcarve/geometry.hpp"
#include "navcarve/preprocess.hpp"
#include "navcarve/region.hpp"

namespace navcarve {

/// A point lying on one facet of one region's hull.
struct ProjectedPoint {
  Point3 point = Point3::Zero();
  std::uint32_t seed_id = 0;
  std::int32_t facet_group = 0;
  Halfspace plane;                 // unit-normal supporting plane of the facet
  std::uint32_t source_index = 0;  // position in the originating neighbor list
};

struct ProjectedCloud {
  std::vector<ProjectedPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct NavigableSpace {
  std::vector<RegionResult> regions;
  std::vector<std::pair<std::size_t, std::size_t>> adjacency;  // i < j, ascending
  std::vector<std::string> warnings;

  bool adjacent(std::size_t i, std::size_t j) const;
  Aabb bounds() const;
};

/// Region for a hand-made polytope: its inscribed ellipsoid and hull, seeded at
/// `seed` (which must be interior).
RegionResult region_from_polytope(std::uint32_t seed_id, const Point3& seed, const Polytope& q);

/// True iff the intersection of a and b has an inscribed ball of radius above
/// rel_tol times the joint diameter.
bool polytopes_overlap(const Polytope& a, const Polytope& b, double rel_tol = 1e-9);

NavigableSpace build_navigable_space(std::vector<RegionResult> regions);

/// Radial projection of each neighbor onto the hull along the seed's
/// visibility line. Throws SeedOnBoundary.
ProjectedCloud project_to_hull(const RegionResult& region, const NeighborSet& nbrs);

/// Removes every projected point of region i lying strictly inside (all
/// normalized margins < -tol) the polytope of another region.
ProjectedCloud cull_overlapping(const std::vector<ProjectedCloud>& clouds, const NavigableSpace& space, double tol,
                                std::size_t workers = 1);

/// Default culling tolerance: 1e-7 times the diameter of the space.
double default_cull_tolerance(const NavigableSpace& space);

}  // namespace navcarve
