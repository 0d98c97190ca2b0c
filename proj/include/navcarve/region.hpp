#pragma once

#include <cstdint>
#include <vector>

#include "navcarve/geometry.hpp"
#include "navcarve/preprocess.hpp"

namespace navcarve {

struct GrowthConfig {
  double growth_threshold = 2e-2;  // relative det C increase below which growth stops
  int max_iterations = 10;
  double bounding_margin = 1.0;    // box half-width in neighborhood radii
  double ball_init_radius = 1e-3;  // initial ball radius in neighborhood radii

  void validate() const;
};

struct RegionResult {
  std::uint32_t seed_id = 0;
  Point3 seed = Point3::Zero();
  Ellipsoid ellipsoid;
  Polytope polytope;
  TriangleMesh hull;
  int iterations = 0;
  std::vector<std::uint32_t> active_points;  // neighborhood positions that produced halfspaces
  std::vector<double> det_history;           // det C per iteration, starting with the initial ball
};

/// Separating plane through p, tangent to the level set of `e` passing
/// through p. Throws CenterCoincides when p is the ellipsoid center.
Halfspace tangent_halfspace(const Ellipsoid& e, const Point3& p);

struct Separation {
  Polytope polytope;
  std::vector<std::uint32_t> generators;  // position in the point list per halfspace
};

/// Closest-point-first separation of point obstacles from an ellipsoid:
/// repeatedly take the unprocessed point nearest in the ellipsoid's ball
/// metric, emit its tangent plane, and retire every point that plane excludes.
Separation separate_points(const Ellipsoid& e, std::span<const Point3> points);

Polytope separating_halfspaces(const Ellipsoid& e, const NeighborSet& nbrs);

/// Appends the axis-aligned box seed +- margin * nbr_radius.
Polytope bound_polytope(const Polytope& q, const Point3& seed, double nbr_radius, const GrowthConfig& cfg);

/// Largest distance from the seed to a neighborhood point.
double neighborhood_radius(const Point3& seed, const NeighborSet& nbrs);

/// Alternates separation and maximum inscribed ellipsoid from a small ball at
/// the seed until det C stops growing. Throws DegenerateSeed.
RegionResult grow_region(const Point3& seed, const NeighborSet& nbrs, const GrowthConfig& cfg);

}  // namespace navcarve
