#pragma once

#include <span>

#include "navcarve/geometry.hpp"

namespace navcarve {

/// Closed, outward-oriented hull of a 3D point set.
///
/// Points are processed in a canonical order (lexicographic, then farthest
/// from the initial simplex first), so the result does not depend on the input
/// permutation. Vertices that are not strict corners (points in the interior
/// of a flat facet or on an edge) are dropped. Coplanar triangles share a
/// facet_group. Throws DegenerateInput when the points span less than 3D
/// within `rel_tol * diameter`.
TriangleMesh convex_hull_3d(std::span<const Point3> points, double rel_tol = kRelTol);

}  // namespace navcarve
