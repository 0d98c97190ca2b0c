#pragma once

#include <optional>

#include "navcarve/geometry.hpp"

namespace navcarve {

struct ChebyshevBall {
  Point3 center = Point3::Zero();
  double radius = 0.0;  // <= 0 when the polytope has empty interior
};

/// True iff the unit normals of `q` positively span R^3, i.e. the halfspace
/// intersection is bounded (or empty).
bool is_bounded(const Polytope& q);

/// Largest inscribed ball, via a log-barrier Newton method on the LP
/// max r s.t. a_j.x + r|a_j| <= b_j. Throws Unbounded if q is unbounded.
ChebyshevBall chebyshev_center(const Polytope& q);

/// Maximum-volume inscribed ellipsoid: maximize log det C subject to
/// |C a_j| + a_j.d <= b_j for every halfspace, C symmetric positive-definite.
///
/// Solved by a barrier/Newton path-following method over the nine free
/// parameters (six of C, three of d) starting from half the Chebyshev ball.
/// The returned ellipsoid is strictly feasible; the log-det gap to the optimum
/// is below `log_det_gap`. Throws Unbounded or Infeasible.
Ellipsoid inscribed_ellipsoid(const Polytope& q, double log_det_gap = 1e-8);

/// Normalized ellipsoid constraint violation max_j (|C a_j| + a_j.d - b_j)/|a_j|.
double ellipsoid_max_violation(const Ellipsoid& e, const Polytope& q);

}  // namespace navcarve
