#include "navcarve/region.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "navcarve/error.hpp"
#include "navcarve/mvie.hpp"

namespace navcarve {

void GrowthConfig::validate() const {
  if (!(growth_threshold > 0.0) || !(bounding_margin > 0.0) || !(ball_init_radius > 0.0) || max_iterations < 1) {
    throw Error(ErrorCode::ConfigError, "growth parameters must be positive with max_iterations >= 1");
  }
}

Halfspace tangent_halfspace(const Ellipsoid& e, const Point3& p) {
  const Vec3 offset = p - e.d;
  if (offset.norm() < 1e-12) throw Error(ErrorCode::CenterCoincides, "point coincides with the ellipsoid center");
  const Mat3 shape = e.C * e.C.transpose();
  const Vec3 a = shape.ldlt().solve(offset).normalized();
  return {a, a.dot(p)};
}

Separation separate_points(const Ellipsoid& e, std::span<const Point3> points) {
  const std::size_t n = points.size();
  const Eigen::PartialPivLU<Mat3> lu(e.C);
  std::vector<double> ball_dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    if ((points[i] - e.d).norm() < 1e-12) {
      throw Error(ErrorCode::CenterCoincides, "neighbor coincides with the ellipsoid center");
    }
    ball_dist[i] = lu.solve(points[i] - e.d).norm();
  }
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return ball_dist[a] < ball_dist[b]; });

  Separation out;
  std::vector<bool> done(n, false);
  for (std::uint32_t i : order) {
    if (done[i]) continue;
    const Halfspace h = tangent_halfspace(e, points[i]);
    out.polytope.halfspaces.push_back(h);
    out.generators.push_back(i);
    done[i] = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (!done[j] && halfspace_margin(h, points[j]) >= -1e-12) done[j] = true;
    }
  }
  return out;
}

Polytope separating_halfspaces(const Ellipsoid& e, const NeighborSet& nbrs) {
  return separate_points(e, nbrs.points).polytope;
}

Polytope bound_polytope(const Polytope& q, const Point3& seed, double nbr_radius, const GrowthConfig& cfg) {
  if (!(nbr_radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "neighborhood radius must be positive");
  const Vec3 half = Vec3::Constant(cfg.bounding_margin * nbr_radius);
  Polytope out = q;
  const Polytope box = box_polytope(seed - half, seed + half);
  out.halfspaces.insert(out.halfspaces.end(), box.halfspaces.begin(), box.halfspaces.end());
  out.bounded_flag = true;
  return out;
}

double neighborhood_radius(const Point3& seed, const NeighborSet& nbrs) {
  double r = 0.0;
  for (const Point3& p : nbrs.points) r = std::max(r, (p - seed).norm());
  return r;
}

RegionResult grow_region(const Point3& seed, const NeighborSet& nbrs, const GrowthConfig& cfg) {
  cfg.validate();
  if (nbrs.points.empty()) throw Error(ErrorCode::DegenerateSeed, "seed has no neighbors");
  const double radius = neighborhood_radius(seed, nbrs);
  const double init = cfg.ball_init_radius * radius;
  for (const Point3& p : nbrs.points) {
    if ((p - seed).norm() <= init) {
      throw Error(ErrorCode::DegenerateSeed, "a neighbor lies inside the initial ball around the seed");
    }
  }

  RegionResult out;
  out.seed_id = nbrs.seed_id;
  out.seed = seed;
  Ellipsoid e = Ellipsoid::ball(seed, init);
  double det = e.det();
  out.det_history.push_back(det);

  for (int k = 1; k <= cfg.max_iterations; ++k) {
    Separation sep = separate_points(e, nbrs.points);
    Polytope q = bound_polytope(sep.polytope, seed, radius, cfg);
    const Ellipsoid next = inscribed_ellipsoid(q);
    const double next_det = next.det();
    out.polytope = std::move(q);
    out.active_points = std::move(sep.generators);
    out.ellipsoid = next;
    out.iterations = k;
    out.det_history.push_back(next_det);
    const bool converged = (next_det - det) / det < cfg.growth_threshold;
    e = next;
    det = next_det;
    if (converged) break;
  }

  out.hull = polytope_hull(out.polytope, out.ellipsoid.d);
  return out;
}

}  // namespace navcarve
