#include "navcarve/refinement.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include "navcarve/convex_hull.hpp"
#include "navcarve/error.hpp"
#include "navcarve/kdtree.hpp"
#include "navcarve/parallel.hpp"

namespace navcarve {

FacetFrame FacetFrame::of(const Halfspace& plane, std::int32_t facet_group) {
  const Halfspace unit = plane.normalized();
  FacetFrame f;
  f.facet_group = facet_group;
  f.normal = unit.a;
  f.origin = unit.b * unit.a;
  Eigen::Index axis = 0;
  unit.a.cwiseAbs().minCoeff(&axis);
  f.u = unit.a.cross(Vec3::Unit(axis)).normalized();
  f.v = unit.a.cross(f.u);
  return f;
}

Eigen::Vector2d FacetFrame::to_2d(const Point3& p) const {
  const Vec3 r = p - origin;
  return {r.dot(u), r.dot(v)};
}

Point3 FacetFrame::to_3d(const Eigen::Vector2d& q) const { return origin + q.x() * u + q.y() * v; }

void SurfaceMesh::append(const SurfaceMesh& other) {
  const auto offset = static_cast<std::uint32_t>(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(), other.mesh.vertices.begin(), other.mesh.vertices.end());
  for (const Triangle& t : other.mesh.triangles) mesh.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  mesh.facet_plane.insert(mesh.facet_plane.end(), other.mesh.facet_plane.begin(), other.mesh.facet_plane.end());
  mesh.facet_group.insert(mesh.facet_group.end(), other.mesh.facet_group.begin(), other.mesh.facet_group.end());
  vertex_group.insert(vertex_group.end(), other.vertex_group.begin(), other.vertex_group.end());
  vertex_seed.insert(vertex_seed.end(), other.vertex_seed.begin(), other.vertex_seed.end());
  vertex_plane.insert(vertex_plane.end(), other.vertex_plane.begin(), other.vertex_plane.end());
  skipped_facets += other.skipped_facets;
}

void RefineConfig::validate() const {
  if (!(cell >= 0.0) || !(max_edge >= 0.0) || !(mls_radius >= 0.0)) {
    throw Error(ErrorCode::ConfigError, "refinement lengths must be non-negative");
  }
  if (mls_degree != 1 && mls_degree != 2) throw Error(ErrorCode::ConfigError, "mls_degree must be 1 or 2");
}

RefineConfig RefineConfig::resolved(const NavigableSpace& space) const {
  validate();
  RefineConfig out = *this;
  if (out.cell == 0.0) {
    std::vector<double> diam;
    for (const RegionResult& r : space.regions) diam.push_back(r.hull.diameter());
    if (diam.empty()) throw Error(ErrorCode::InvalidArgument, "no regions to derive a voxel size from");
    std::nth_element(diam.begin(), diam.begin() + diam.size() / 2, diam.end());
    out.cell = 0.05 * diam[diam.size() / 2];
  }
  if (out.max_edge == 0.0) out.max_edge = 2.0 * out.cell;
  if (out.mls_radius == 0.0) out.mls_radius = 3.0 * out.cell;
  return out;
}

namespace {

using FacetKey = std::pair<std::uint32_t, std::int32_t>;

FacetKey key_of(const ProjectedPoint& p) { return {p.seed_id, p.facet_group}; }

Point3 snap(const Halfspace& plane, const Point3& p) {
  const Halfspace unit = plane.normalized();
  return p - (unit.a.dot(p) - unit.b) * unit.a;
}

// Groups point indices by (seed, facet) in order of first appearance.
std::vector<std::vector<std::size_t>> facet_groups(const ProjectedCloud& cloud) {
  std::map<FacetKey, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto [it, fresh] = slot.try_emplace(key_of(cloud.points[i]), groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

}  // namespace

ProjectedCloud voxel_downsample(const ProjectedCloud& cloud, double cell) {
  if (!(cell > 0.0)) throw Error(ErrorCode::InvalidArgument, "voxel cell must be positive");
  std::map<FacetKey, FacetFrame> frames;
  std::map<std::tuple<std::uint32_t, std::int32_t, std::int64_t, std::int64_t>, std::size_t> slot;
  std::vector<Point3> sum;
  std::vector<std::size_t> count;
  std::vector<std::size_t> first;

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const ProjectedPoint& p = cloud.points[i];
    const auto fit = frames.try_emplace(key_of(p), FacetFrame::of(p.plane, p.facet_group)).first;
    const Eigen::Vector2d q = fit->second.to_2d(p.point);
    const auto ix = static_cast<std::int64_t>(std::floor(q.x() / cell));
    const auto iy = static_cast<std::int64_t>(std::floor(q.y() / cell));
    auto [it, fresh] = slot.try_emplace({p.seed_id, p.facet_group, ix, iy}, sum.size());
    if (fresh) {
      sum.push_back(Point3::Zero());
      count.push_back(0);
      first.push_back(i);
    }
    sum[it->second] += p.point;
    ++count[it->second];
  }

  ProjectedCloud out;
  out.points.reserve(sum.size());
  for (std::size_t c = 0; c < sum.size(); ++c) {
    ProjectedPoint p = cloud.points[first[c]];
    p.point = snap(p.plane, sum[c] / static_cast<double>(count[c]));
    out.points.push_back(p);
  }
  return out;
}

SurfaceMesh triangulate_facet(const ProjectedCloud& facet_points) {
  if (facet_points.empty()) throw Error(ErrorCode::CollinearFacetPoints, "facet has no points");
  const ProjectedPoint& head = facet_points.points.front();
  const FacetFrame frame = FacetFrame::of(head.plane, head.facet_group);

  // Unique 2D positions, first occurrence wins.
  std::vector<std::size_t> src;
  std::vector<Eigen::Vector2d> uv;
  std::map<std::pair<double, double>, std::size_t> seen;
  for (std::size_t i = 0; i < facet_points.size(); ++i) {
    const Eigen::Vector2d q = frame.to_2d(facet_points.points[i].point);
    if (seen.try_emplace({q.x(), q.y()}, i).second) {
      src.push_back(i);
      uv.push_back(q);
    }
  }
  const std::size_t n = uv.size();
  if (n < 3) throw Error(ErrorCode::CollinearFacetPoints, "facet has fewer than three distinct points");

  // Lift onto the paraboloid in normalized coordinates; an apex above the
  // centroid keeps the 3D hull full-dimensional.
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& q : uv) centroid += q;
  centroid /= static_cast<double>(n);
  double scale = 0.0;
  for (const auto& q : uv) scale = std::max(scale, (q - centroid).norm());
  std::vector<Point3> lifted(n + 1);
  double top = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d q = (uv[i] - centroid) / scale;
    lifted[i] = Point3(q.x(), q.y(), q.squaredNorm());
    top = std::max(top, lifted[i].z());
  }
  lifted[n] = Point3(0.0, 0.0, top + 1.0);

  TriangleMesh hull;
  try {
    hull = convex_hull_3d(lifted);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateInput) throw;
    throw Error(ErrorCode::CollinearFacetPoints, "facet points are collinear");
  }

  std::map<std::array<double, 3>, std::uint32_t> index_of;
  for (std::uint32_t i = 0; i <= n; ++i) index_of[{lifted[i].x(), lifted[i].y(), lifted[i].z()}] = i;
  std::vector<std::uint32_t> hull_to_input(hull.vertices.size());
  for (std::size_t v = 0; v < hull.vertices.size(); ++v) {
    const Point3& p = hull.vertices[v];
    hull_to_input[v] = index_of.at({p.x(), p.y(), p.z()});
  }

  // Lower faces grouped by coplanarity; each group is a cocircular convex polygon.
  std::map<std::int32_t, std::vector<std::uint32_t>> polygons;
  for (std::size_t t = 0; t < hull.triangles.size(); ++t) {
    if (!(hull.facet_plane[t].a.z() < 0.0)) continue;
    const Triangle& tri = hull.triangles[t];
    bool apex = false;
    for (std::uint32_t v : tri) apex = apex || hull_to_input[v] == n;
    if (apex) continue;
    auto& poly = polygons[hull.facet_group[t]];
    for (std::uint32_t v : tri) poly.push_back(hull_to_input[v]);
  }

  std::vector<Triangle> tris;
  for (auto& [group, poly] : polygons) {
    std::sort(poly.begin(), poly.end());
    poly.erase(std::unique(poly.begin(), poly.end()), poly.end());
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (std::uint32_t v : poly) c += uv[v];
    c /= static_cast<double>(poly.size());
    std::vector<double> angle(n);
    for (std::uint32_t v : poly) angle[v] = std::atan2(uv[v].y() - c.y(), uv[v].x() - c.x());
    std::vector<std::uint32_t> ring = poly;
    std::sort(ring.begin(), ring.end(), [&](std::uint32_t a, std::uint32_t b) { return angle[a] < angle[b]; });
    std::rotate(ring.begin(), std::min_element(ring.begin(), ring.end()), ring.end());
    for (std::size_t k = 1; k + 1 < ring.size(); ++k) tris.push_back({ring[0], ring[k], ring[k + 1]});
  }

  // Compact to referenced vertices in input order.
  std::vector<std::int64_t> remap(n, -1);
  for (const Triangle& t : tris) {
    for (std::uint32_t v : t) remap[v] = 0;
  }
  SurfaceMesh out;
  const Halfspace plane = head.plane.normalized();
  for (std::size_t i = 0; i < n; ++i) {
    if (remap[i] < 0) continue;
    remap[i] = static_cast<std::int64_t>(out.mesh.vertices.size());
    const ProjectedPoint& p = facet_points.points[src[i]];
    out.mesh.vertices.push_back(p.point);
    out.vertex_group.push_back(p.facet_group);
    out.vertex_seed.push_back(p.seed_id);
    out.vertex_plane.push_back(p.plane);
  }
  for (const Triangle& t : tris) {
    out.mesh.triangles.push_back({static_cast<std::uint32_t>(remap[t[0]]), static_cast<std::uint32_t>(remap[t[1]]),
                                  static_cast<std::uint32_t>(remap[t[2]])});
    out.mesh.facet_plane.push_back(plane);
    out.mesh.facet_group.push_back(head.facet_group);
  }
  return out;
}

SurfaceMesh triangulate_facets(const ProjectedCloud& cloud, std::size_t workers) {
  const auto groups = facet_groups(cloud);
  std::vector<SurfaceMesh> parts(groups.size());
  parallel_for(groups.size(), workers, [&](std::size_t g) {
    ProjectedCloud facet;
    for (std::size_t i : groups[g]) facet.points.push_back(cloud.points[i]);
    try {
      parts[g] = triangulate_facet(facet);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CollinearFacetPoints) throw;
      parts[g].skipped_facets = 1;
    }
  });
  SurfaceMesh out;
  for (const SurfaceMesh& part : parts) out.append(part);
  return out;
}

ProjectedCloud densify(const SurfaceMesh& mesh, double max_edge) {
  if (!(max_edge > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_edge must be positive");
  ProjectedCloud out;
  const auto& verts = mesh.mesh.vertices;
  for (std::uint32_t v = 0; v < verts.size(); ++v) {
    ProjectedPoint p;
    p.point = verts[v];
    p.seed_id = mesh.vertex_seed[v];
    p.facet_group = mesh.vertex_group[v];
    p.plane = mesh.vertex_plane[v];
    p.source_index = v;
    out.points.push_back(p);
  }

  std::unordered_map<std::uint64_t, bool> done;
  for (std::size_t t = 0; t < mesh.mesh.triangles.size(); ++t) {
    const Triangle& tri = mesh.mesh.triangles[t];
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t a = tri[k];
      const std::uint32_t b = tri[(k + 1) % 3];
      const std::uint64_t key = (std::uint64_t{std::min(a, b)} << 32) | std::max(a, b);
      if (!done.try_emplace(key, true).second) continue;
      const double len = (verts[b] - verts[a]).norm();
      if (!(len > max_edge)) continue;
      const auto pieces = static_cast<std::size_t>(std::ceil(len / max_edge));
      for (std::size_t s = 1; s < pieces; ++s) {
        const double u = static_cast<double>(s) / static_cast<double>(pieces);
        ProjectedPoint p;
        p.point = verts[a] + u * (verts[b] - verts[a]);
        p.seed_id = mesh.vertex_seed[a];
        p.facet_group = mesh.mesh.facet_group[t];
        p.plane = mesh.mesh.facet_plane[t];
        p.source_index = a;
        out.points.push_back(p);
      }
    }
  }
  return out;
}

namespace {

struct PlaneFit {
  Point3 center;
  Vec3 normal;
};

PlaneFit fit_plane(const std::vector<Point3>& pts, const std::vector<double>& w) {
  double wsum = 0.0;
  Point3 c = Point3::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    c += w[i] * pts[i];
    wsum += w[i];
  }
  c /= wsum;
  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 r = pts[i] - c;
    cov += w[i] * r * r.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  return {c, eig.eigenvectors().col(0)};
}

Point3 project_plane(const PlaneFit& f, const Point3& p) { return p - (p - f.center).dot(f.normal) * f.normal; }

// Height-field quadric over the fitted plane; falls back to the plane when the
// system is rank deficient.
Point3 project_quadric(const PlaneFit& f, const std::vector<Point3>& pts, const std::vector<double>& w,
                       const Point3& p, double radius) {
  const FacetFrame frame = FacetFrame::of({f.normal, f.normal.dot(f.center)});
  auto local = [&](const Point3& q) {
    const Vec3 r = (q - f.center) / radius;
    return Vec3(r.dot(frame.u), r.dot(frame.v), r.dot(frame.normal));
  };
  Eigen::MatrixXd A(pts.size(), 6);
  Eigen::VectorXd h(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 l = local(pts[i]);
    const double s = std::sqrt(w[i]);
    A.row(static_cast<Eigen::Index>(i)) << s, s * l.x(), s * l.y(), s * l.x() * l.x(), s * l.x() * l.y(),
        s * l.y() * l.y();
    h(static_cast<Eigen::Index>(i)) = s * l.z();
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < 6) return project_plane(f, p);
  const Eigen::VectorXd k = qr.solve(h);

  const Vec3 target = local(p);
  double x = target.x();
  double y = target.y();
  auto height = [&](double a, double b) { return k(0) + k(1) * a + k(2) * b + k(3) * a * a + k(4) * a * b + k(5) * b * b; };
  for (int it = 0; it < 20; ++it) {
    const double fx = k(1) + 2.0 * k(3) * x + k(4) * y;
    const double fy = k(2) + k(4) * x + 2.0 * k(5) * y;
    Eigen::Matrix<double, 3, 2> J;
    J << 1.0, 0.0, 0.0, 1.0, fx, fy;
    const Vec3 res(x - target.x(), y - target.y(), height(x, y) - target.z());
    const Eigen::Vector2d step = (J.transpose() * J).ldlt().solve(J.transpose() * res);
    x -= step.x();
    y -= step.y();
    if (step.norm() < 1e-14) break;
  }
  return f.center + radius * (x * frame.u + y * frame.v + height(x, y) * frame.normal);
}

}  // namespace

PointCloud mls_smooth(const ProjectedCloud& cloud, double radius, int degree, std::size_t workers) {
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "MLS radius must be positive");
  if (degree != 1 && degree != 2) throw Error(ErrorCode::InvalidArgument, "MLS degree must be 1 or 2");
  std::vector<Point3> pos(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) pos[i] = cloud.points[i].point;
  const KdTree tree(pos);

  PointCloud out;
  out.points.resize(pos.size());
  out.tags.assign(pos.size(), PointTag::Projected);
  parallel_for(pos.size(), workers, [&](std::size_t i) {
    const auto nbrs = tree.radius(pos[i], radius);
    if (nbrs.size() < 4) {
      out.points[i] = pos[i];
      return;
    }
    std::vector<Point3> pts;
    std::vector<double> w;
    for (const Neighbor& nb : nbrs) {
      pts.push_back(pos[nb.index]);
      w.push_back(std::exp(-nb.dist2 / (radius * radius)));
    }
    const PlaneFit plane = fit_plane(pts, w);
    out.points[i] = (degree == 2 && pts.size() >= 6) ? project_quadric(plane, pts, w, pos[i], radius)
                                                     : project_plane(plane, pos[i]);
  });
  return out;
}

}  // namespace navcarve
