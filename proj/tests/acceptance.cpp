// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <Eigen/Geometry>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "navcarve/evaluation.hpp"
#include "navcarve/kdtree.hpp"
#include "navcarve/mvie.hpp"
#include "navcarve/pipeline.hpp"
#include "navcarve/refinement.hpp"
#include "navcarve/region.hpp"
#include "navcarve/regulation.hpp"
#include "test_support.hpp"

using namespace navcarve;
namespace nt = navcarve::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// Unit-normal margin, recomputed here rather than through the library.
double unit_margin(const Halfspace& h, const Point3& p) { return (h.a.dot(p) - h.b) / h.a.norm(); }

struct EnvRun {
  SyntheticEnvironment env;
  GrowOutput grown;
  NavigableSpace space;
};

EnvRun run_env(const SyntheticEnvSpec& spec, const PipelineConfig& cfg) {
  EnvRun r;
  r.env = generate_environment(spec);
  const PointCloud filtered = statistical_outlier_removal(r.env.cloud, cfg.filter_k, cfg.filter_alpha);
  r.grown = grow_regions(cfg, filtered, r.env.trajectory);
  r.space = build_navigable_space(r.grown.regions);
  return r;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  const PipelineConfig cfg;
  std::size_t regions = 0, points = 0, violations = 0;
  double deepest = std::numeric_limits<double>::infinity();  // smallest margin / diameter
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    SyntheticEnvSpec spec;
    spec.seed = seed;
    const EnvRun run = run_env(spec, cfg);
    for (std::size_t i = 0; i < run.grown.regions.size(); ++i) {
      const RegionResult& reg = run.grown.regions[i];
      const double tol = 1e-9 * reg.hull.diameter();
      for (const Point3& p : run.grown.neighbors[i].points) {
        double m = -std::numeric_limits<double>::infinity();
        for (const Halfspace& h : reg.polytope.halfspaces) m = std::max(m, unit_margin(h, p));
        deepest = std::min(deepest, m / reg.hull.diameter());
        if (m < -tol) ++violations;
        ++points;
      }
    }
    regions += run.grown.regions.size();
  }
  const double secs = since(t0);
  return {violations == 0 && regions > 0 && secs < 120.0,
          fmt("%zu regions, %zu neighborhood points, %zu strictly inside, smallest margin %.3g diam, %.1f s", regions,
              points, violations, deepest, secs)};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> side(0.2, 5.0);
  double worst_rel = 0.0, worst_feas = -1.0, worst_rot = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double a = side(rng), b = side(rng), c = side(rng);
    const Polytope box = box_polytope(Point3::Zero(), Point3(a, b, c));
    const Ellipsoid e = inscribed_ellipsoid(box);
    const double expected = 4.0 * std::numbers::pi / 3.0 * (a * b * c / 8.0);
    const double vol = 4.0 * std::numbers::pi / 3.0 * std::abs(e.C.determinant());
    worst_rel = std::max(worst_rel, std::abs(vol - expected) / expected);
    for (const Halfspace& h : box.halfspaces) {
      const Vec3 n = h.a / h.a.norm();
      worst_feas = std::max(worst_feas, (e.C * n).norm() + n.dot(e.d) - h.b / h.a.norm());
    }
    const Mat3 R = nt::random_rotation(rng);
    const Vec3 t(side(rng), -side(rng), side(rng));
    const Ellipsoid er = inscribed_ellipsoid(nt::transformed(box, R, t));
    const double vr = 4.0 * std::numbers::pi / 3.0 * std::abs(er.C.determinant());
    worst_rot = std::max(worst_rot, std::abs(vr - vol) / vol);
  }
  const double secs = since(t0);
  return {worst_rel <= 0.01 && worst_feas <= 1e-8 && worst_rot <= 1e-6 && secs < 10.0,
          fmt("max volume error %.2e, max violation %.2e, max rotation drift %.2e, %.2f s", worst_rel, worst_feas,
              worst_rot, secs)};
}

Outcome criterion3() {
  SyntheticEnvSpec spec;
  const SyntheticEnvironment env = generate_environment(spec);
  const PipelineConfig cfg;
  const PointCloud filtered = statistical_outlier_removal(env.cloud, cfg.filter_k, cfg.filter_alpha);
  const SeedSet seeds = sample_seeds(env.trajectory, cfg.seed_interval, cfg.seed_mode);
  const KdTree tree(filtered.points);
  std::vector<double> times;
  TimingReport report;
  double total = 0.0;
  for (const Seed& s : seeds.seeds) {
    const NeighborSet nb = knn_neighbors(tree, filtered.points, s.position, 400);
    if (nb.count() != 400) continue;
    const auto t0 = Clock::now();
    try {
      grow_region(s.position, nb, cfg.growth);
    } catch (const Error&) {
      continue;
    }
    times.push_back(since(t0));
    total += times.back();
  }
  report.set("grow", total);
  report.seed_count = times.size();
  report.finalize();
  if (times.empty()) return {false, "no seed grew"};
  std::sort(times.begin(), times.end());
  const double median = times[times.size() / 2];
  return {median < 0.5, fmt("%zu seeds, median %.4f s, mean %.4f s, max %.4f s per seed", times.size(), median,
                            report.seconds_per_seed, times.back())};
}

Outcome criterion4() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t mismatches = 0, total_points = 0, total_culled = 0;
  for (int chain = 0; chain < 20; ++chain) {
    const int n = 2 + static_cast<int>(u(rng) * 5);  // 2..6 regions
    std::vector<RegionResult> regions;
    for (int i = 0; i < n; ++i) {
      const Vec3 half(0.8 + 0.4 * u(rng), 0.8 + 0.4 * u(rng), 0.8 + 0.4 * u(rng));
      const Point3 centre(1.3 * i, 0.3 * (u(rng) - 0.5), 0.3 * (u(rng) - 0.5));
      const Polytope local = box_polytope(-half, half);
      const Polytope q = nt::transformed(local, nt::random_rotation(rng), centre);
      regions.push_back(region_from_polytope(static_cast<std::uint32_t>(i), centre, q));
    }
    const NavigableSpace space = build_navigable_space(regions);
    const std::size_t per = 500 / static_cast<std::size_t>(n);
    std::vector<ProjectedCloud> clouds;
    for (int i = 0; i < n; ++i) {
      NeighborSet nb;
      nb.seed_id = static_cast<std::uint32_t>(i);
      for (std::size_t k = 0; k < per; ++k) {
        nb.points.push_back(space.regions[i].seed + nt::random_unit(rng) * (0.5 + 2.5 * u(rng)));
        nb.indices.push_back(static_cast<std::uint32_t>(k));
      }
      nb.k = per;
      clouds.push_back(project_to_hull(space.regions[i], nb));
    }
    const double tol = default_cull_tolerance(space);
    const ProjectedCloud got = cull_overlapping(clouds, space, tol, 3);

    ProjectedCloud expect;
    std::size_t chain_points = 0;
    for (int i = 0; i < n; ++i) {
      for (const ProjectedPoint& p : clouds[i].points) {
        bool inside_other = false;
        for (int j = 0; j < n && !inside_other; ++j) {
          if (j == i) continue;
          bool strict = true;
          for (const Halfspace& h : space.regions[j].polytope.halfspaces) strict = strict && unit_margin(h, p.point) < -tol;
          inside_other = strict;
        }
        if (!inside_other) expect.points.push_back(p);
        ++chain_points;
      }
    }
    total_points += chain_points;
    total_culled += chain_points - expect.size();
    if (got.size() != expect.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t k = 0; k < got.size(); ++k) {
      const ProjectedPoint &a = got.points[k], &b = expect.points[k];
      if (a.point != b.point || a.seed_id != b.seed_id || a.facet_group != b.facet_group ||
          a.source_index != b.source_index) {
        ++mismatches;
        break;
      }
    }
  }
  return {mismatches == 0 && total_culled > 0,
          fmt("20 chains, %zu projected points, %zu culled by the oracle, %zu chains differ", total_points,
              total_culled, mismatches)};
}

double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

// Dense samples of the free-space boundary pushed `delta` away from every wall:
// offset copies of each wall segment plus arcs around obstacle corners, keeping
// only free points at least `delta` from every wall.
std::vector<Point2> offset_boundary(const GroundTruth& gt, double delta, double step) {
  std::vector<std::pair<Point2, Point2>> walls;
  for (const BoundaryArea& area : gt.areas) {
    for (std::size_t s = 0; s + 1 < area.polyline.size(); ++s) walls.emplace_back(area.polyline[s], area.polyline[s + 1]);
  }
  const double A = gt.outer_side;
  auto keep = [&](const Point2& p) {
    if (p.x() < -1e-12 || p.y() < -1e-12 || p.x() > A + 1e-12 || p.y() > A + 1e-12) return false;
    if (delta > 0.0 && gt.in_obstacle_2d(p)) return false;
    for (const auto& [a, b] : walls) {
      if (segment_distance(p, a, b) < delta - 1e-12) return false;
    }
    return true;
  };
  std::vector<Point2> out;
  for (const BoundaryArea& area : gt.areas) {
    for (std::size_t s = 0; s + 1 < area.polyline.size(); ++s) {
      const Point2 a = area.polyline[s], b = area.polyline[s + 1];
      const double len = (b - a).norm();
      const int n = static_cast<int>(std::ceil(len / step));
      for (int k = 0; k <= n; ++k) {
        const Point2 p = a + (len * k / n) * (b - a) / len + delta * area.free_normal[s];
        if (keep(p)) out.push_back(p);
      }
      if (delta > 0.0) {
        for (int k = 0; k < 64; ++k) {
          const double th = 2.0 * std::numbers::pi * k / 64;
          const Point2 p = b + delta * Point2(std::cos(th), std::sin(th));
          if (keep(p)) out.push_back(p);
        }
      }
    }
  }
  return out;
}

Outcome criterion5() {
  SyntheticEnvSpec spec;
  spec.noise_sigma = 0.0;
  spec.outlier_fraction = 0.0;
  const GroundTruth gt = generate_environment(spec).truth;
  double worst_snap = 0.0, worst_offset = 0.0;
  std::size_t false_points = 0, areas_checked = 0;
  for (double cell : {0.5, 1.0}) {
    const auto snapped = offset_boundary(gt, 0.0, cell / 8);
    const BoundaryReport snap = boundary_error(snapped, gt, cell);
    for (const AreaReport& a : snap.areas) {
      worst_snap = std::max(worst_snap, a.ssd);
      false_points += a.false_points;
      ++areas_checked;
    }
    // Offsets stay under half a cell: a corner cell lying wholly within delta of
    // the adjacent wall holds no offset sample at all.
    for (double delta : {0.01, 0.07, 0.2}) {
      const auto offset = offset_boundary(gt, delta, cell / 8);
      const BoundaryReport off = boundary_error(offset, gt, cell);
      for (const AreaReport& a : off.areas) {
        worst_offset = std::max(worst_offset, std::abs(a.avg_sq_error - delta * delta));
        false_points += a.false_points;
        ++areas_checked;
      }
    }
  }
  return {worst_snap == 0.0 && worst_offset <= 1e-9 && false_points == 0 && areas_checked == 64,
          fmt("%zu area reports over 2 cell sizes, max snapped SSD %.3g, max |avg - delta^2| %.3g, %zu false points",
              areas_checked, worst_snap, worst_offset, false_points)};
}

Outcome criterion6() {
  const PipelineConfig cfg;
  int wins = 0;
  std::string per;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticEnvSpec spec;
    spec.seed = seed;
    spec.noise_sigma = 0.05 * spec.corridor_width();
    const EnvRun run = run_env(spec, cfg);
    const BoundaryReport r = boundary_error(run.space, run.env.truth, cfg.eval_cell_size, cfg.band_depth);
    const bool win = r.corner_mean_sq_error > r.straight_mean_sq_error;
    wins += win ? 1 : 0;
    per += fmt(" %.3f/%.3f", r.corner_mean_sq_error, r.straight_mean_sq_error);
  }
  return {wins >= 4, fmt("corner > straight in %d of 5 runs (corner/straight:%s)", wins, per.c_str())};
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  const PipelineConfig cfg;
  SyntheticEnvSpec spec;
  spec.noise_sigma = 0.0;
  const EnvRun run = run_env(spec, cfg);
  const VolumeMetrics vm = volume_metrics(run.space, run.env.truth, 1000000, cfg.rng_seed);
  const double secs = since(t0);
  return {vm.precision_defined && vm.precision >= 0.99 && vm.recall >= 0.6 && secs < 60.0,
          fmt("precision %.4f +- %.4f, recall %.4f +- %.4f, %zu regions, %.1f s", vm.precision, vm.precision_stderr,
              vm.recall, vm.recall_stderr, run.space.regions.size(), secs)};
}

std::map<std::string, std::string> tree_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().lexically_relative(dir).generic_string();
    if (name == "timing.json" || name == "manifest.json") continue;
    std::ifstream f(e.path(), std::ios::binary);
    out[name] = std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  return out;
}

Outcome criterion8() {
  nt::ScratchDir dir("acceptance");
  SyntheticEnvSpec spec;
  spec.seed = 8;
  write_synthetic(spec, dir / "synth");
  const PipelineInputs in{dir / "synth" / "cloud.ply", dir / "synth" / "trajectory.csv",
                          dir / "synth" / "ground_truth.json"};
  PipelineConfig cfg;
  cfg.refine = true;
  cfg.workers = 1;
  run_pipeline(cfg, in, dir / "w1a");
  run_pipeline(cfg, in, dir / "w1b");
  cfg.workers = 4;
  run_pipeline(cfg, in, dir / "w4");
  const auto a = tree_bytes(dir / "w1a"), b = tree_bytes(dir / "w1b"), c = tree_bytes(dir / "w4");
  std::size_t bytes = 0;
  for (const auto& [k, v] : a) bytes += v.size();
  const bool same = a == b && a == c;
  const bool verified = verify_manifest(dir / "w1a").empty() && verify_manifest(dir / "w4").empty();
  return {same && verified && a.size() > 10,
          fmt("%zu files (%zu bytes) compared across 3 runs with 1 and 4 workers: %s; manifests %s", a.size(), bytes,
              same ? "identical" : "DIFFERENT", verified ? "verify" : "do NOT verify")};
}

Point3 lift(const Vec3& e1, const Vec3& e2, const Point3& o, const Point2& q) { return o + q.x() * e1 + q.y() * e2; }

Outcome criterion9() {
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::size_t delaunay_bad = 0, gap_bad = 0, triangles = 0, edges = 0;
  double mls_worst = 0.0;
  for (int f = 0; f < 20; ++f) {
    const Vec3 n = nt::random_unit(rng);
    const Vec3 e1 = n.unitOrthogonal();
    const Vec3 e2 = n.cross(e1);
    const Point3 o = n * u(rng);
    const Halfspace plane(n, n.dot(o));
    const int count = 10 + static_cast<int>((u(rng) + 2.0) * 12.0);
    ProjectedCloud facet;
    std::vector<Point2> uv;
    for (int k = 0; k < count; ++k) {
      const Point2 q(u(rng), u(rng));
      ProjectedPoint p;
      p.point = lift(e1, e2, o, q);
      p.facet_group = f;
      p.plane = plane;
      p.source_index = static_cast<std::uint32_t>(k);
      facet.points.push_back(p);
    }
    const SurfaceMesh mesh = triangulate_facet(facet);
    // Empty circumcircle in plane coordinates.
    std::vector<Point2> v2;
    for (const Point3& p : mesh.mesh.vertices) v2.emplace_back(e1.dot(p - o), e2.dot(p - o));
    for (const Triangle& t : mesh.mesh.triangles) {
      ++triangles;
      const Point2 a = v2[t[0]], b = v2[t[1]], c = v2[t[2]];
      const double d = 2.0 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) + c.x() * (a.y() - b.y()));
      const Point2 centre((a.squaredNorm() * (b.y() - c.y()) + b.squaredNorm() * (c.y() - a.y()) +
                           c.squaredNorm() * (a.y() - b.y())) / d,
                          (a.squaredNorm() * (c.x() - b.x()) + b.squaredNorm() * (a.x() - c.x()) +
                           c.squaredNorm() * (b.x() - a.x())) / d);
      const double r = (a - centre).norm();
      for (std::size_t k = 0; k < v2.size(); ++k) {
        if (k == t[0] || k == t[1] || k == t[2]) continue;
        if ((v2[k] - centre).norm() < r * (1.0 - 1e-9)) ++delaunay_bad;
      }
    }
    // Densify gap: along every edge, consecutive points are at most max_edge apart.
    const double max_edge = 0.15 + 0.2 * (u(rng) + 2.0) / 4.0;
    const ProjectedCloud dense = densify(mesh, max_edge);
    const double diam = mesh.mesh.diameter();
    std::map<std::pair<std::uint32_t, std::uint32_t>, bool> seen;
    for (const Triangle& t : mesh.mesh.triangles) {
      for (int k = 0; k < 3; ++k) {
        const auto key = std::minmax(t[k], t[(k + 1) % 3]);
        if (!seen.emplace(key, true).second) continue;
        ++edges;
        const Point3 p = mesh.mesh.vertices[key.first], q = mesh.mesh.vertices[key.second];
        const double len = (q - p).norm();
        std::vector<double> ts;
        for (const ProjectedPoint& d : dense.points) {
          const double s = (d.point - p).dot(q - p) / (len * len);
          if (s < -1e-12 || s > 1.0 + 1e-12) continue;
          if ((p + s * (q - p) - d.point).norm() <= 1e-9 * diam) ts.push_back(s);
        }
        std::sort(ts.begin(), ts.end());
        if (ts.empty() || ts.front() > 1e-12 || ts.back() < 1.0 - 1e-12) {
          ++gap_bad;
          continue;
        }
        for (std::size_t k2 = 1; k2 < ts.size(); ++k2) {
          if ((ts[k2] - ts[k2 - 1]) * len > max_edge * (1.0 + 1e-12)) {
            ++gap_bad;
            break;
          }
        }
      }
    }
    // Degree-1 MLS on coplanar input is the identity.
    const PointCloud smooth = mls_smooth(dense, 0.6, 1, 2);
    for (std::size_t k = 0; k < dense.size(); ++k) {
      mls_worst = std::max(mls_worst, (smooth.points[k] - dense.points[k].point).norm() / diam);
    }
  }
  return {delaunay_bad == 0 && gap_bad == 0 && mls_worst <= 1e-9,
          fmt("20 facets: %zu triangles, %zu incircle violations; %zu edges, %zu with a gap; MLS max shift %.2e diam",
              triangles, delaunay_bad, edges, gap_bad, mls_worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"obstacle-free regions on 50 environments", criterion1},
      {"inscribed ellipsoid of boxes", criterion2},
      {"per-seed growth time", criterion3},
      {"culling matches the containment oracle", criterion4},
      {"boundary-error harness", criterion5},
      {"corner error exceeds straight error", criterion6},
      {"volume precision and recall", criterion7},
      {"bit-identical outputs across runs and workers", criterion8},
      {"refinement properties", criterion9},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %zu: %s | %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
