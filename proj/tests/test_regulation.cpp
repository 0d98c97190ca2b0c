#include <gtest/gtest.h>

#include <random>

#include "navcarve/error.hpp"
#include "navcarve/regulation.hpp"
#include "test_support.hpp"

namespace navcarve {
namespace {

RegionResult cube_region(std::uint32_t id, const Point3& lo, const Point3& hi) {
  return region_from_polytope(id, 0.5 * (lo + hi), box_polytope(lo, hi));
}

NeighborSet neighbors_of(std::uint32_t id, std::vector<Point3> pts) {
  NeighborSet n;
  n.seed_id = id;
  n.points = std::move(pts);
  n.indices.resize(n.points.size());
  for (std::uint32_t i = 0; i < n.indices.size(); ++i) n.indices[i] = i;
  n.k = n.points.size();
  return n;
}

// True iff every normalized margin of q at x is below -tol.
bool strictly_inside(const Polytope& q, const Point3& x, double tol) {
  for (const Halfspace& h : q.halfspaces) {
    if (halfspace_margin(h.normalized(), x) >= -tol) return false;
  }
  return true;
}

TEST(NavigableSpace, OffsetCubesAdjacent) {
  std::vector<RegionResult> r;
  r.push_back(cube_region(0, Point3(0, 0, 0), Point3(1, 1, 1)));
  r.push_back(cube_region(1, Point3(0.5, 0, 0), Point3(1.5, 1, 1)));
  const NavigableSpace s = build_navigable_space(std::move(r));
  ASSERT_EQ(s.adjacency.size(), 1u);
  EXPECT_EQ(s.adjacency[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_TRUE(s.adjacent(1, 0));
  EXPECT_TRUE(s.warnings.empty());
}

TEST(NavigableSpace, DisjointCubesWarn) {
  std::vector<RegionResult> r;
  r.push_back(cube_region(0, Point3(0, 0, 0), Point3(1, 1, 1)));
  r.push_back(cube_region(1, Point3(3, 0, 0), Point3(4, 1, 1)));
  const NavigableSpace s = build_navigable_space(std::move(r));
  EXPECT_TRUE(s.adjacency.empty());
  ASSERT_EQ(s.warnings.size(), 1u);
}

TEST(NavigableSpace, TouchingCubesDoNotOverlap) {
  EXPECT_FALSE(polytopes_overlap(box_polytope(Point3(0, 0, 0), Point3(1, 1, 1)),
                                 box_polytope(Point3(1, 0, 0), Point3(2, 1, 1))));
}

TEST(NavigableSpace, ChainMatchesPairwiseOracle) {
  std::vector<RegionResult> r;
  for (int i = 0; i < 5; ++i) r.push_back(cube_region(i, Point3(0.5 * i, 0, 0), Point3(0.5 * i + 1, 1, 1)));
  const NavigableSpace s = build_navigable_space(r);
  for (int i = 0; i + 1 < 5; ++i) EXPECT_TRUE(s.adjacent(i, i + 1));
  // Axis-aligned boxes overlap iff their intervals overlap with positive length on every axis.
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i + 1; j < 5; ++j) {
      const double gap = 0.5 * static_cast<double>(j - i);
      EXPECT_EQ(s.adjacent(i, j), gap < 1.0) << i << "," << j;
    }
  }
  EXPECT_TRUE(s.warnings.empty());
}

TEST(ProjectToHull, AxisExample) {
  const RegionResult r = cube_region(3, Point3(-1, -1, -1), Point3(1, 1, 1));
  const ProjectedCloud pc = project_to_hull(r, neighbors_of(3, {Point3(3, 0, 0)}));
  ASSERT_EQ(pc.size(), 1u);
  EXPECT_TRUE(pc.points[0].point.isApprox(Point3(1, 0, 0), 1e-12));
  EXPECT_EQ(pc.points[0].seed_id, 3u);
  EXPECT_TRUE(pc.points[0].plane.a.isApprox(Vec3(1, 0, 0), 1e-12));
  // box_polytope orders +x first, and hull facet groups take halfspace indices.
  EXPECT_EQ(pc.points[0].facet_group, 0);
}

TEST(ProjectToHull, SphereNeighborsAndIdempotence) {
  const RegionResult r = cube_region(0, Point3(-1, -1, -1), Point3(1, 1, 1));
  std::mt19937_64 rng(5);
  std::vector<Point3> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(3.0 * testing::random_unit(rng));
  const ProjectedCloud pc = project_to_hull(r, neighbors_of(0, pts));
  ASSERT_EQ(pc.size(), 100u);
  std::vector<Point3> again;
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const Point3& x = pc.points[i].point;
    EXPECT_NEAR(x.cwiseAbs().maxCoeff(), 1.0, 1e-12);
    // Radial: x is a positive multiple of the neighbor direction.
    EXPECT_NEAR(x.normalized().dot(pts[i].normalized()), 1.0, 1e-12);
    EXPECT_EQ(pc.points[i].source_index, i);
    EXPECT_NEAR(pc.points[i].plane.a.dot(x) - pc.points[i].plane.b, 0.0, 1e-9);
    again.push_back(x);
  }
  const ProjectedCloud pc2 = project_to_hull(r, neighbors_of(0, again));
  for (std::size_t i = 0; i < pc.size(); ++i) {
    EXPECT_LT((pc2.points[i].point - again[i]).norm(), 1e-9 * r.hull.diameter());
  }
}

TEST(ProjectToHull, SeedOnBoundary) {
  RegionResult r = cube_region(0, Point3(-1, -1, -1), Point3(1, 1, 1));
  r.seed = Point3(1, 0, 0);
  try {
    project_to_hull(r, neighbors_of(0, {Point3(3, 0, 0)}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SeedOnBoundary);
  }
}

TEST(CullOverlapping, Examples) {
  std::vector<RegionResult> r;
  r.push_back(cube_region(0, Point3(0, 0, 0), Point3(2, 2, 2)));
  r.push_back(cube_region(1, Point3(1, 0, 0), Point3(3, 2, 2)));
  const NavigableSpace s = build_navigable_space(std::move(r));
  ProjectedPoint inside;
  inside.point = Point3(2, 0.5, 0.5);
  ProjectedPoint edge;
  edge.point = Point3(2, 0.5, 2);
  edge.source_index = 1;
  std::vector<ProjectedCloud> clouds(2);
  clouds[0].points = {inside, edge};
  const ProjectedCloud out = cull_overlapping(clouds, s, 1e-9);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out.points[0].point.isApprox(edge.point));
  EXPECT_THROW(cull_overlapping({}, s, 1e-9), Error);
}

class CullChain : public ::testing::TestWithParam<int> {};

TEST_P(CullChain, MatchesBruteForceAndSegmentSampling) {
  std::mt19937_64 rng(100 + GetParam());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RegionResult> regions;
  double x = 0.0;
  for (std::uint32_t i = 0; i < 4; ++i) {
    const Point3 lo(x, -1.0 - u(rng), -1.0 - u(rng));
    const Point3 hi(x + 2.0 + u(rng), 1.0 + u(rng), 1.0 + u(rng));
    regions.push_back(cube_region(i, lo, hi));
    x = 0.5 * (lo.x() + hi.x()) + 0.3 * u(rng);
  }
  const NavigableSpace s = build_navigable_space(regions);
  for (std::size_t i = 0; i + 1 < 4; ++i) EXPECT_TRUE(s.adjacent(i, i + 1));

  std::vector<ProjectedCloud> clouds;
  for (const RegionResult& reg : regions) {
    std::vector<Point3> nb;
    for (int k = 0; k < 50; ++k) nb.push_back(reg.seed + 10.0 * testing::random_unit(rng));
    clouds.push_back(project_to_hull(reg, neighbors_of(reg.seed_id, nb)));
  }
  const double tol = default_cull_tolerance(s);
  const ProjectedCloud serial = cull_overlapping(clouds, s, tol, 1);
  const ProjectedCloud parallel = cull_overlapping(clouds, s, tol, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t k = 0; k < serial.size(); ++k) EXPECT_EQ(serial.points[k].point, parallel.points[k].point);

  std::vector<Point3> expected;
  for (std::size_t i = 0; i < 4; ++i) {
    for (const ProjectedPoint& pp : clouds[i].points) {
      bool in_other = false;
      for (std::size_t j = 0; j < 4; ++j) {
        if (j == i) continue;
        const bool strict = strictly_inside(regions[j].polytope, pp.point, tol);
        // Segment from seed_j to the point, sampled at 100 points, stays strictly inside j.
        bool segment = true;
        for (int t = 0; t <= 100 && segment; ++t) {
          const Point3 y = regions[j].seed + (t / 100.0) * (pp.point - regions[j].seed);
          segment = strictly_inside(regions[j].polytope, y, tol);
        }
        EXPECT_EQ(strict, segment);
        in_other = in_other || strict;
      }
      if (!in_other) expected.push_back(pp.point);
    }
  }
  ASSERT_EQ(serial.size(), expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_EQ(serial.points[k].point, expected[k]);
  for (const ProjectedPoint& pp : serial.points) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (j != pp.seed_id) EXPECT_FALSE(strictly_inside(regions[j].polytope, pp.point, tol));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Random, CullChain, ::testing::Range(0, 5));

}  // namespace
}  // namespace navcarve
