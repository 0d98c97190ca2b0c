#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "navcarve/kdtree.hpp"
#include "test_support.hpp"

namespace navcarve {
namespace {

std::vector<Neighbor> brute_knn(std::span<const Point3> pts, const Point3& q, std::size_t k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < pts.size(); ++i) all.push_back({static_cast<std::uint32_t>(i), (pts[i] - q).squaredNorm()});
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  return all;
}

TEST(KdTree, MatchesBruteForceOnRandomClouds) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = testing::random_points(rng, 500 * (trial + 1), -5.0, 5.0);
    const KdTree tree(pts);
    for (int q = 0; q < 50; ++q) {
      const Point3 query = testing::random_points(rng, 1, -6.0, 6.0).front();
      const std::size_t k = 1 + q % 40;
      const auto got = tree.knn(query, k);
      const auto want = brute_knn(pts, query, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].index, want[i].index);
    }
  }
}

TEST(KdTree, TiesResolvedByIndexOnGrid) {
  std::vector<Point3> grid;
  for (int x = 0; x <= 5; ++x)
    for (int y = 0; y <= 5; ++y)
      for (int z = 0; z <= 5; ++z) grid.emplace_back(x, y, z);
  const KdTree tree(grid);
  for (const Point3& q : {Point3(0, 0, 0), Point3(2.5, 2.5, 2.5), Point3(1, 2, 3)}) {
    for (std::size_t k : {1U, 4U, 7U, 27U, 100U}) {
      const auto got = tree.knn(q, k);
      const auto want = brute_knn(grid, q, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].index, want[i].index);
    }
  }
}

TEST(KdTree, RadiusSearch) {
  std::mt19937_64 rng(4);
  const auto pts = testing::random_points(rng, 3000, 0.0, 1.0);
  const KdTree tree(pts);
  const Point3 q(0.5, 0.5, 0.5);
  const auto got = tree.radius(q, 0.2);
  std::vector<std::uint32_t> want;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if ((pts[i] - q).norm() <= 0.2) want.push_back(static_cast<std::uint32_t>(i));
  }
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].index, want[i]);
}

TEST(KdTree, SmallAndEmpty) {
  const std::vector<Point3> none;
  EXPECT_TRUE(KdTree(none).knn(Point3::Zero(), 3).empty());
  const std::vector<Point3> two{Point3(1, 0, 0), Point3(0, 0, 0)};
  const auto got = KdTree(two).knn(Point3::Zero(), 5);
  ASSERT_EQ(got.size(), 2U);
  EXPECT_EQ(got[0].index, 1U);
}

}  // namespace
}  // namespace navcarve
