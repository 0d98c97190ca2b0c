#pragma once

#include <cstdint>
#include <vector>

#include "navcarve/geometry.hpp"
#include "navcarve/kdtree.hpp"

namespace navcarve {

enum class PointTag : std::uint8_t { Raw, Outlier, Filtered, Projected };

/// Ordered point set. `tags` is either empty or holds one tag per point.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<PointTag> tags;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct Pose {
  double t = 0.0;
  Point3 position = Point3::Zero();
};

struct Trajectory {
  std::vector<Pose> poses;

  /// Throws InvalidArgument (fewer than 2 poses) or NonMonotoneTime.
  void validate() const;
  double duration() const;
  double arc_length() const;
};

enum class SeedMode { ByTime, ByArcLength };

struct Seed {
  std::uint32_t id = 0;
  Point3 position = Point3::Zero();
};

struct SeedSet {
  std::vector<Seed> seeds;
  double interval = 1.0;
  SeedMode mode = SeedMode::ByTime;
};

struct NeighborSet {
  std::uint32_t seed_id = 0;
  std::vector<Point3> points;
  std::vector<std::uint32_t> indices;  // into the cloud the neighbors were drawn from
  std::size_t k = 0;

  std::size_t count() const { return points.size(); }
};

/// Per-point keep flags: mean distance to the k nearest other points must not
/// exceed mean + alpha * stddev over the cloud. Throws TooFewPoints.
std::vector<bool> statistical_outlier_mask(const PointCloud& cloud, std::size_t k, double alpha);

PointCloud statistical_outlier_removal(const PointCloud& cloud, std::size_t k, double alpha);

/// Seeds at every `interval` of elapsed time or arc length, interpolated
/// along the trajectory; the first and last poses are always seeds.
SeedSet sample_seeds(const Trajectory& traj, double interval, SeedMode mode);

NeighborSet knn_neighbors(const KdTree& index, std::span<const Point3> cloud, const Point3& seed, std::size_t k);
NeighborSet knn_neighbors(const PointCloud& cloud, const Point3& seed, std::size_t k);

/// Drops points farther than radius_factor * median(seed distance) from both
/// the seed and the neighborhood centroid. Order preserved.
NeighborSet seed_relative_filter(const NeighborSet& nbrs, const Point3& seed, double radius_factor);

}  // namespace navcarve
