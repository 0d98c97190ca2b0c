#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "navcarve/geometry.hpp"

namespace navcarve {

struct Neighbor {
  std::uint32_t index = 0;
  double dist2 = 0.0;

  friend bool operator<(const Neighbor& l, const Neighbor& r) {
    return l.dist2 < r.dist2 || (l.dist2 == r.dist2 && l.index < r.index);
  }
};

/// Static 3D kd-tree over a borrowed point array. Built once, then read-only;
/// queries may run concurrently.
class KdTree {
 public:
  explicit KdTree(std::span<const Point3> points, std::size_t leaf_size = 16);

  /// The k nearest points ordered by (distance, index).
  std::vector<Neighbor> knn(const Point3& query, std::size_t k) const;

  /// Every point with |p - query| <= radius, ordered by index.
  std::vector<Neighbor> radius(const Point3& query, double radius) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;
    double split = 0.0;
    Aabb box;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void knn_rec(std::int32_t node, const Point3& q, std::size_t k, std::vector<Neighbor>& heap) const;
  void radius_rec(std::int32_t node, const Point3& q, double r2, std::vector<Neighbor>& out) const;

  std::span<const Point3> points_;
  std::size_t leaf_size_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace navcarve
