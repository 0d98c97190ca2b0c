#include "navcarve/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace navcarve {
namespace {

double box_dist2(const Aabb& box, const Point3& q) {
  const Vec3 below = (box.min - q).cwiseMax(0.0);
  const Vec3 above = (q - box.max).cwiseMax(0.0);
  return below.squaredNorm() + above.squaredNorm();
}

}  // namespace

KdTree::KdTree(std::span<const Point3> points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0U);
  if (!points_.empty()) root_ = build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  for (std::uint32_t i = begin; i < end; ++i) node.box.extend(points_[order_[i]]);
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return id;

  int axis = 0;
  (node.box.max - node.box.min).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][axis];
                     const double pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid]][axis];
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<Neighbor> KdTree::knn(const Point3& query, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (root_ < 0 || k == 0) return heap;
  heap.reserve(k + 1);
  knn_rec(root_, query, std::min(k, points_.size()), heap);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

void KdTree::knn_rec(std::int32_t id, const Point3& q, std::size_t k, std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[id];
  // Equal distance must still be explored: a tied point with a lower index wins.
  if (heap.size() == k && box_dist2(node.box, q) > heap.front().dist2) return;

  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const Neighbor cand{idx, (points_[idx] - q).squaredNorm()};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const bool left_first = q[node.axis] < node.split;
  knn_rec(left_first ? node.left : node.right, q, k, heap);
  knn_rec(left_first ? node.right : node.left, q, k, heap);
}

std::vector<Neighbor> KdTree::radius(const Point3& query, double radius) const {
  std::vector<Neighbor> out;
  if (root_ < 0 || radius < 0.0) return out;
  radius_rec(root_, query, radius * radius, out);
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
  return out;
}

void KdTree::radius_rec(std::int32_t id, const Point3& q, double r2, std::vector<Neighbor>& out) const {
  const Node& node = nodes_[id];
  if (box_dist2(node.box, q) > r2) return;
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 <= r2) out.push_back({idx, d2});
    }
    return;
  }
  radius_rec(node.left, q, r2, out);
  radius_rec(node.right, q, r2, out);
}

}  // namespace navcarve
