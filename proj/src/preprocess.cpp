#include "navcarve/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "navcarve/error.hpp"

namespace navcarve {

void Trajectory::validate() const {
  if (poses.size() < 2) throw Error(ErrorCode::InvalidArgument, "trajectory needs at least 2 poses");
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (!(poses[i].t > poses[i - 1].t)) {
      throw Error(ErrorCode::NonMonotoneTime, "timestamp of pose " + std::to_string(i) + " does not increase");
    }
  }
}

double Trajectory::duration() const { return poses.empty() ? 0.0 : poses.back().t - poses.front().t; }

double Trajectory::arc_length() const {
  double s = 0.0;
  for (std::size_t i = 1; i < poses.size(); ++i) s += (poses[i].position - poses[i - 1].position).norm();
  return s;
}

std::vector<bool> statistical_outlier_mask(const PointCloud& cloud, std::size_t k, double alpha) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "outlier filter needs k >= 1");
  const std::size_t n = cloud.size();
  if (n <= k) {
    throw Error(ErrorCode::TooFewPoints,
                "cloud has " + std::to_string(n) + " points, outlier filter needs more than k=" + std::to_string(k));
  }

  const KdTree tree(cloud.points);
  std::vector<double> mean_dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto nbrs = tree.knn(cloud.points[i], k + 1);
    auto self = std::find_if(nbrs.begin(), nbrs.end(), [&](const Neighbor& nb) { return nb.index == i; });
    if (self != nbrs.end()) {
      nbrs.erase(self);
    } else {
      nbrs.pop_back();
    }
    double sum = 0.0;
    for (const Neighbor& nb : nbrs) sum += std::sqrt(nb.dist2);
    mean_dist[i] = sum / static_cast<double>(k);
  }

  double mean = 0.0;
  for (double m : mean_dist) mean += m;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double m : mean_dist) var += (m - mean) * (m - mean);
  const double sigma = std::sqrt(var / static_cast<double>(n - 1));

  std::vector<bool> keep(n, true);
  if (std::isinf(alpha) && alpha > 0.0) return keep;
  const double threshold = sigma > 0.0 ? mean + alpha * sigma : mean;
  const double slack = 1e-12 * std::max(std::abs(threshold), 1.0);
  for (std::size_t i = 0; i < n; ++i) keep[i] = mean_dist[i] <= threshold + slack;
  return keep;
}

PointCloud statistical_outlier_removal(const PointCloud& cloud, std::size_t k, double alpha) {
  const std::vector<bool> keep = statistical_outlier_mask(cloud, k, alpha);
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!keep[i]) continue;
    out.points.push_back(cloud.points[i]);
    if (!cloud.tags.empty()) out.tags.push_back(cloud.tags[i]);
  }
  return out;
}

SeedSet sample_seeds(const Trajectory& traj, double interval, SeedMode mode) {
  if (!(interval > 0.0)) throw Error(ErrorCode::InvalidArgument, "seed interval must be positive");
  traj.validate();

  const auto& poses = traj.poses;
  std::vector<double> param(poses.size(), 0.0);
  for (std::size_t i = 1; i < poses.size(); ++i) {
    param[i] = mode == SeedMode::ByTime
                   ? poses[i].t - poses.front().t
                   : param[i - 1] + (poses[i].position - poses[i - 1].position).norm();
  }
  const double total = param.back();
  const double eps = 1e-9 * std::max(total, interval);

  SeedSet out;
  out.interval = interval;
  out.mode = mode;
  std::size_t seg = 0;
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * interval;
    if (s >= total - eps) break;
    while (seg + 2 < param.size() && param[seg + 1] < s) ++seg;
    const double span = param[seg + 1] - param[seg];
    const double w = span > 0.0 ? std::clamp((s - param[seg]) / span, 0.0, 1.0) : 0.0;
    const Point3 p = (1.0 - w) * poses[seg].position + w * poses[seg + 1].position;
    out.seeds.push_back({static_cast<std::uint32_t>(out.seeds.size()), p});
  }
  out.seeds.push_back({static_cast<std::uint32_t>(out.seeds.size()), poses.back().position});
  return out;
}

NeighborSet knn_neighbors(const KdTree& index, std::span<const Point3> cloud, const Point3& seed, std::size_t k) {
  if (k < 4) throw Error(ErrorCode::InvalidArgument, "k-NN neighborhoods need k >= 4");
  NeighborSet out;
  out.k = k;
  for (const Neighbor& nb : index.knn(seed, k)) {
    out.indices.push_back(nb.index);
    out.points.push_back(cloud[nb.index]);
  }
  return out;
}

NeighborSet knn_neighbors(const PointCloud& cloud, const Point3& seed, std::size_t k) {
  if (cloud.empty()) throw Error(ErrorCode::InvalidArgument, "k-NN on an empty cloud");
  const KdTree tree(cloud.points);
  return knn_neighbors(tree, cloud.points, seed, k);
}

NeighborSet seed_relative_filter(const NeighborSet& nbrs, const Point3& seed, double radius_factor) {
  if (!(radius_factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "radius_factor must be positive");
  if (nbrs.points.empty() || std::isinf(radius_factor)) return nbrs;

  Point3 centroid = Point3::Zero();
  std::vector<double> seed_dist;
  seed_dist.reserve(nbrs.count());
  for (const Point3& p : nbrs.points) {
    centroid += p;
    seed_dist.push_back((p - seed).norm());
  }
  centroid /= static_cast<double>(nbrs.count());

  std::vector<double> sorted = seed_dist;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  const double limit = radius_factor * median;

  NeighborSet out;
  out.seed_id = nbrs.seed_id;
  out.k = nbrs.k;
  for (std::size_t i = 0; i < nbrs.count(); ++i) {
    const bool far = seed_dist[i] > limit && (nbrs.points[i] - centroid).norm() > limit;
    if (far) continue;
    out.points.push_back(nbrs.points[i]);
    if (i < nbrs.indices.size()) out.indices.push_back(nbrs.indices[i]);
  }
  return out;
}

}  // namespace navcarve
