#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "navcarve/geometry.hpp"
#include "navcarve/preprocess.hpp"
#include "navcarve/regulation.hpp"

namespace navcarve {

using Point2 = Eigen::Vector2d;

/// Square loop corridor: outer square [0, A]^2, inner block of side B centred
/// in it with a notch of side A/10 cut from its (+x, +y) corner, walls of
/// height h. Floor and ceiling are sampled over the free region.
struct SyntheticEnvSpec {
  double outer_side = 12.0;
  double inner_side = 6.0;
  double wall_height = 3.0;
  double density = 20.0;           // points per unit^2 before modulation
  double noise_sigma = 0.15;       // isotropic Gaussian
  double outlier_fraction = 0.01;  // probability a sample is replaced by a uniform outlier
  double modulation = 0.6;         // density dip at corners, in [0, 1)
  double speed = 1.0;              // trajectory units per second
  bool floor_and_ceiling = true;
  std::uint64_t seed = 1;

  double corridor_width() const { return 0.5 * (outer_side - inner_side); }
  double notch_side() const { return 0.1 * outer_side; }
  void validate() const;
};

/// One evaluation area: a wall polyline with unit normals pointing into free space.
struct BoundaryArea {
  int label = 0;  // 1-4 outer, 5-8 inner
  bool outer = true;
  std::vector<Point2> polyline;
  std::vector<Point2> free_normal;  // per segment

  double length() const;
};

struct GroundTruth {
  double outer_side = 0.0;
  double wall_height = 0.0;
  Point2 block_min = Point2::Zero();
  Point2 block_max = Point2::Zero();
  double notch = 0.0;
  std::vector<Point2> outer_boundary;  // closed, first point not repeated
  std::vector<Point2> inner_boundary;  // closed, first point not repeated
  std::vector<BoundaryArea> areas;     // labels 1..8 in order

  double corridor_width() const { return 0.5 * (outer_side - (block_max.x() - block_min.x())); }
  bool in_obstacle_2d(const Point2& p) const;
  bool is_free(const Point3& p) const;
  /// Distance to the nearest wall, floor or ceiling surface.
  double surface_distance(const Point3& p) const;
  Aabb bounds() const;
  double free_volume() const;
};

struct SyntheticEnvironment {
  PointCloud cloud;  // wall samples tagged Raw, injected outliers tagged Outlier
  Trajectory trajectory;
  GroundTruth truth;
};

/// Deterministic for a fixed spec (including seed).
SyntheticEnvironment generate_environment(const SyntheticEnvSpec& spec);

/// Ground truth only, without sampling.
GroundTruth make_ground_truth(const SyntheticEnvSpec& spec);

struct AreaReport {
  int label = 0;
  bool outer = true;
  std::size_t cells = 0;
  std::size_t boundary_points = 0;
  std::size_t false_points = 0;
  double ssd = 0.0;             // over boundary and false points
  double avg_sq_error = 0.0;    // ssd / boundary_points (ssd / cells when none)
  std::size_t corner_cells = 0;
  double corner_ssd = 0.0;
  std::size_t straight_cells = 0;
  double straight_ssd = 0.0;
};

struct BoundaryReport {
  double units_per_meter = 1.0;  // scale already applied to every length
  double cell_size = 0.0;
  double band_depth = 0.0;
  std::vector<AreaReport> areas;
  std::size_t total_cells = 0;
  std::size_t total_boundary_points = 0;
  std::size_t total_false_points = 0;
  double total_ssd = 0.0;
  double avg_sq_error = 0.0;
  double corner_mean_sq_error = 0.0;    // pooled over cells centred within half a corridor width of an area end
  double straight_mean_sq_error = 0.0;  // pooled over the remaining cells

  double outer_avg_sq_error() const;
  double inner_avg_sq_error() const;
};

/// Grid-cell boundary error of x-y projected vertices. Each area's band is cut
/// into cells of side cell_size along the wall reaching band_depth to either
/// side; a cell's boundary point is its vertex closest to the wall, and an
/// empty cell contributes a false point at depth band_depth. band_depth <= 0
/// selects half the corridor width. Throws EmptyArea.
BoundaryReport boundary_error(std::span<const Point2> vertices, const GroundTruth& gt, double cell_size,
                              double band_depth = 0.0);

/// Projects every hull vertex of the space onto the x-y plane first.
BoundaryReport boundary_error(const NavigableSpace& space, const GroundTruth& gt, double cell_size,
                              double band_depth = 0.0);

/// Lengths divided by units_per_meter, squared errors by its square.
BoundaryReport apply_scale(const BoundaryReport& report, double units_per_meter);

struct VolumeMetrics {
  double recall = 0.0;
  double precision = 0.0;
  bool precision_defined = false;  // false when the union has no sampled volume
  double recall_stderr = 0.0;
  double precision_stderr = 0.0;
  double free_volume = 0.0;   // Monte-Carlo estimates
  double union_volume = 0.0;
  std::size_t samples = 0;
};

/// Recall and precision of the polytope union against the true free space,
/// from n shared uniform samples over a box covering both. Requires n >= 1e4.
VolumeMetrics volume_metrics(const NavigableSpace& space, const GroundTruth& gt, std::size_t n,
                             std::uint64_t rng_seed);

struct TimingReport {
  std::vector<std::pair<std::string, double>> stage_seconds;  // execution order
  std::size_t seed_count = 0;
  double seconds_per_seed = 0.0;  // grow-stage seconds / seed count

  void set(const std::string& stage, double seconds);
  double get(const std::string& stage) const;
  /// Recomputes seconds_per_seed from the "grow" entry.
  void finalize();
};

}  // namespace navcarve
