#include "navcarve/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "navcarve/error.hpp"

namespace navcarve {

void SyntheticEnvSpec::validate() const {
  if (!(outer_side > inner_side) || !(inner_side > 0.0)) {
    throw Error(ErrorCode::ConfigError, "synthetic spec needs outer_side > inner_side > 0");
  }
  if (!(wall_height > 0.0) || !(density > 0.0) || !(speed > 0.0)) {
    throw Error(ErrorCode::ConfigError, "wall_height, density and speed must be positive");
  }
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::ConfigError, "noise_sigma must be non-negative");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigError, "outlier_fraction must lie in [0, 1)");
  }
  if (!(modulation >= 0.0 && modulation < 1.0)) throw Error(ErrorCode::ConfigError, "modulation must lie in [0, 1)");
  if (!(notch_side() < inner_side)) throw Error(ErrorCode::ConfigError, "notch does not fit the inner block");
}

double BoundaryArea::length() const {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) len += (polyline[i + 1] - polyline[i]).norm();
  return len;
}

bool GroundTruth::in_obstacle_2d(const Point2& p) const {
  const bool in_block = p.x() > block_min.x() && p.x() < block_max.x() && p.y() > block_min.y() && p.y() < block_max.y();
  const bool in_notch = p.x() > block_max.x() - notch && p.y() > block_max.y() - notch;
  return in_block && !in_notch;
}

bool GroundTruth::is_free(const Point3& p) const {
  if (!(p.x() > 0.0 && p.x() < outer_side && p.y() > 0.0 && p.y() < outer_side)) return false;
  if (!(p.z() > 0.0 && p.z() < wall_height)) return false;
  return !in_obstacle_2d(p.head<2>());
}

namespace {

double segment_distance(const Point2& p, const Point2& a, const Point2& b) {
  const Point2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double boundary_distance_2d(const GroundTruth& gt, const Point2& p) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto* loop : {&gt.outer_boundary, &gt.inner_boundary}) {
    for (std::size_t i = 0; i < loop->size(); ++i) {
      d = std::min(d, segment_distance(p, (*loop)[i], (*loop)[(i + 1) % loop->size()]));
    }
  }
  return d;
}

bool free_2d(const GroundTruth& gt, const Point2& p) {
  return p.x() > 0.0 && p.x() < gt.outer_side && p.y() > 0.0 && p.y() < gt.outer_side && !gt.in_obstacle_2d(p);
}

}  // namespace

double GroundTruth::surface_distance(const Point3& p) const {
  const Point2 q = p.head<2>();
  const double wall2d = boundary_distance_2d(*this, q);
  const double below = std::max(0.0, -p.z());
  const double above = std::max(0.0, p.z() - wall_height);
  const double wall = std::hypot(wall2d, below + above);
  const double plane2d = free_2d(*this, q) ? 0.0 : wall2d;
  const double floor = std::hypot(plane2d, p.z());
  const double ceiling = std::hypot(plane2d, p.z() - wall_height);
  return std::min({wall, floor, ceiling});
}

Aabb GroundTruth::bounds() const { return {Point3(0, 0, 0), Point3(outer_side, outer_side, wall_height)}; }

double GroundTruth::free_volume() const {
  const Point2 block = block_max - block_min;
  return (outer_side * outer_side - block.x() * block.y() + notch * notch) * wall_height;
}

GroundTruth make_ground_truth(const SyntheticEnvSpec& spec) {
  spec.validate();
  GroundTruth gt;
  const double A = spec.outer_side;
  const double lo = 0.5 * (A - spec.inner_side);
  const double hi = 0.5 * (A + spec.inner_side);
  const double n = spec.notch_side();
  gt.outer_side = A;
  gt.wall_height = spec.wall_height;
  gt.block_min = Point2(lo, lo);
  gt.block_max = Point2(hi, hi);
  gt.notch = n;
  gt.outer_boundary = {{0, 0}, {A, 0}, {A, A}, {0, A}};
  gt.inner_boundary = {{lo, lo}, {hi, lo}, {hi, hi - n}, {hi - n, hi - n}, {hi - n, hi}, {lo, hi}};

  const Point2 up(0, 1), down(0, -1), right(1, 0), left(-1, 0);
  gt.areas = {
      {1, true, {{0, 0}, {A, 0}}, {up}},
      {2, true, {{A, 0}, {A, A}}, {left}},
      {3, true, {{A, A}, {0, A}}, {down}},
      {4, true, {{0, A}, {0, 0}}, {right}},
      {5, false, {{lo, lo}, {hi, lo}}, {down}},
      {6, false, {{hi, lo}, {hi, hi - n}, {hi - n, hi - n}}, {right, up}},
      {7, false, {{hi - n, hi - n}, {hi - n, hi}, {lo, hi}}, {right, up}},
      {8, false, {{lo, hi}, {lo, lo}}, {left}},
  };
  return gt;
}

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return unit_uniform(rng_()); }

  double gaussian() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
};

// Density factor along a wall or corridor leg: 1 - amp at the ends, 1 midway.
double modulation_factor(double amp, double u) { return 1.0 - amp * 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * u)); }

struct Leg {
  Point2 a, b;
};

std::vector<Leg> centerline(const SyntheticEnvSpec& spec) {
  const double A = spec.outer_side;
  const double c = 0.5 * spec.corridor_width();
  const Point2 p0(c, c), p1(A - c, c), p2(A - c, A - c), p3(c, A - c);
  return {{p0, p1}, {p1, p2}, {p2, p3}, {p3, p0}};
}

double leg_parameter(const std::vector<Leg>& legs, const Point2& p) {
  double best = std::numeric_limits<double>::infinity();
  double param = 0.0;
  for (const Leg& leg : legs) {
    const Point2 ab = leg.b - leg.a;
    const double t = std::clamp((p - leg.a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const double d = (p - (leg.a + t * ab)).norm();
    if (d < best) {
      best = d;
      param = t;
    }
  }
  return param;
}

}  // namespace

SyntheticEnvironment generate_environment(const SyntheticEnvSpec& spec) {
  SyntheticEnvironment env;
  env.truth = make_ground_truth(spec);
  const GroundTruth& gt = env.truth;
  const double A = spec.outer_side;
  const double h = spec.wall_height;
  Sampler rng(spec.seed);

  const Point3 box_center(0.5 * A, 0.5 * A, 0.5 * h);
  const Vec3 box_half(A, A, h);  // environment box inflated 2x about its centre
  auto emit = [&](const Point3& surface_point) {
    if (rng.uniform() < spec.outlier_fraction) {
      Point3 p;
      for (int k = 0; k < 3; ++k) p[k] = box_center[k] + box_half[k] * (2.0 * rng.uniform() - 1.0);
      env.cloud.points.push_back(p);
      env.cloud.tags.push_back(PointTag::Outlier);
      return;
    }
    Point3 p = surface_point;
    if (spec.noise_sigma > 0.0) {
      for (int k = 0; k < 3; ++k) p[k] += spec.noise_sigma * rng.gaussian();
    }
    env.cloud.points.push_back(p);
    env.cloud.tags.push_back(PointTag::Raw);
  };

  for (const auto* loop : {&gt.outer_boundary, &gt.inner_boundary}) {
    for (std::size_t i = 0; i < loop->size(); ++i) {
      const Point2 a = (*loop)[i];
      const Point2 b = (*loop)[(i + 1) % loop->size()];
      const double len = (b - a).norm();
      const auto candidates = static_cast<std::size_t>(std::llround(spec.density * len * h));
      for (std::size_t c = 0; c < candidates; ++c) {
        const double u = rng.uniform();
        const double z = h * rng.uniform();
        if (rng.uniform() >= modulation_factor(spec.modulation, u)) continue;
        const Point2 q = a + u * (b - a);
        emit(Point3(q.x(), q.y(), z));
      }
    }
  }

  if (spec.floor_and_ceiling) {
    const auto legs = centerline(spec);
    const double area = gt.free_volume() / h;
    for (const double z : {0.0, h}) {
      const auto candidates = static_cast<std::size_t>(std::llround(spec.density * area));
      for (std::size_t c = 0; c < candidates; ++c) {
        Point2 q;
        do {
          q = Point2(A * rng.uniform(), A * rng.uniform());
        } while (gt.in_obstacle_2d(q));
        if (rng.uniform() >= modulation_factor(spec.modulation, leg_parameter(legs, q))) continue;
        emit(Point3(q.x(), q.y(), z));
      }
    }
  }

  // Closed loop along the corridor centreline, starting midway along the first leg.
  const auto legs = centerline(spec);
  std::vector<Point2> path = {0.5 * (legs[0].a + legs[0].b)};
  for (const Leg& leg : {legs[1], legs[2], legs[3], legs[0]}) path.push_back(leg.a);
  path.push_back(path.front());
  std::vector<double> cumulative = {0.0};
  for (std::size_t i = 1; i < path.size(); ++i) cumulative.push_back(cumulative.back() + (path[i] - path[i - 1]).norm());
  const double duration = cumulative.back() / spec.speed;
  auto at = [&](double s) {
    std::size_t i = 1;
    while (i + 1 < path.size() && cumulative[i] < s) ++i;
    const double f = std::clamp((s - cumulative[i - 1]) / (cumulative[i] - cumulative[i - 1]), 0.0, 1.0);
    const Point2 q = path[i - 1] + f * (path[i] - path[i - 1]);
    return Point3(q.x(), q.y(), 0.5 * h);
  };
  const auto steps = static_cast<std::size_t>(std::floor(duration / 0.1 + 1e-9));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = 0.1 * static_cast<double>(k);
    env.trajectory.poses.push_back({t, at(spec.speed * t)});
  }
  if (env.trajectory.poses.back().t < duration - 1e-9) env.trajectory.poses.push_back({duration, at(cumulative.back())});
  return env;
}

double BoundaryReport::outer_avg_sq_error() const {
  double ssd = 0.0;
  std::size_t pts = 0;
  for (const AreaReport& a : areas) {
    if (!a.outer) continue;
    ssd += a.ssd;
    pts += a.boundary_points;
  }
  return pts > 0 ? ssd / static_cast<double>(pts) : 0.0;
}

double BoundaryReport::inner_avg_sq_error() const {
  double ssd = 0.0;
  std::size_t pts = 0;
  for (const AreaReport& a : areas) {
    if (a.outer) continue;
    ssd += a.ssd;
    pts += a.boundary_points;
  }
  return pts > 0 ? ssd / static_cast<double>(pts) : 0.0;
}

BoundaryReport boundary_error(std::span<const Point2> vertices, const GroundTruth& gt, double cell_size,
                              double band_depth) {
  if (!(cell_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell_size must be positive");
  const double depth = band_depth > 0.0 ? band_depth : 0.5 * gt.corridor_width();
  const double corner_reach = 0.5 * gt.corridor_width();

  BoundaryReport report;
  report.cell_size = cell_size;
  report.band_depth = depth;
  std::size_t corner_total = 0;
  std::size_t straight_total = 0;
  double corner_sum = 0.0;
  double straight_sum = 0.0;

  for (const BoundaryArea& area : gt.areas) {
    AreaReport ar;
    ar.label = area.label;
    ar.outer = area.outer;
    const double total_len = area.length();
    double arc = 0.0;
    for (std::size_t s = 0; s + 1 < area.polyline.size(); ++s) {
      const Point2 a = area.polyline[s];
      const Point2 b = area.polyline[s + 1];
      const double len = (b - a).norm();
      const Point2 dir = (b - a) / len;
      const Point2 nrm = area.free_normal[s];
      const auto count = static_cast<std::size_t>(std::floor(len / cell_size + 1e-9));
      const double offset = 0.5 * (len - static_cast<double>(count) * cell_size);
      std::vector<double> best(count, std::numeric_limits<double>::infinity());
      for (const Point2& v : vertices) {
        const double along = (v - a).dot(dir) - offset;
        const double across = std::abs((v - a).dot(nrm));
        if (along < 0.0 || across > depth) continue;
        const auto k = static_cast<std::size_t>(std::floor(along / cell_size));
        if (k >= count) continue;
        best[k] = std::min(best[k], across);
      }
      for (std::size_t k = 0; k < count; ++k) {
        const bool found = std::isfinite(best[k]);
        const double err = found ? best[k] : depth;
        const double sq = err * err;
        ++ar.cells;
        found ? ++ar.boundary_points : ++ar.false_points;
        ar.ssd += sq;
        const double centre = arc + offset + (static_cast<double>(k) + 0.5) * cell_size;
        if (std::min(centre, total_len - centre) < corner_reach) {
          ++ar.corner_cells;
          ar.corner_ssd += sq;
        } else {
          ++ar.straight_cells;
          ar.straight_ssd += sq;
        }
      }
      arc += len;
    }
    if (ar.cells == 0) {
      throw Error(ErrorCode::EmptyArea, "area " + std::to_string(area.label) + " has no cells at this cell size");
    }
    ar.avg_sq_error = ar.ssd / static_cast<double>(ar.boundary_points > 0 ? ar.boundary_points : ar.cells);
    report.total_cells += ar.cells;
    report.total_boundary_points += ar.boundary_points;
    report.total_false_points += ar.false_points;
    report.total_ssd += ar.ssd;
    corner_total += ar.corner_cells;
    straight_total += ar.straight_cells;
    corner_sum += ar.corner_ssd;
    straight_sum += ar.straight_ssd;
    report.areas.push_back(ar);
  }
  report.avg_sq_error = report.total_ssd / static_cast<double>(report.total_boundary_points > 0
                                                                   ? report.total_boundary_points
                                                                   : report.total_cells);
  report.corner_mean_sq_error = corner_total > 0 ? corner_sum / static_cast<double>(corner_total) : 0.0;
  report.straight_mean_sq_error = straight_total > 0 ? straight_sum / static_cast<double>(straight_total) : 0.0;
  return report;
}

BoundaryReport boundary_error(const NavigableSpace& space, const GroundTruth& gt, double cell_size,
                              double band_depth) {
  if (space.regions.empty()) throw Error(ErrorCode::InvalidArgument, "navigable space is empty");
  std::vector<Point2> vertices;
  for (const RegionResult& r : space.regions) {
    for (const Point3& v : r.hull.vertices) vertices.push_back(v.head<2>());
  }
  return boundary_error(vertices, gt, cell_size, band_depth);
}

BoundaryReport apply_scale(const BoundaryReport& report, double units_per_meter) {
  if (!(units_per_meter > 0.0)) throw Error(ErrorCode::InvalidArgument, "units_per_meter must be positive");
  const double s = units_per_meter;
  const double s2 = s * s;
  BoundaryReport out = report;
  out.units_per_meter = report.units_per_meter * s;
  out.cell_size /= s;
  out.band_depth /= s;
  out.total_ssd /= s2;
  out.avg_sq_error /= s2;
  out.corner_mean_sq_error /= s2;
  out.straight_mean_sq_error /= s2;
  for (AreaReport& a : out.areas) {
    a.ssd /= s2;
    a.avg_sq_error /= s2;
    a.corner_ssd /= s2;
    a.straight_ssd /= s2;
  }
  return out;
}

VolumeMetrics volume_metrics(const NavigableSpace& space, const GroundTruth& gt, std::size_t n,
                             std::uint64_t rng_seed) {
  if (n < 10000) throw Error(ErrorCode::InvalidArgument, "volume_metrics needs at least 1e4 samples");
  Aabb box = gt.bounds();
  std::vector<Aabb> boxes;
  std::vector<Polytope> polys;
  for (const RegionResult& r : space.regions) {
    boxes.push_back(r.hull.bounds());
    polys.push_back(r.polytope);
    box.extend(boxes.back().min);
    box.extend(boxes.back().max);
  }

  std::size_t in_free = 0;
  std::size_t in_union = 0;
  std::size_t in_both = 0;
  auto classify = [&](const Point3& p) {
    const bool free = gt.is_free(p);
    bool covered = false;
    for (std::size_t j = 0; j < polys.size() && !covered; ++j) {
      covered = boxes[j].contains(p) && polytope_contains(polys[j], p, 0.0);
    }
    in_free += free;
    in_union += covered;
    in_both += free && covered;
    return free;
  };
  monte_carlo_volume(classify, box, n, rng_seed);

  VolumeMetrics m;
  m.samples = n;
  const double cell = box.volume() / static_cast<double>(n);
  m.free_volume = cell * static_cast<double>(in_free);
  m.union_volume = cell * static_cast<double>(in_union);
  auto ratio = [](std::size_t hit, std::size_t of, double& stderr_out) {
    const double r = static_cast<double>(hit) / static_cast<double>(of);
    stderr_out = std::sqrt(r * (1.0 - r) / static_cast<double>(of));
    return r;
  };
  if (in_free > 0) m.recall = ratio(in_both, in_free, m.recall_stderr);
  if (in_union > 0) {
    m.precision = ratio(in_both, in_union, m.precision_stderr);
    m.precision_defined = true;
  }
  return m;
}

void TimingReport::set(const std::string& stage, double seconds) {
  for (auto& [name, value] : stage_seconds) {
    if (name == stage) {
      value = seconds;
      return;
    }
  }
  stage_seconds.emplace_back(stage, seconds);
}

double TimingReport::get(const std::string& stage) const {
  for (const auto& [name, value] : stage_seconds) {
    if (name == stage) return value;
  }
  return 0.0;
}

void TimingReport::finalize() {
  seconds_per_seed = seed_count > 0 ? get("grow") / static_cast<double>(seed_count) : 0.0;
}

}  // namespace navcarve
