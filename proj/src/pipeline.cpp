#include "navcarve/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include "navcarve/evaluation.hpp"
#include "navcarve/kdtree.hpp"
#include "navcarve/parallel.hpp"
#include "navcarve/regulation.hpp"

#ifndef NAVCARVE_VERSION
#define NAVCARVE_VERSION "0.0.0"
#endif

namespace navcarve {

namespace {

[[noreturn]] void config_fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "config key '" + key + "': " + what);
}

double real_of(const Json& v, const std::string& key) {
  if (!v.is_number()) config_fail(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) config_fail(key, "expected a finite number");
  return x;
}

std::uint64_t count_of(const Json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) config_fail(key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
  }
  config_fail(key, "expected a non-negative integer");
}

bool bool_of(const Json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer() && (v.get<std::int64_t>() == 0 || v.get<std::int64_t>() == 1)) {
    return v.get<std::int64_t>() == 1;
  }
  config_fail(key, "expected true or false");
}

struct Field {
  const char* name;
  std::function<Json(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const Json&)> put;
};

#define NC_REAL(key, member)                                                  \
  Field {                                                                     \
    key, [](const PipelineConfig& c) { return Json(c.member); },              \
        [](PipelineConfig& c, const Json& v) { c.member = real_of(v, key); } \
  }
#define NC_COUNT(key, member, type)                                                                 \
  Field {                                                                                           \
    key, [](const PipelineConfig& c) { return Json(c.member); },                                    \
        [](PipelineConfig& c, const Json& v) { c.member = static_cast<type>(count_of(v, key)); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      NC_COUNT("filter_k", filter_k, std::size_t),
      NC_REAL("filter_alpha", filter_alpha),
      NC_REAL("seed_interval", seed_interval),
      Field{"seed_mode",
            [](const PipelineConfig& c) { return Json(c.seed_mode == SeedMode::ByTime ? "time" : "arclength"); },
            [](PipelineConfig& c, const Json& v) {
              if (v == "time") c.seed_mode = SeedMode::ByTime;
              else if (v == "arclength") c.seed_mode = SeedMode::ByArcLength;
              else config_fail("seed_mode", "expected \"time\" or \"arclength\"");
            }},
      NC_COUNT("knn_k", knn_k, std::size_t),
      NC_REAL("radius_factor", radius_factor),
      NC_COUNT("min_neighbors", min_neighbors, std::size_t),
      NC_REAL("growth_threshold", growth.growth_threshold),
      NC_COUNT("max_iterations", growth.max_iterations, int),
      NC_REAL("bounding_margin", growth.bounding_margin),
      NC_REAL("ball_init_radius", growth.ball_init_radius),
      NC_REAL("cull_tol", cull_tol),
      Field{"refine", [](const PipelineConfig& c) { return Json(c.refine); },
            [](PipelineConfig& c, const Json& v) { c.refine = bool_of(v, "refine"); }},
      NC_REAL("voxel_cell", refinement.cell),
      NC_REAL("max_edge", refinement.max_edge),
      NC_REAL("mls_radius", refinement.mls_radius),
      NC_COUNT("mls_degree", refinement.mls_degree, int),
      NC_REAL("eval_cell_size", eval_cell_size),
      NC_REAL("band_depth", band_depth),
      NC_REAL("units_per_meter", units_per_meter),
      NC_COUNT("volume_samples", volume_samples, std::size_t),
      NC_COUNT("rng_seed", rng_seed, std::uint64_t),
      NC_COUNT("workers", workers, std::size_t),
  };
  return table;
}

#undef NC_REAL
#undef NC_COUNT

const Field& field(const std::string& key) {
  for (const Field& f : fields()) {
    if (key == f.name) return f;
  }
  throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  PipelineConfig cfg;
  for (const auto& [key, value] : j.items()) field(key).put(cfg, value);
  cfg.validate();
  return cfg;
}

Json PipelineConfig::to_json() const {
  Json j = Json::object();
  for (const Field& f : fields()) j[f.name] = f.get(*this);
  return j;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const Field& f = field(key);
  Json v;
  try {
    v = Json::parse(value);
  } catch (const Json::parse_error&) {
    v = value;  // bare words such as `time`
  }
  f.put(*this, v);
}

std::vector<std::string> PipelineConfig::keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.emplace_back(f.name);
  return out;
}

void PipelineConfig::validate() const {
  if (filter_k < 1) config_fail("filter_k", "must be >= 1");
  if (!(filter_alpha >= 0.0)) config_fail("filter_alpha", "must be >= 0");
  if (!(seed_interval > 0.0)) config_fail("seed_interval", "must be > 0");
  if (knn_k < 4) config_fail("knn_k", "must be >= 4");
  if (!(radius_factor > 0.0)) config_fail("radius_factor", "must be > 0");
  if (min_neighbors < 1 || min_neighbors > knn_k) config_fail("min_neighbors", "must lie in [1, knn_k]");
  growth.validate();
  if (!(cull_tol >= 0.0)) config_fail("cull_tol", "must be >= 0");
  refinement.validate();
  if (!(eval_cell_size > 0.0)) config_fail("eval_cell_size", "must be > 0");
  if (!(band_depth >= 0.0)) config_fail("band_depth", "must be >= 0");
  if (!(units_per_meter > 0.0)) config_fail("units_per_meter", "must be > 0");
  if (volume_samples < 10000) config_fail("volume_samples", "must be >= 10000");
}

std::size_t PipelineConfig::resolved_workers() const {
  std::size_t w = workers;
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NAVCARVE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) w = std::min<std::size_t>(w, static_cast<std::size_t>(cap));
  }
  return w;
}

Json RunManifest::to_json() const {
  Json in = Json::object();
  for (const auto& [p, d] : inputs) in[p] = d;
  Json stages = Json::object();
  for (const auto& [s, t] : stage_seconds) stages[s] = t;
  Json out = Json::object();
  for (const auto& [p, d] : outputs) out[p] = d;
  Json j;
  j["artifact_version"] = artifact_version;
  j["status"] = status;
  if (!failed_stage.empty()) {
    j["failed_stage"] = failed_stage;
    j["error"] = error;
  }
  j["config"] = config;
  j["inputs"] = in;
  j["stage_seconds"] = stages;
  j["outputs"] = out;
  j["warnings"] = warnings;
  return j;
}

RunManifest RunManifest::from_json(const Json& j) {
  try {
    RunManifest m;
    m.artifact_version = j.at("artifact_version").get<std::string>();
    m.status = j.at("status").get<std::string>();
    if (j.contains("failed_stage")) {
      m.failed_stage = j.at("failed_stage").get<std::string>();
      m.error = j.at("error").get<std::string>();
    }
    m.config = j.at("config");
    for (const auto& [k, v] : j.at("inputs").items()) m.inputs.emplace_back(k, v.get<std::string>());
    for (const auto& [k, v] : j.at("stage_seconds").items()) m.stage_seconds.emplace_back(k, v.get<double>());
    for (const auto& [k, v] : j.at("outputs").items()) m.outputs.emplace_back(k, v.get<std::string>());
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
  }
}

const char* artifact_version() { return "navcarve-" NAVCARVE_VERSION; }

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"filter", "grow", "regulate", "refine", "eval"};
  return names;
}

namespace {

struct StageResult {
  std::vector<fs::path> outputs;
  std::vector<std::string> warnings;
  std::vector<fs::path> inputs;  // external inputs to digest
  std::size_t seed_count = 0;
  bool has_seed_count = false;
};

fs::path require(const fs::path& p, const char* producer) {
  if (!fs::exists(p)) {
    throw Error(ErrorCode::MissingInput,
                "missing input " + p.string() + " (written by the '" + std::string(producer) + "' stage)");
  }
  return p;
}

fs::path require_external(const fs::path& p, const char* what) {
  if (p.empty()) throw Error(ErrorCode::MissingInput, std::string("no ") + what + " given");
  if (!fs::exists(p)) throw Error(ErrorCode::MissingInput, std::string("missing ") + what + " " + p.string());
  return p;
}

template <typename T>
void upsert(std::vector<std::pair<std::string, T>>& list, const std::string& key, T value) {
  for (auto& [k, v] : list) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  list.emplace_back(key, std::move(value));
}

NeighborSet neighbors_from(const PointCloud& cloud, std::uint32_t seed_id, const std::vector<std::uint32_t>& idx) {
  NeighborSet nb;
  nb.seed_id = seed_id;
  nb.k = idx.size();
  nb.indices = idx;
  nb.points.reserve(idx.size());
  for (std::uint32_t i : idx) {
    if (i >= cloud.size()) throw Error(ErrorCode::ParseError, "neighbor index out of range for filtered.ply");
    nb.points.push_back(cloud.points[i]);
  }
  return nb;
}

ProjectedCloud concat(const std::vector<ProjectedCloud>& clouds) {
  ProjectedCloud all;
  for (const ProjectedCloud& c : clouds) all.points.insert(all.points.end(), c.points.begin(), c.points.end());
  return all;
}

StageResult stage_filter(const PipelineConfig& cfg, const PipelineInputs& in, const fs::path& out) {
  StageResult r;
  r.inputs.push_back(require_external(in.cloud, "point cloud"));
  const PointCloud raw = read_point_cloud(in.cloud);
  PointCloud filtered = statistical_outlier_removal(raw, cfg.filter_k, cfg.filter_alpha);
  filtered.tags.assign(filtered.size(), PointTag::Filtered);
  if (filtered.size() < raw.size()) {
    r.warnings.push_back("removed " + std::to_string(raw.size() - filtered.size()) + " of " +
                         std::to_string(raw.size()) + " points as outliers");
  }
  const fs::path p = out / "filtered.ply";
  write_point_cloud(filtered, p);
  r.outputs.push_back(p);
  return r;
}

StageResult stage_grow(const PipelineConfig& cfg, const PipelineInputs& in, const fs::path& out) {
  StageResult r;
  const PointCloud cloud = read_point_cloud(require(out / "filtered.ply", "filter"));
  r.inputs.push_back(require_external(in.trajectory, "trajectory"));
  GrowOutput g = grow_regions(cfg, cloud, read_trajectory(in.trajectory));
  r.warnings = g.warnings;

  RegionFile file;
  std::ostringstream seeds_csv;
  seeds_csv << "id,x,y,z,grown\n";
  for (std::size_t i = 0; i < g.seeds.seeds.size(); ++i) {
    const Seed& s = g.seeds.seeds[i];
    const Json row = Json::array({s.position.x(), s.position.y(), s.position.z()});
    seeds_csv << s.id << ',' << row[0].dump() << ',' << row[1].dump() << ',' << row[2].dump() << ','
              << (g.grown[i] ? 1 : 0) << '\n';
  }
  for (std::size_t i = 0; i < g.regions.size(); ++i) {
    file.regions.push_back(std::move(g.regions[i]));
    file.neighbor_indices.push_back(std::move(g.neighbors[i].indices));
  }
  file.warnings = r.warnings;
  r.seed_count = g.seeds.seeds.size();
  r.has_seed_count = true;

  const fs::path seeds_path = out / "seeds.csv";
  {
    std::ofstream f(seeds_path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + seeds_path.string());
    f << seeds_csv.str();
    if (!f.flush()) throw Error(ErrorCode::IoError, "write failed for " + seeds_path.string());
  }
  r.outputs.push_back(seeds_path);
  write_regions(file, out / "regions.json");
  r.outputs.push_back(out / "regions.json");

  std::error_code ec;
  fs::remove_all(out / "hulls", ec);
  NavigableSpace space;
  space.regions = file.regions;
  const auto meshes = write_space_meshes(space, out / "hulls", out / "hulls.ply", r.warnings);
  r.outputs.insert(r.outputs.end(), meshes.begin(), meshes.end());
  return r;
}

StageResult stage_regulate(const PipelineConfig& cfg, const PipelineInputs&, const fs::path& out) {
  StageResult r;
  const PointCloud cloud = read_point_cloud(require(out / "filtered.ply", "filter"));
  RegionFile file = read_regions(require(out / "regions.json", "grow"));
  const std::size_t n = file.regions.size();
  std::vector<NeighborSet> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) nbrs[i] = neighbors_from(cloud, file.regions[i].seed_id, file.neighbor_indices[i]);

  const NavigableSpace space = build_navigable_space(std::move(file.regions));
  r.warnings = space.warnings;
  const std::size_t workers = cfg.resolved_workers();
  std::vector<ProjectedCloud> clouds(n);
  std::vector<std::string> failed(n);
  parallel_for(n, workers, [&](std::size_t i) {
    try {
      clouds[i] = project_to_hull(space.regions[i], nbrs[i]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SeedOnBoundary) throw;
      failed[i] = "region of seed " + std::to_string(space.regions[i].seed_id) + " not projected: " + e.what();
    }
  });
  for (const std::string& w : failed) {
    if (!w.empty()) r.warnings.push_back(w);
  }
  const double tol = cfg.cull_tol > 0.0 ? cfg.cull_tol : default_cull_tolerance(space);
  const ProjectedCloud kept = cull_overlapping(clouds, space, tol, workers);

  write_projected_cloud(concat(clouds), out / "projected.ply");
  write_projected_cloud(kept, out / "regulated.ply");
  Json adjacency = Json::array();
  for (const auto& [i, j] : space.adjacency) adjacency.push_back(Json::array({i, j}));
  Json seeds = Json::array();
  for (const RegionResult& reg : space.regions) seeds.push_back(reg.seed_id);
  Json sj;
  sj["seed_ids"] = seeds;
  sj["adjacency"] = adjacency;
  sj["cull_tol"] = tol;
  sj["projected_points"] = concat(clouds).size();
  sj["regulated_points"] = kept.size();
  sj["warnings"] = r.warnings;
  write_json(sj, out / "space.json");
  r.outputs = {out / "projected.ply", out / "regulated.ply", out / "space.json"};
  return r;
}

StageResult stage_refine(const PipelineConfig& cfg, const PipelineInputs&, const fs::path& out) {
  StageResult r;
  const ProjectedCloud regulated = read_projected_cloud(require(out / "regulated.ply", "regulate"));
  RegionFile file = read_regions(require(out / "regions.json", "grow"));
  NavigableSpace space;
  space.regions = std::move(file.regions);
  const RefineConfig rc = cfg.refinement.resolved(space);
  const std::size_t workers = cfg.resolved_workers();

  const ProjectedCloud down = voxel_downsample(regulated, rc.cell);
  const SurfaceMesh surface = triangulate_facets(down, workers);
  if (surface.skipped_facets > 0) {
    r.warnings.push_back(std::to_string(surface.skipped_facets) + " facets with fewer than 3 distinct or only collinear points not triangulated");
  }
  const ProjectedCloud dense = densify(surface, rc.max_edge);
  const PointCloud smooth = mls_smooth(dense, rc.mls_radius, rc.mls_degree, workers);

  write_projected_cloud(down, out / "downsampled.ply");
  write_mesh(surface.mesh, out / "surface.ply");
  write_projected_cloud(dense, out / "densified.ply");
  write_point_cloud(smooth, out / "smoothed.ply");
  r.outputs = {out / "downsampled.ply", out / "surface.ply", out / "densified.ply", out / "smoothed.ply"};
  return r;
}

StageResult stage_eval(const PipelineConfig& cfg, const PipelineInputs& in, const fs::path& out) {
  StageResult r;
  RegionFile file = read_regions(require(out / "regions.json", "grow"));
  r.inputs.push_back(require_external(in.ground_truth, "ground truth"));
  const GroundTruth gt = make_ground_truth(synthetic_spec_from_json(read_json(in.ground_truth)));
  const NavigableSpace space = build_navigable_space(std::move(file.regions));
  const BoundaryReport raw = boundary_error(space, gt, cfg.eval_cell_size, cfg.band_depth);
  const VolumeMetrics vm = volume_metrics(space, gt, cfg.volume_samples, cfg.rng_seed);
  if (!vm.precision_defined) r.warnings.push_back("navigable space has no sampled volume; precision undefined");
  Json j;
  j["boundary_units"] = to_json(raw);
  j["boundary_meters"] = to_json(apply_scale(raw, cfg.units_per_meter));
  j["volume"] = to_json(vm);
  write_json(j, out / "report.json");
  r.outputs.push_back(out / "report.json");
  return r;
}

using StageFn = StageResult (*)(const PipelineConfig&, const PipelineInputs&, const fs::path&);

StageFn stage_fn(const std::string& name) {
  if (name == "filter") return stage_filter;
  if (name == "grow") return stage_grow;
  if (name == "regulate") return stage_regulate;
  if (name == "refine") return stage_refine;
  if (name == "eval") return stage_eval;
  throw Error(ErrorCode::ConfigError, "unknown stage '" + name + "'");
}

std::string relative_to(const fs::path& p, const fs::path& out) { return p.lexically_relative(out).generic_string(); }

}  // namespace

GrowOutput grow_regions(const PipelineConfig& cfg, const PointCloud& filtered, const Trajectory& traj) {
  cfg.validate();
  GrowOutput g;
  g.seeds = sample_seeds(traj, cfg.seed_interval, cfg.seed_mode);
  if (filtered.size() < cfg.knn_k) {
    throw Error(ErrorCode::TooFewPoints, "filtered cloud has " + std::to_string(filtered.size()) +
                                             " points, fewer than knn_k = " + std::to_string(cfg.knn_k));
  }
  const KdTree tree(filtered.points);
  const std::size_t n = g.seeds.seeds.size();
  std::vector<std::optional<RegionResult>> grown(n);
  std::vector<NeighborSet> nbrs(n);
  std::vector<std::string> skip(n);
  parallel_for(n, cfg.resolved_workers(), [&](std::size_t i) {
    const Seed& s = g.seeds.seeds[i];
    NeighborSet nb = knn_neighbors(tree, filtered.points, s.position, cfg.knn_k);
    nb.seed_id = s.id;
    nb = seed_relative_filter(nb, s.position, cfg.radius_factor);
    const auto far = std::count_if(nb.points.begin(), nb.points.end(),
                                   [&](const Point3& p) { return (p - s.position).norm() > 1e-6; });
    if (static_cast<std::size_t>(far) < cfg.min_neighbors) {
      skip[i] = "seed " + std::to_string(s.id) + " skipped: " + std::to_string(far) + " usable neighbors";
      return;
    }
    try {
      grown[i] = grow_region(s.position, nb, cfg.growth);
      grown[i]->seed_id = s.id;
      nbrs[i] = std::move(nb);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSeed) throw;
      skip[i] = "seed " + std::to_string(s.id) + " skipped: " + e.what();
    }
  });
  g.grown.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (!skip[i].empty()) g.warnings.push_back(skip[i]);
    if (!grown[i]) continue;
    g.grown[i] = true;
    g.regions.push_back(std::move(*grown[i]));
    g.neighbors.push_back(std::move(nbrs[i]));
  }
  return g;
}

RunManifest run_stages(const PipelineConfig& cfg, const PipelineInputs& inputs, const fs::path& out,
                       const std::vector<std::string>& stages, bool fresh) {
  cfg.validate();
  for (const std::string& s : stages) stage_fn(s);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out.string() + ": " + ec.message());

  const fs::path manifest_path = out / "manifest.json";
  const fs::path timing_path = out / "timing.json";
  RunManifest manifest;
  TimingReport timing;
  if (!fresh && fs::exists(manifest_path)) manifest = RunManifest::from_json(read_json(manifest_path));
  if (!fresh && fs::exists(timing_path)) timing = timing_report_from_json(read_json(timing_path));
  manifest.config = cfg.to_json();
  manifest.artifact_version = artifact_version();
  manifest.status = "ok";
  manifest.failed_stage.clear();
  manifest.error.clear();

  for (const std::string& name : stages) {
    const auto start = std::chrono::steady_clock::now();
    StageResult res;
    try {
      res = stage_fn(name)(cfg, inputs, out);
    } catch (const std::exception& e) {
      const auto* err = dynamic_cast<const Error*>(&e);
      const ErrorCode code = err ? err->code() : ErrorCode::IoError;
      manifest.status = "failed";
      manifest.failed_stage = name;
      manifest.error = e.what();
      write_json(manifest.to_json(), manifest_path);
      throw StageFailure(name, code, e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    timing.set(name, secs);
    if (res.has_seed_count) timing.seed_count = res.seed_count;
    timing.finalize();
    upsert(manifest.stage_seconds, name, secs);
    for (const fs::path& p : res.inputs) upsert(manifest.inputs, p.string(), sha256_file(p));
    for (const fs::path& p : res.outputs) upsert(manifest.outputs, relative_to(p, out), sha256_file(p));
    for (const std::string& w : res.warnings) manifest.warnings.push_back(name + ": " + w);
    write_json(to_json(timing), timing_path);
    write_json(manifest.to_json(), manifest_path);
  }
  return manifest;
}

RunManifest run_pipeline(const PipelineConfig& cfg, const PipelineInputs& inputs, const fs::path& out) {
  std::vector<std::string> stages = {"filter", "grow", "regulate"};
  if (cfg.refine) stages.emplace_back("refine");
  if (!inputs.ground_truth.empty()) stages.emplace_back("eval");
  return run_stages(cfg, inputs, out, stages, true);
}

std::vector<std::string> verify_manifest(const fs::path& out) {
  const RunManifest m = RunManifest::from_json(read_json(out / "manifest.json"));
  std::vector<std::string> problems;
  auto check = [&](const fs::path& p, const std::string& label, const std::string& digest) {
    if (!fs::exists(p)) problems.push_back(label + ": missing");
    else if (sha256_file(p) != digest) problems.push_back(label + ": digest mismatch");
  };
  for (const auto& [p, d] : m.inputs) check(p, p, d);
  for (const auto& [p, d] : m.outputs) check(out / p, p, d);
  return problems;
}

std::vector<fs::path> write_synthetic(const SyntheticEnvSpec& spec, const fs::path& out) {
  const SyntheticEnvironment env = generate_environment(spec);
  std::error_code ec;
  fs::create_directories(out, ec);
  const std::vector<fs::path> paths = {out / "cloud.ply", out / "trajectory.csv", out / "ground_truth.json"};
  write_point_cloud(env.cloud, paths[0]);
  write_trajectory(env.trajectory, paths[1]);
  write_json(to_json(spec), paths[2]);
  return paths;
}

}  // namespace navcarve
