#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "navcarve/error.hpp"
#include "navcarve/io.hpp"
#include "navcarve/preprocess.hpp"
#include "navcarve/refinement.hpp"
#include "navcarve/region.hpp"

namespace navcarve {

struct PipelineConfig {
  std::size_t filter_k = 16;
  double filter_alpha = 2.0;
  double seed_interval = 1.0;
  SeedMode seed_mode = SeedMode::ByTime;
  std::size_t knn_k = 400;
  double radius_factor = 3.0;
  std::size_t min_neighbors = 30;  // seeds with fewer neighbors farther than 1e-6 are skipped
  GrowthConfig growth;
  double cull_tol = 0.0;  // 0 selects default_cull_tolerance
  bool refine = false;
  RefineConfig refinement;
  double eval_cell_size = 1.0;
  double band_depth = 0.0;  // 0 selects half the corridor width
  double units_per_meter = 1.2;
  std::size_t volume_samples = 1000000;
  std::uint64_t rng_seed = 1;
  std::size_t workers = 0;  // 0 selects the hardware concurrency

  /// Flat key/value document. Unknown keys and out-of-range values raise ConfigError.
  static PipelineConfig from_json(const Json& j);
  Json to_json() const;
  /// Sets one key from its command-line text form.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  static std::vector<std::string> keys();

  /// Worker count after defaulting and the NAVCARVE_THREADS cap.
  std::size_t resolved_workers() const;
};

struct RunManifest {
  Json config = Json::object();
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::string artifact_version;
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::vector<std::pair<std::string, std::string>> outputs;  // path relative to the run directory, sha256
  std::string status = "ok";                                 // "ok" or "failed"
  std::string failed_stage;
  std::string error;
  std::vector<std::string> warnings;

  Json to_json() const;
  static RunManifest from_json(const Json& j);
};

/// A stage aborted. The partial manifest has already been written.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(std::string stage, ErrorCode code, const std::string& message)
      : std::runtime_error("stage '" + stage + "' failed: " + message), stage_(std::move(stage)), code_(code) {}
  const std::string& stage() const noexcept { return stage_; }
  ErrorCode code() const noexcept { return code_; }

 private:
  std::string stage_;
  ErrorCode code_;
};

struct PipelineInputs {
  fs::path cloud;         // filter
  fs::path trajectory;    // grow
  fs::path ground_truth;  // eval; the synthetic spec written by `synth`
};

/// In-memory seeding, neighborhood search and growth shared by the grow stage.
/// Seeds with too few usable neighbors, or whose initial ball is infeasible,
/// are skipped with a warning. regions[i] grew from neighbors[i].
struct GrowOutput {
  SeedSet seeds;
  std::vector<RegionResult> regions;
  std::vector<NeighborSet> neighbors;
  std::vector<bool> grown;  // per seed
  std::vector<std::string> warnings;
};
GrowOutput grow_regions(const PipelineConfig& cfg, const PointCloud& filtered, const Trajectory& traj);

const char* artifact_version();

/// Stage names in execution order.
const std::vector<std::string>& stage_names();

/// Runs the named stages in order inside `out`, reading earlier artifacts from
/// disk. A fresh run starts a new manifest; otherwise the existing manifest and
/// timing files are merged. Throws StageFailure.
RunManifest run_stages(const PipelineConfig& cfg, const PipelineInputs& inputs, const fs::path& out,
                       const std::vector<std::string>& stages, bool fresh);

/// filter, grow, regulate, then refine when enabled, then eval when a ground
/// truth is given.
RunManifest run_pipeline(const PipelineConfig& cfg, const PipelineInputs& inputs, const fs::path& out);

/// Recomputes every digest listed in out/manifest.json. Returns one message per
/// mismatch or missing file.
std::vector<std::string> verify_manifest(const fs::path& out);

/// Writes cloud.ply, trajectory.csv and ground_truth.json into `out`.
std::vector<fs::path> write_synthetic(const SyntheticEnvSpec& spec, const fs::path& out);

}  // namespace navcarve
