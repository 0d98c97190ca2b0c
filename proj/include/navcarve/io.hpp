#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "navcarve/evaluation.hpp"
#include "navcarve/geometry.hpp"
#include "navcarve/preprocess.hpp"
#include "navcarve/region.hpp"
#include "navcarve/regulation.hpp"
#include <json.hpp>

namespace navcarve {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Point clouds: ASCII PLY (x, y, z plus an optional uchar `tag`) or
// whitespace-separated XYZ text, chosen by extension. Doubles are written in
// shortest round-trip form.
PointCloud read_point_cloud(const fs::path& path);
void write_point_cloud(const PointCloud& cloud, const fs::path& path);

// Projected clouds carry seed_id, facet_group, plane (nx, ny, nz, offset) and
// source_index per vertex.
ProjectedCloud read_projected_cloud(const fs::path& path);
void write_projected_cloud(const ProjectedCloud& cloud, const fs::path& path);

/// CSV with header `t,x,y,z`. Throws ParseError, NonMonotoneTime, InvalidArgument.
Trajectory read_trajectory(const fs::path& path);
void write_trajectory(const Trajectory& traj, const fs::path& path);

/// ASCII PLY with vertex and face elements; faces carry facet_group and plane.
TriangleMesh read_mesh(const fs::path& path);
void write_mesh(const TriangleMesh& mesh, const fs::path& path);

/// One PLY per region (region_<seed>.ply) in `dir` plus `combined`. Returns the
/// written paths; an empty space yields an empty combined file and a warning.
std::vector<fs::path> write_space_meshes(const NavigableSpace& space, const fs::path& dir, const fs::path& combined,
                                         std::vector<std::string>& warnings);

/// Regions with the indices of their neighbors in the filtered cloud. Hulls are
/// rebuilt on load from the polytope around the ellipsoid centre.
struct RegionFile {
  std::vector<RegionResult> regions;
  std::vector<std::vector<std::uint32_t>> neighbor_indices;
  std::vector<std::string> warnings;
};
RegionFile read_regions(const fs::path& path);
void write_regions(const RegionFile& file, const fs::path& path);

Json to_json(const BoundaryReport& report);
BoundaryReport boundary_report_from_json(const Json& j);
Json to_json(const VolumeMetrics& m);
Json to_json(const TimingReport& t);
TimingReport timing_report_from_json(const Json& j);
Json to_json(const SyntheticEnvSpec& spec);
SyntheticEnvSpec synthetic_spec_from_json(const Json& j);

Json read_json(const fs::path& path);
/// Pretty-printed with a trailing newline. Throws IoError.
void write_json(const Json& j, const fs::path& path);

/// Lowercase hex SHA-256 of a file's bytes. Throws IoError.
std::string sha256_file(const fs::path& path);

}  // namespace navcarve
