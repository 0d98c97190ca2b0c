#include "navcarve/io.hpp"

#include <Eigen/Geometry>
#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "navcarve/error.hpp"

namespace navcarve {

namespace {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::ifstream open_in(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingInput, "missing input " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return in;
}

[[noreturn]] void parse_fail(const fs::path& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, path.filename().string() + " line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

bool to_double(std::string_view tok, double& v) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

double parse_number(std::string_view tok, const fs::path& path, std::size_t line) {
  double v = 0.0;
  if (!to_double(tok, v)) parse_fail(path, line, "invalid number '" + std::string(tok) + "'");
  if (!std::isfinite(v)) parse_fail(path, line, "non-finite value '" + std::string(tok) + "'");
  return v;
}

// ---- generic ASCII PLY ----

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> scalars;  // scalar property names in order
  int list_position = -1;            // index among all properties of the list, if any
  std::size_t property_count = 0;
};

struct PlyRow {
  std::vector<double> scalars;
  std::vector<std::int64_t> list;
};

struct PlyData {
  std::vector<PlyElement> elements;
  std::vector<std::vector<PlyRow>> rows;

  const PlyElement* element(const std::string& name, std::size_t* index = nullptr) const {
    for (std::size_t i = 0; i < elements.size(); ++i) {
      if (elements[i].name == name) {
        if (index) *index = i;
        return &elements[i];
      }
    }
    return nullptr;
  }
};

int property_index(const PlyElement& e, const std::string& name) {
  for (std::size_t i = 0; i < e.scalars.size(); ++i) {
    if (e.scalars[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int require_property(const PlyElement& e, const std::string& name, const fs::path& path) {
  const int idx = property_index(e, name);
  if (idx < 0) {
    throw Error(ErrorCode::ParseError,
                path.filename().string() + ": missing " + e.name + " property '" + name + "'");
  }
  return idx;
}

PlyData parse_ply(const fs::path& path) {
  std::ifstream in = open_in(path);
  PlyData data;
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() {
    if (!std::getline(in, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next() || line != "ply") parse_fail(path, 1, "expected 'ply' magic");
  bool format_seen = false;
  while (true) {
    if (!next()) parse_fail(path, lineno, "unterminated header");
    const auto tok = split(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) parse_fail(path, lineno, "malformed format line");
      if (tok[1] != "ascii") throw Error(ErrorCode::UnsupportedFormat, path.string() + ": only ASCII PLY is supported");
      format_seen = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) parse_fail(path, lineno, "malformed element line");
      PlyElement e;
      e.name = std::string(tok[1]);
      double count = 0.0;
      if (!to_double(tok[2], count) || count < 0 || count != std::floor(count)) {
        parse_fail(path, lineno, "invalid element count");
      }
      e.count = static_cast<std::size_t>(count);
      data.elements.push_back(e);
    } else if (tok[0] == "property") {
      if (data.elements.empty()) parse_fail(path, lineno, "property before element");
      PlyElement& e = data.elements.back();
      if (tok.size() >= 2 && tok[1] == "list") {
        if (tok.size() != 5) parse_fail(path, lineno, "malformed list property");
        if (e.list_position >= 0) parse_fail(path, lineno, "more than one list property");
        e.list_position = static_cast<int>(e.property_count);
      } else {
        if (tok.size() != 3) parse_fail(path, lineno, "malformed property line");
        e.scalars.emplace_back(tok[2]);
      }
      ++e.property_count;
    } else {
      parse_fail(path, lineno, "unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!format_seen) parse_fail(path, lineno, "missing format line");

  for (const PlyElement& e : data.elements) {
    std::vector<PlyRow> rows;
    rows.reserve(e.count);
    for (std::size_t r = 0; r < e.count; ++r) {
      if (!next()) parse_fail(path, lineno + 1, "unexpected end of file in element '" + e.name + "'");
      const auto tok = split(line);
      PlyRow row;
      std::size_t t = 0;
      for (std::size_t p = 0; p < e.property_count; ++p) {
        if (t >= tok.size()) parse_fail(path, lineno, "too few values");
        if (static_cast<int>(p) == e.list_position) {
          const double n = parse_number(tok[t++], path, lineno);
          if (n < 0 || n != std::floor(n)) parse_fail(path, lineno, "invalid list length");
          for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
            if (t >= tok.size()) parse_fail(path, lineno, "too few list values");
            const double v = parse_number(tok[t++], path, lineno);
            if (v != std::floor(v)) parse_fail(path, lineno, "non-integer list value");
            row.list.push_back(static_cast<std::int64_t>(v));
          }
        } else {
          row.scalars.push_back(parse_number(tok[t++], path, lineno));
        }
      }
      if (t != tok.size()) parse_fail(path, lineno, "too many values");
      rows.push_back(std::move(row));
    }
    data.rows.push_back(std::move(rows));
  }
  while (next()) {
    if (!split(line).empty()) parse_fail(path, lineno, "trailing data after last element");
  }
  return data;
}

const std::vector<PlyRow>& vertex_rows(const PlyData& data, const fs::path& path, const PlyElement*& e) {
  std::size_t idx = 0;
  e = data.element("vertex", &idx);
  if (!e) throw Error(ErrorCode::ParseError, path.filename().string() + ": missing element 'vertex'");
  return data.rows[idx];
}

Point3 row_point(const PlyRow& row, int ix, int iy, int iz) { return {row.scalars[ix], row.scalars[iy], row.scalars[iz]}; }

std::uint32_t as_index(double v, const fs::path& path, const char* what) {
  if (v < 0 || v != std::floor(v) || v > 4294967295.0) {
    throw Error(ErrorCode::ParseError, path.filename().string() + ": invalid " + what);
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

PointCloud read_point_cloud(const fs::path& path) {
  const std::string ext = lower_extension(path);
  PointCloud cloud;
  if (ext == ".ply") {
    const PlyData data = parse_ply(path);
    const PlyElement* e = nullptr;
    const auto& rows = vertex_rows(data, path, e);
    const int ix = require_property(*e, "x", path);
    const int iy = require_property(*e, "y", path);
    const int iz = require_property(*e, "z", path);
    const int itag = property_index(*e, "tag");
    for (const PlyRow& row : rows) {
      cloud.points.push_back(row_point(row, ix, iy, iz));
      if (itag >= 0) {
        const double t = row.scalars[itag];
        if (t < 0 || t > 3 || t != std::floor(t)) throw Error(ErrorCode::ParseError, path.string() + ": invalid tag");
        cloud.tags.push_back(static_cast<PointTag>(static_cast<int>(t)));
      }
    }
    return cloud;
  }
  if (ext == ".xyz" || ext == ".txt" || ext == ".pts") {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const auto tok = split(line);
      if (tok.empty()) continue;
      if (tok.size() < 3) parse_fail(path, lineno, "expected x y z");
      cloud.points.emplace_back(parse_number(tok[0], path, lineno), parse_number(tok[1], path, lineno),
                                parse_number(tok[2], path, lineno));
    }
    return cloud;
  }
  throw Error(ErrorCode::UnsupportedFormat, "unsupported point cloud extension '" + ext + "'");
}

void write_point_cloud(const PointCloud& cloud, const fs::path& path) {
  const std::string ext = lower_extension(path);
  const bool tagged = !cloud.tags.empty();
  if (tagged && cloud.tags.size() != cloud.points.size()) {
    throw Error(ErrorCode::InvalidArgument, "tag count differs from point count");
  }
  std::ostringstream os;
  if (ext == ".ply") {
    os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
       << "\nproperty double x\nproperty double y\nproperty double z\n";
    if (tagged) os << "property uchar tag\n";
    os << "end_header\n";
  } else if (ext != ".xyz" && ext != ".txt" && ext != ".pts") {
    throw Error(ErrorCode::UnsupportedFormat, "unsupported point cloud extension '" + ext + "'");
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    os << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z());
    if (tagged && ext == ".ply") os << ' ' << static_cast<int>(cloud.tags[i]);
    os << '\n';
  }
  std::ofstream out = open_out(path);
  out << os.str();
  close_out(out, path);
}

ProjectedCloud read_projected_cloud(const fs::path& path) {
  const PlyData data = parse_ply(path);
  const PlyElement* e = nullptr;
  const auto& rows = vertex_rows(data, path, e);
  std::array<int, 10> idx{};
  const char* names[] = {"x", "y", "z", "seed_id", "facet_group", "nx", "ny", "nz", "offset", "source_index"};
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = require_property(*e, names[k], path);
  ProjectedCloud cloud;
  cloud.points.reserve(rows.size());
  for (const PlyRow& row : rows) {
    ProjectedPoint p;
    p.point = row_point(row, idx[0], idx[1], idx[2]);
    p.seed_id = as_index(row.scalars[idx[3]], path, "seed_id");
    const double group = row.scalars[idx[4]];
    if (group != std::floor(group)) throw Error(ErrorCode::ParseError, path.string() + ": invalid facet_group");
    p.facet_group = static_cast<std::int32_t>(group);
    p.plane = Halfspace(Vec3(row.scalars[idx[5]], row.scalars[idx[6]], row.scalars[idx[7]]), row.scalars[idx[8]]);
    p.source_index = as_index(row.scalars[idx[9]], path, "source_index");
    cloud.points.push_back(p);
  }
  return cloud;
}

void write_projected_cloud(const ProjectedCloud& cloud, const fs::path& path) {
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
     << "\nproperty double x\nproperty double y\nproperty double z\nproperty uint seed_id\nproperty int facet_group\n"
        "property double nx\nproperty double ny\nproperty double nz\nproperty double offset\n"
        "property uint source_index\nend_header\n";
  for (const ProjectedPoint& p : cloud.points) {
    os << format_double(p.point.x()) << ' ' << format_double(p.point.y()) << ' ' << format_double(p.point.z()) << ' '
       << p.seed_id << ' ' << p.facet_group << ' ' << format_double(p.plane.a.x()) << ' '
       << format_double(p.plane.a.y()) << ' ' << format_double(p.plane.a.z()) << ' ' << format_double(p.plane.b)
       << ' ' << p.source_index << '\n';
  }
  std::ofstream out = open_out(path);
  out << os.str();
  close_out(out, path);
}

Trajectory read_trajectory(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  Trajectory traj;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split(line).empty()) continue;
    if (!header) {
      std::string compact;
      for (char c : line) {
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
      }
      if (compact != "t,x,y,z") parse_fail(path, lineno, "expected header 't,x,y,z'");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) parse_fail(path, lineno, "expected 4 comma-separated values");
    std::array<double, 4> v{};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto tok = split(cells[k]);
      if (tok.size() != 1) parse_fail(path, lineno, "empty or malformed value");
      v[k] = parse_number(tok[0], path, lineno);
    }
    if (!traj.poses.empty() && !(v[0] > traj.poses.back().t)) {
      throw Error(ErrorCode::NonMonotoneTime, path.filename().string() + " line " + std::to_string(lineno) + ": row " +
                                                  std::to_string(traj.poses.size() + 1) +
                                                  " timestamp does not increase");
    }
    traj.poses.push_back({v[0], Point3(v[1], v[2], v[3])});
  }
  if (!header) parse_fail(path, lineno, "missing header 't,x,y,z'");
  traj.validate();
  return traj;
}

void write_trajectory(const Trajectory& traj, const fs::path& path) {
  std::ostringstream os;
  os << "t,x,y,z\n";
  for (const Pose& p : traj.poses) {
    os << format_double(p.t) << ',' << format_double(p.position.x()) << ',' << format_double(p.position.y()) << ','
       << format_double(p.position.z()) << '\n';
  }
  std::ofstream out = open_out(path);
  out << os.str();
  close_out(out, path);
}

TriangleMesh read_mesh(const fs::path& path) {
  const PlyData data = parse_ply(path);
  const PlyElement* ve = nullptr;
  const auto& vrows = vertex_rows(data, path, ve);
  const int ix = require_property(*ve, "x", path);
  const int iy = require_property(*ve, "y", path);
  const int iz = require_property(*ve, "z", path);
  TriangleMesh mesh;
  for (const PlyRow& row : vrows) mesh.vertices.push_back(row_point(row, ix, iy, iz));

  std::size_t fidx = 0;
  const PlyElement* fe = data.element("face", &fidx);
  if (!fe) return mesh;
  if (fe->list_position < 0) throw Error(ErrorCode::ParseError, path.string() + ": face element has no index list");
  const int ig = property_index(*fe, "facet_group");
  const int inx = property_index(*fe, "nx");
  const int iny = property_index(*fe, "ny");
  const int inz = property_index(*fe, "nz");
  const int ioff = property_index(*fe, "offset");
  const bool planes = inx >= 0 && iny >= 0 && inz >= 0 && ioff >= 0;
  for (const PlyRow& row : data.rows[fidx]) {
    if (row.list.size() != 3) throw Error(ErrorCode::ParseError, path.string() + ": only triangular faces are supported");
    Triangle t{};
    for (int k = 0; k < 3; ++k) {
      if (row.list[k] < 0 || static_cast<std::size_t>(row.list[k]) >= mesh.vertices.size()) {
        throw Error(ErrorCode::ParseError, path.string() + ": face index out of range");
      }
      t[k] = static_cast<std::uint32_t>(row.list[k]);
    }
    mesh.triangles.push_back(t);
    mesh.facet_group.push_back(ig >= 0 ? static_cast<std::int32_t>(row.scalars[ig])
                                       : static_cast<std::int32_t>(mesh.triangles.size() - 1));
    if (planes) {
      mesh.facet_plane.emplace_back(Vec3(row.scalars[inx], row.scalars[iny], row.scalars[inz]), row.scalars[ioff]);
    } else {
      const Point3& a = mesh.vertices[t[0]];
      const Vec3 n = (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a).normalized();
      mesh.facet_plane.emplace_back(n, n.dot(a));
    }
  }
  return mesh;
}

void write_mesh(const TriangleMesh& mesh, const fs::path& path) {
  if (mesh.facet_plane.size() != mesh.triangles.size() || mesh.facet_group.size() != mesh.triangles.size()) {
    throw Error(ErrorCode::InvalidArgument, "mesh needs one plane and facet group per triangle");
  }
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\nelement vertex " << mesh.vertices.size()
     << "\nproperty double x\nproperty double y\nproperty double z\nelement face " << mesh.triangles.size()
     << "\nproperty list uchar uint vertex_indices\nproperty int facet_group\nproperty double nx\n"
        "property double ny\nproperty double nz\nproperty double offset\nend_header\n";
  for (const Point3& v : mesh.vertices) {
    os << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
  }
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Triangle& t = mesh.triangles[i];
    const Halfspace& h = mesh.facet_plane[i];
    os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << mesh.facet_group[i] << ' ' << format_double(h.a.x())
       << ' ' << format_double(h.a.y()) << ' ' << format_double(h.a.z()) << ' ' << format_double(h.b) << '\n';
  }
  std::ofstream out = open_out(path);
  out << os.str();
  close_out(out, path);
}

std::vector<fs::path> write_space_meshes(const NavigableSpace& space, const fs::path& dir, const fs::path& combined,
                                         std::vector<std::string>& warnings) {
  std::vector<fs::path> written;
  TriangleMesh all;
  for (const RegionResult& r : space.regions) {
    char name[32];
    std::snprintf(name, sizeof(name), "region_%04u.ply", r.seed_id);
    const fs::path p = dir / name;
    write_mesh(r.hull, p);
    written.push_back(p);
    const auto offset = static_cast<std::uint32_t>(all.vertices.size());
    all.vertices.insert(all.vertices.end(), r.hull.vertices.begin(), r.hull.vertices.end());
    for (std::size_t i = 0; i < r.hull.triangles.size(); ++i) {
      const Triangle& t = r.hull.triangles[i];
      all.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
      all.facet_plane.push_back(r.hull.facet_plane[i]);
      all.facet_group.push_back(r.hull.facet_group[i]);
    }
  }
  if (space.regions.empty()) warnings.emplace_back("navigable space is empty; combined mesh has no elements");
  write_mesh(all, combined);
  written.push_back(combined);
  return written;
}

namespace {

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ParseError, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

RegionFile read_regions(const fs::path& path) {
  const Json j = read_json(path);
  RegionFile file;
  try {
    for (const Json& r : j.at("regions")) {
      RegionResult reg;
      reg.seed_id = r.at("seed_id").get<std::uint32_t>();
      reg.seed = json_vec(r.at("seed"));
      reg.iterations = r.at("iterations").get<int>();
      const Json& c = r.at("ellipsoid").at("C");
      for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) reg.ellipsoid.C(row, col) = c.at(3 * row + col).get<double>();
      }
      reg.ellipsoid.d = json_vec(r.at("ellipsoid").at("d"));
      for (const Json& h : r.at("halfspaces")) {
        reg.polytope.halfspaces.emplace_back(Vec3(h.at(0).get<double>(), h.at(1).get<double>(), h.at(2).get<double>()),
                                             h.at(3).get<double>());
      }
      reg.polytope.bounded_flag = r.at("bounded").get<bool>();
      reg.det_history = r.at("det_history").get<std::vector<double>>();
      reg.active_points = r.at("active_points").get<std::vector<std::uint32_t>>();
      reg.hull = polytope_hull(reg.polytope, reg.ellipsoid.d);
      file.regions.push_back(std::move(reg));
      file.neighbor_indices.push_back(r.at("neighbors").get<std::vector<std::uint32_t>>());
    }
    if (j.contains("warnings")) file.warnings = j.at("warnings").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, path.filename().string() + ": " + e.what());
  }
  return file;
}

void write_regions(const RegionFile& file, const fs::path& path) {
  Json regions = Json::array();
  for (std::size_t i = 0; i < file.regions.size(); ++i) {
    const RegionResult& r = file.regions[i];
    Json c = Json::array();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) c.push_back(r.ellipsoid.C(row, col));
    }
    Json hs = Json::array();
    for (const Halfspace& h : r.polytope.halfspaces) hs.push_back(Json::array({h.a.x(), h.a.y(), h.a.z(), h.b}));
    Json e;
    e["seed_id"] = r.seed_id;
    e["seed"] = vec_json(r.seed);
    e["iterations"] = r.iterations;
    e["ellipsoid"] = {{"C", c}, {"d", vec_json(r.ellipsoid.d)}};
    e["halfspaces"] = hs;
    e["bounded"] = r.polytope.bounded_flag;
    e["det_history"] = r.det_history;
    e["active_points"] = r.active_points;
    e["neighbors"] = i < file.neighbor_indices.size() ? file.neighbor_indices[i] : std::vector<std::uint32_t>{};
    regions.push_back(std::move(e));
  }
  Json j;
  j["format"] = "navcarve-regions";
  j["version"] = 1;
  j["regions"] = std::move(regions);
  j["warnings"] = file.warnings;
  write_json(j, path);
}

Json to_json(const BoundaryReport& r) {
  Json areas = Json::array();
  for (const AreaReport& a : r.areas) {
    areas.push_back({{"label", a.label},
                     {"outer", a.outer},
                     {"cells", a.cells},
                     {"boundary_points", a.boundary_points},
                     {"false_points", a.false_points},
                     {"ssd", a.ssd},
                     {"avg_sq_error", a.avg_sq_error},
                     {"corner_cells", a.corner_cells},
                     {"corner_ssd", a.corner_ssd},
                     {"straight_cells", a.straight_cells},
                     {"straight_ssd", a.straight_ssd}});
  }
  return {{"units_per_meter", r.units_per_meter},
          {"cell_size", r.cell_size},
          {"band_depth", r.band_depth},
          {"areas", areas},
          {"total_cells", r.total_cells},
          {"total_boundary_points", r.total_boundary_points},
          {"total_false_points", r.total_false_points},
          {"total_ssd", r.total_ssd},
          {"avg_sq_error", r.avg_sq_error},
          {"outer_avg_sq_error", r.outer_avg_sq_error()},
          {"inner_avg_sq_error", r.inner_avg_sq_error()},
          {"corner_mean_sq_error", r.corner_mean_sq_error},
          {"straight_mean_sq_error", r.straight_mean_sq_error}};
}

BoundaryReport boundary_report_from_json(const Json& j) {
  try {
    BoundaryReport r;
    r.units_per_meter = j.at("units_per_meter").get<double>();
    r.cell_size = j.at("cell_size").get<double>();
    r.band_depth = j.at("band_depth").get<double>();
    for (const Json& a : j.at("areas")) {
      AreaReport ar;
      ar.label = a.at("label").get<int>();
      ar.outer = a.at("outer").get<bool>();
      ar.cells = a.at("cells").get<std::size_t>();
      ar.boundary_points = a.at("boundary_points").get<std::size_t>();
      ar.false_points = a.at("false_points").get<std::size_t>();
      ar.ssd = a.at("ssd").get<double>();
      ar.avg_sq_error = a.at("avg_sq_error").get<double>();
      ar.corner_cells = a.at("corner_cells").get<std::size_t>();
      ar.corner_ssd = a.at("corner_ssd").get<double>();
      ar.straight_cells = a.at("straight_cells").get<std::size_t>();
      ar.straight_ssd = a.at("straight_ssd").get<double>();
      r.areas.push_back(ar);
    }
    r.total_cells = j.at("total_cells").get<std::size_t>();
    r.total_boundary_points = j.at("total_boundary_points").get<std::size_t>();
    r.total_false_points = j.at("total_false_points").get<std::size_t>();
    r.total_ssd = j.at("total_ssd").get<double>();
    r.avg_sq_error = j.at("avg_sq_error").get<double>();
    r.corner_mean_sq_error = j.at("corner_mean_sq_error").get<double>();
    r.straight_mean_sq_error = j.at("straight_mean_sq_error").get<double>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("boundary report: ") + e.what());
  }
}

Json to_json(const VolumeMetrics& m) {
  return {{"recall", m.recall},
          {"precision", m.precision},
          {"precision_defined", m.precision_defined},
          {"recall_stderr", m.recall_stderr},
          {"precision_stderr", m.precision_stderr},
          {"free_volume", m.free_volume},
          {"union_volume", m.union_volume},
          {"samples", m.samples}};
}

Json to_json(const TimingReport& t) {
  Json stages = Json::object();
  for (const auto& [name, secs] : t.stage_seconds) stages[name] = secs;
  return {{"stage_seconds", stages}, {"seed_count", t.seed_count}, {"seconds_per_seed", t.seconds_per_seed}};
}

TimingReport timing_report_from_json(const Json& j) {
  try {
    TimingReport t;
    for (const auto& [name, secs] : j.at("stage_seconds").items()) t.stage_seconds.emplace_back(name, secs.get<double>());
    t.seed_count = j.at("seed_count").get<std::size_t>();
    t.seconds_per_seed = j.at("seconds_per_seed").get<double>();
    return t;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("timing report: ") + e.what());
  }
}

Json to_json(const SyntheticEnvSpec& s) {
  return {{"outer_side", s.outer_side},
          {"inner_side", s.inner_side},
          {"wall_height", s.wall_height},
          {"density", s.density},
          {"noise_sigma", s.noise_sigma},
          {"outlier_fraction", s.outlier_fraction},
          {"modulation", s.modulation},
          {"speed", s.speed},
          {"floor_and_ceiling", s.floor_and_ceiling},
          {"seed", s.seed}};
}

SyntheticEnvSpec synthetic_spec_from_json(const Json& j) {
  SyntheticEnvSpec s;
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "synthetic spec must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "outer_side") s.outer_side = value.get<double>();
      else if (key == "inner_side") s.inner_side = value.get<double>();
      else if (key == "wall_height") s.wall_height = value.get<double>();
      else if (key == "density") s.density = value.get<double>();
      else if (key == "noise_sigma") s.noise_sigma = value.get<double>();
      else if (key == "outlier_fraction") s.outlier_fraction = value.get<double>();
      else if (key == "modulation") s.modulation = value.get<double>();
      else if (key == "speed") s.speed = value.get<double>();
      else if (key == "floor_and_ceiling") s.floor_and_ceiling = value.get<bool>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else throw Error(ErrorCode::ConfigError, "unknown synthetic spec key '" + key + "'");
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

Json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.filename().string() + ": " + e.what());
  }
}

void write_json(const Json& j, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  close_out(out, path);
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

}  // namespace navcarve
