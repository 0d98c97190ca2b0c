#include <pybind11/eigen.h>
#include <pybind11/gil_safe_call_once.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "navcarve/convex_hull.hpp"
#include "navcarve/evaluation.hpp"
#include "navcarve/mvie.hpp"
#include "navcarve/pipeline.hpp"
#include "navcarve/refinement.hpp"
#include "navcarve/region.hpp"

namespace py = pybind11;
using namespace navcarve;

namespace {

using PointArray = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using HalfspaceArray = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;
using IndexArray = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

std::vector<Point3> to_points(const Eigen::Ref<const PointArray>& a) {
  std::vector<Point3> out(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) out[i] = a.row(i).transpose();
  return out;
}

PointArray from_points(const std::vector<Point3>& pts) {
  PointArray a(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return a;
}

Polytope to_polytope(const Eigen::Ref<const HalfspaceArray>& h) {
  Polytope q;
  for (Eigen::Index i = 0; i < h.rows(); ++i) q.halfspaces.emplace_back(Vec3(h(i, 0), h(i, 1), h(i, 2)), h(i, 3));
  q.bounded_flag = is_bounded(q);
  return q;
}

HalfspaceArray from_polytope(const Polytope& q) {
  HalfspaceArray a(static_cast<Eigen::Index>(q.size()), 4);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    a.row(r) << q.halfspaces[i].a.transpose(), q.halfspaces[i].b;
  }
  return a;
}

py::dict mesh_dict(const TriangleMesh& m) {
  IndexArray tri(static_cast<Eigen::Index>(m.triangles.size()), 3);
  for (std::size_t i = 0; i < m.triangles.size(); ++i) {
    for (int k = 0; k < 3; ++k) tri(static_cast<Eigen::Index>(i), k) = m.triangles[i][k];
  }
  py::dict d;
  d["vertices"] = from_points(m.vertices);
  d["triangles"] = tri;
  d["facet_group"] = m.facet_group;
  return d;
}

py::dict region_dict(const RegionResult& r) {
  py::dict d;
  d["seed_id"] = r.seed_id;
  d["seed"] = Vec3(r.seed);
  d["C"] = Mat3(r.ellipsoid.C);
  d["d"] = Vec3(r.ellipsoid.d);
  d["halfspaces"] = from_polytope(r.polytope);
  d["hull"] = mesh_dict(r.hull);
  d["iterations"] = r.iterations;
  d["det_history"] = r.det_history;
  d["active_points"] = r.active_points;
  d["volume"] = r.hull.volume();
  return d;
}

Json to_json_obj(const py::object& o) {
  if (o.is_none()) return Json::object();
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

GrowthConfig growth_from(const py::object& o) {
  const Json j = to_json_obj(o);
  for (const auto& [key, value] : j.items()) {
    if (key != "growth_threshold" && key != "max_iterations" && key != "bounding_margin" &&
        key != "ball_init_radius") {
      throw Error(ErrorCode::ConfigError, "unknown growth key '" + key + "'");
    }
  }
  return PipelineConfig::from_json(j).growth;
}

}  // namespace

PYBIND11_MODULE(_navcarve, m) {
  m.doc() = "Convex free-space regions grown from sparse point clouds";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::object(py::exception<Error>(m, "NavcarveError", PyExc_RuntimeError)); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const StageFailure& e) {
      py::set_error(error_type.get_stored(), e.what());
    } catch (const Error& e) {
      py::set_error(error_type.get_stored(), e.what());
    }
  });

  m.def(
      "inscribed_ellipsoid",
      [](const Eigen::Ref<const HalfspaceArray>& h) {
        const Ellipsoid e = inscribed_ellipsoid(to_polytope(h));
        return py::make_tuple(Mat3(e.C), Vec3(e.d));
      },
      py::arg("halfspaces"), "Maximum-volume inscribed ellipsoid (C, d) of rows [ax, ay, az, b] with a.x <= b.");

  m.def(
      "chebyshev_center",
      [](const Eigen::Ref<const HalfspaceArray>& h) {
        const ChebyshevBall b = chebyshev_center(to_polytope(h));
        return py::make_tuple(Vec3(b.center), b.radius);
      },
      py::arg("halfspaces"));

  m.def(
      "polytope_hull",
      [](const Eigen::Ref<const HalfspaceArray>& h, const Vec3& interior) {
        return mesh_dict(polytope_hull(to_polytope(h), interior));
      },
      py::arg("halfspaces"), py::arg("interior"));

  m.def(
      "convex_hull",
      [](const Eigen::Ref<const PointArray>& pts) {
        const auto v = to_points(pts);
        return mesh_dict(convex_hull_3d(v));
      },
      py::arg("points"));

  m.def(
      "statistical_outlier_mask",
      [](const Eigen::Ref<const PointArray>& pts, std::size_t k, double alpha) {
        PointCloud c;
        c.points = to_points(pts);
        return statistical_outlier_mask(c, k, alpha);
      },
      py::arg("points"), py::arg("k") = 16, py::arg("alpha") = 2.0, "True for points that are kept.");

  m.def(
      "sample_seeds",
      [](const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>>& traj, double interval,
         const std::string& mode) {
        Trajectory t;
        for (Eigen::Index i = 0; i < traj.rows(); ++i) t.poses.push_back({traj(i, 0), traj.row(i).tail<3>().transpose()});
        if (mode != "time" && mode != "arclength") throw Error(ErrorCode::ConfigError, "mode must be time or arclength");
        const SeedSet s = sample_seeds(t, interval, mode == "time" ? SeedMode::ByTime : SeedMode::ByArcLength);
        std::vector<Point3> p;
        for (const Seed& seed : s.seeds) p.push_back(seed.position);
        return from_points(p);
      },
      py::arg("trajectory"), py::arg("interval") = 1.0, py::arg("mode") = "time");

  m.def(
      "grow_region",
      [](const Vec3& seed, const Eigen::Ref<const PointArray>& neighbors, const py::object& config) {
        NeighborSet nb;
        nb.points = to_points(neighbors);
        nb.k = nb.points.size();
        for (std::uint32_t i = 0; i < nb.points.size(); ++i) nb.indices.push_back(i);
        const GrowthConfig cfg = growth_from(config);
        RegionResult r;
        {
          py::gil_scoped_release release;
          r = grow_region(seed, nb, cfg);
        }
        return region_dict(r);
      },
      py::arg("seed"), py::arg("neighbors"), py::arg("config") = py::none(),
      "Grows one obstacle-free convex region around `seed`. `config` may set growth_threshold, max_iterations, "
      "bounding_margin and ball_init_radius.");

  m.def(
      "triangulate_facet",
      [](const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>>& uv) {
        ProjectedCloud c;
        for (Eigen::Index i = 0; i < uv.rows(); ++i) {
          ProjectedPoint p;
          p.point = Point3(uv(i, 0), uv(i, 1), 0.0);
          p.plane = Halfspace(Vec3::UnitZ(), 0.0);
          p.source_index = static_cast<std::uint32_t>(i);
          c.points.push_back(p);
        }
        return mesh_dict(triangulate_facet(c).mesh);
      },
      py::arg("points"), "Delaunay triangulation of planar points (z = 0).");

  m.def(
      "generate_environment",
      [](const py::object& spec) {
        const SyntheticEnvironment env = generate_environment(synthetic_spec_from_json(to_json_obj(spec)));
        Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor> traj(
            static_cast<Eigen::Index>(env.trajectory.poses.size()), 4);
        for (std::size_t i = 0; i < env.trajectory.poses.size(); ++i) {
          const Pose& p = env.trajectory.poses[i];
          traj.row(static_cast<Eigen::Index>(i)) << p.t, p.position.transpose();
        }
        std::vector<int> tags;
        for (PointTag t : env.cloud.tags) tags.push_back(static_cast<int>(t));
        py::dict d;
        d["points"] = from_points(env.cloud.points);
        d["tags"] = tags;
        d["trajectory"] = traj;
        d["free_volume"] = env.truth.free_volume();
        return d;
      },
      py::arg("spec") = py::none());

  m.def(
      "write_synthetic",
      [](const py::object& spec, const fs::path& out) {
        return write_synthetic(synthetic_spec_from_json(to_json_obj(spec)), out);
      },
      py::arg("spec"), py::arg("out"));

  m.def(
      "run_pipeline",
      [](const py::object& config, const fs::path& cloud, const fs::path& trajectory, const fs::path& ground_truth,
         const fs::path& out) {
        const PipelineConfig cfg = PipelineConfig::from_json(to_json_obj(config));
        RunManifest mf;
        {
          py::gil_scoped_release release;
          mf = run_pipeline(cfg, {cloud, trajectory, ground_truth}, out);
        }
        return to_py(mf.to_json());
      },
      py::arg("config"), py::arg("cloud"), py::arg("trajectory"), py::arg("ground_truth") = fs::path(),
      py::arg("out") = fs::path("run"), "Runs every stage into `out` and returns the manifest.");

  m.def(
      "run_stage",
      [](const std::string& stage, const py::object& config, const fs::path& out, const fs::path& cloud,
         const fs::path& trajectory, const fs::path& ground_truth) {
        const PipelineConfig cfg = PipelineConfig::from_json(to_json_obj(config));
        return to_py(run_stages(cfg, {cloud, trajectory, ground_truth}, out, {stage}, false).to_json());
      },
      py::arg("stage"), py::arg("config"), py::arg("out"), py::arg("cloud") = fs::path(),
      py::arg("trajectory") = fs::path(), py::arg("ground_truth") = fs::path());

  m.def("verify_manifest", &verify_manifest, py::arg("out"));
  m.def("default_config", [] { return to_py(PipelineConfig{}.to_json()); });
  m.def("read_point_cloud", [](const fs::path& p) { return from_points(read_point_cloud(p).points); });
  m.def("read_mesh", [](const fs::path& p) { return mesh_dict(read_mesh(p)); });
  m.attr("__version__") = artifact_version();
}
