// Python bindings. Arrays cross the boundary as numpy copies; clouds are
// (N, 3) float64, labels uint32, voxel coordinates (N, 3) int32.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tlidar/bench.hpp"
#include "tlidar/cli.hpp"
#include "tlidar/errors.hpp"
#include "tlidar/fsa.hpp"
#include "tlidar/mask_distill.hpp"
#include "tlidar/sequence_io.hpp"
#include "tlidar/smsa.hpp"
#include "tlidar/synthetic.hpp"
#include "tlidar/tiaf.hpp"
#include "tlidar/voxel_grid.hpp"

namespace py = pybind11;
using namespace tlidar;

namespace {

using Points = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_array(const std::vector<Vec3>& xyz) {
  py::array_t<double> out({static_cast<py::ssize_t>(xyz.size()), py::ssize_t{3}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < xyz.size(); ++i)
    for (int a = 0; a < 3; ++a) m(static_cast<py::ssize_t>(i), a) = xyz[i][a];
  return out;
}

std::vector<Vec3> to_points(const Points& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw InvalidInputError("expected an (N, 3) array of points");
  auto m = a.unchecked<2>();
  std::vector<Vec3> out(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[static_cast<std::size_t>(i)] = Vec3(m(i, 0), m(i, 1), m(i, 2));
  return out;
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

Eigen::Matrix4d to_matrix(const Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = p.rotation();
  m.topRightCorner<3, 1>() = p.translation();
  return m;
}

Pose from_matrix(const Eigen::Matrix4d& m) {
  return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

SequenceFrame make_frame(FrameIndex index, const Points& xyz, const std::vector<double>& intensity,
                         const std::vector<ClassId>& semantic, const std::vector<InstanceId>& instance,
                         const Eigen::Matrix4d& pose) {
  SequenceFrame f;
  f.index = index;
  f.timestamp = static_cast<double>(index) * kFramePeriodSeconds;
  f.pose = from_matrix(pose);
  const auto pts = to_points(xyz);
  if (intensity.size() != pts.size() || semantic.size() != pts.size() || instance.size() != pts.size()) {
    throw InvalidInputError("intensity, semantic and instance must have one entry per point");
  }
  for (std::size_t i = 0; i < pts.size(); ++i) f.labeled.push_back(pts[i], intensity[i], semantic[i], instance[i]);
  f.labeled.validate();
  return f;
}

MotionState parse_state(const std::string& s) {
  if (s == "static") return MotionState::kStatic;
  if (s == "moving") return MotionState::kMoving;
  throw UsageError("motion state must be 'static' or 'moving'");
}

py::array_t<std::int32_t> coords_array(const VoxelFeatureMap& m) {
  py::array_t<std::int32_t> out({static_cast<py::ssize_t>(m.size()), py::ssize_t{3}});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& c = m.coords()[i];
    const auto r = static_cast<py::ssize_t>(i);
    a(r, 0) = c.x;
    a(r, 1) = c.y;
    a(r, 2) = c.z;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Temporal LiDAR aggregation, fusion and augmentation";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<InvalidInputError> invalid(m, "InvalidInputError", error.ptr());
  static py::exception<NotFoundError> not_found(m, "NotFoundError", error.ptr());
  static py::exception<FormatError> format(m, "FormatError", error.ptr());
  static py::exception<ConfigError> config(m, "ConfigError", error.ptr());
  static py::exception<NotAugmentableError> not_augmentable(m, "NotAugmentableError", error.ptr());
  static py::exception<UsageError> usage(m, "UsageError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidInputError& e) {
      py::set_error(invalid, e.what());
    } catch (const NotFoundError& e) {
      py::set_error(not_found, e.what());
    } catch (const FormatError& e) {
      py::set_error(format, e.what());
    } catch (const ConfigError& e) {
      py::set_error(config, e.what());
    } catch (const NotAugmentableError& e) {
      py::set_error(not_augmentable, e.what());
    } catch (const UsageError& e) {
      py::set_error(usage, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  // Geometry -----------------------------------------------------------------
  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init(&from_matrix), py::arg("matrix"))
      .def_static("from_axis_angle",
                  [](const Vec3& axis, double radians, const Vec3& t) { return Pose::from_axis_angle(axis, radians, t); },
                  py::arg("axis"), py::arg("radians"), py::arg("translation"))
      .def("matrix", &to_matrix)
      .def("apply", [](const Pose& p, const Points& xyz) {
        auto pts = to_points(xyz);
        for (auto& q : pts) q = p.apply(q);
        return to_array(pts);
      })
      .def("__matmul__", [](const Pose& a, const Pose& b) { return compose(a, b); })
      .def("inverse", [](const Pose& a) { return invert(a); });
  m.def("compose", [](const Pose& a, const Pose& b) { return compose(a, b); });
  m.def("invert", [](const Pose& a) { return invert(a); });

  // Sequences ----------------------------------------------------------------
  py::class_<SequenceFrame>(m, "Frame")
      .def(py::init(&make_frame), py::arg("index"), py::arg("xyz"), py::arg("intensity"), py::arg("semantic"),
           py::arg("instance"), py::arg("pose") = Eigen::Matrix4d::Identity())
      .def_readonly("index", &SequenceFrame::index)
      .def_readonly("timestamp", &SequenceFrame::timestamp)
      .def_property_readonly("pose", [](const SequenceFrame& f) { return f.pose; })
      .def_property_readonly("xyz", [](const SequenceFrame& f) { return to_array(f.labeled.cloud.xyz); })
      .def_property_readonly("intensity", [](const SequenceFrame& f) { return to_array(f.labeled.cloud.intensity); })
      .def_property_readonly("semantic", [](const SequenceFrame& f) { return to_array(f.labeled.semantic); })
      .def_property_readonly("instance", [](const SequenceFrame& f) { return to_array(f.labeled.instance); })
      .def("__len__", [](const SequenceFrame& f) { return f.labeled.size(); });

  py::class_<CameraCalib>(m, "CameraCalib")
      .def_readonly("fx", &CameraCalib::fx)
      .def_readonly("fy", &CameraCalib::fy)
      .def_readonly("cx", &CameraCalib::cx)
      .def_readonly("cy", &CameraCalib::cy)
      .def_readonly("width", &CameraCalib::width)
      .def_readonly("height", &CameraCalib::height)
      .def_property_readonly("extrinsic", [](const CameraCalib& c) { return c.extrinsic; });

  py::class_<Sequence>(m, "Sequence")
      .def(py::init([](std::vector<SequenceFrame> frames) {
             Sequence s;
             s.calib = default_synthetic_calib();
             s.frames = std::move(frames);
             return s;
           }),
           py::arg("frames"))
      .def_readonly("calib", &Sequence::calib)
      .def("__len__", [](const Sequence& s) { return s.frames.size(); })
      .def("__getitem__", [](const Sequence& s, std::size_t i) {
        if (i >= s.frames.size()) throw py::index_error();
        return s.frames[i];
      });

  m.def(
      "generate_synthetic",
      [](const std::optional<std::string>& spec_json, std::optional<std::uint64_t> seed,
         std::optional<std::size_t> frames, std::optional<std::size_t> points) {
        SyntheticSceneSpec spec = spec_json ? synthetic_spec_from_json(*spec_json) : kitti_like_scene_spec();
        if (seed) spec.seed = *seed;
        if (frames) spec.frame_count = *frames;
        if (points) spec.points_per_frame = *points;
        return generate_synthetic(spec);
      },
      py::arg("spec_json") = py::none(), py::arg("seed") = py::none(), py::arg("frames") = py::none(),
      py::arg("points") = py::none(), "Synthetic sequence; the default spec is the built-in KITTI-like scene.");
  m.def("kitti_like_spec_json", [](std::uint64_t seed) { return synthetic_spec_to_json(kitti_like_scene_spec(seed)); },
        py::arg("seed") = 0);
  m.def(
      "load_sequence",
      [](const std::string& dir, FrameIndex first, FrameIndex last) { return load_sequence(dir, {first, last}); },
      py::arg("path"), py::arg("first") = 0, py::arg("last") = -1);
  m.def("write_sequence", [](const std::string& dir, const Sequence& s) { write_sequence(dir, s); },
        py::arg("path"), py::arg("sequence"));
  m.def("corrupt_labels", &corrupt_labels, py::arg("frame"), py::arg("error_rate"), py::arg("seed"));

  // Aggregation --------------------------------------------------------------
  py::class_<GroupDivision>(m, "GroupDivision")
      .def_readonly("name", &GroupDivision::name)
      .def_readwrite("window", &GroupDivision::window)
      .def("to_json", [](const GroupDivision& d) { return division_to_json(d); })
      .def("group_steps", [](const GroupDivision& d) {
        std::vector<std::string> out;
        for (const auto& g : d.groups) out.push_back(g.step.to_string());
        return out;
      });
  m.def("division_preset", &division_preset, py::arg("name"));
  m.def("division_from_json", &division_from_json, py::arg("text"));
  m.def("division_preset_names", &division_preset_names);

  py::class_<AggregatedCloud>(m, "AggregatedCloud")
      .def("__len__", &AggregatedCloud::size)
      .def_property_readonly("xyz", [](const AggregatedCloud& a) { return to_array(a.labeled.cloud.xyz); })
      .def_property_readonly("intensity", [](const AggregatedCloud& a) { return to_array(a.labeled.cloud.intensity); })
      .def_property_readonly("semantic", [](const AggregatedCloud& a) { return to_array(a.labeled.semantic); })
      .def_property_readonly("instance", [](const AggregatedCloud& a) { return to_array(a.labeled.instance); })
      .def_property_readonly("source_frame", [](const AggregatedCloud& a) { return to_array(a.source_frame); })
      .def_property_readonly("source_point", [](const AggregatedCloud& a) { return to_array(a.source_point); })
      .def_property_readonly("source_step", [](const AggregatedCloud& a) { return to_array(a.source_step); });

  m.def(
      "aggregate_direct", [](const Sequence& s, FrameIndex t, int window) { return aggregate_direct(s.frames, t, window); },
      py::arg("sequence"), py::arg("t"), py::arg("window"));
  m.def(
      "aggregate_stepped",
      [](const Sequence& s, FrameIndex t, int window, int step) { return aggregate_stepped(s.frames, t, window, step); },
      py::arg("sequence"), py::arg("t"), py::arg("window"), py::arg("step"));
  m.def(
      "aggregate_fsa",
      [](const Sequence& s, FrameIndex t, const GroupDivision& d, const std::optional<Sequence>& masks) {
        if (masks) return aggregate_fsa(s.frames, t, d, masks->frames);
        return aggregate_fsa(s.frames, t, d);
      },
      py::arg("sequence"), py::arg("t"), py::arg("division"), py::arg("mask_sequence") = py::none(),
      "Flexible-step aggregation; mask_sequence supplies the labels that pick groups.");

  // Voxels and distillation ---------------------------------------------------
  py::class_<VoxelFeatureMap>(m, "VoxelFeatureMap")
      .def_property_readonly("voxel_size", &VoxelFeatureMap::voxel_size)
      .def_property_readonly("origin", [](const VoxelFeatureMap& v) { return Vec3(v.origin()); })
      .def_property_readonly("width", &VoxelFeatureMap::width)
      .def_property_readonly("scale_level", &VoxelFeatureMap::scale_level)
      .def_property_readonly("coords", &coords_array)
      .def_property_readonly("features", [](const VoxelFeatureMap& v) { return FeatureMatrix(v.features()); })
      .def("__len__", &VoxelFeatureMap::size);
  m.def(
      "voxelize",
      [](const Points& xyz, const FeatureMatrix& features, double size, const Vec3& origin) {
        return voxelize(to_points(xyz), features, size, origin);
      },
      py::arg("xyz"), py::arg("features"), py::arg("voxel_size"), py::arg("origin") = Vec3::Zero());
  m.def("downsample", &downsample, py::arg("map"));
  m.def(
      "gather_trilinear",
      [](const VoxelFeatureMap& map, const Points& q) { return gather_trilinear(map, to_points(q)); },
      py::arg("map"), py::arg("queries"));
  py::class_<FixedKernel>(m, "FixedKernel")
      .def_static("identity", &FixedKernel::identity, py::arg("channels"))
      .def_static("random", &FixedKernel::random, py::arg("in_channels"), py::arg("out_channels"), py::arg("seed"),
                  py::arg("scale") = 0.0)
      .def_readonly("in_channels", &FixedKernel::in_channels)
      .def_readonly("out_channels", &FixedKernel::out_channels);
  m.def("apply_fixed_kernel", &apply_fixed_kernel, py::arg("map"), py::arg("kernel"));
  m.def("write_voxel_map", [](const std::string& p, const VoxelFeatureMap& v) { write_voxel_map(p, v); });
  m.def("read_voxel_map", [](const std::string& p) { return read_voxel_map(p); });
  m.def(
      "distill_loss",
      [](const VoxelFeatureMap& student, const VoxelFeatureMap& teacher, const std::string& norm) {
        DistillNorm n;
        if (norm == "mean") {
          n = DistillNorm::kPerVoxelMean;
        } else if (norm == "frobenius") {
          n = DistillNorm::kFrobenius;
        } else {
          throw UsageError("norm must be 'mean' or 'frobenius'");
        }
        return distill_loss(student, teacher, shared_selection(student, teacher), n);
      },
      py::arg("student"), py::arg("teacher"), py::arg("norm") = "mean");

  // Image lifting ------------------------------------------------------------
  m.def(
      "lift_and_fuse",
      [](const Sequence& s, FrameIndex t, int channels, int step, int window, int scales, double voxel_size,
         std::uint64_t seed) {
        std::vector<ImageFeatureMap> images;
        for (const auto& f : s.frames) images.push_back(synthetic_feature_image(s.calib, channels, f.index, seed));
        const auto lifted = aggregate_image_features(s.frames, images, s.calib, t, step, window);
        FuseOptions fo;
        fo.scales = scales;
        fo.voxel_size = voxel_size;
        fo.seed = seed;
        py::dict out;
        out["xyz"] = to_array(lifted.points);
        out["features"] = FeatureMatrix(lifted.features);
        out["source_frame"] = to_array(lifted.source_frame);
        out["maps"] = fuse_to_voxels(lifted, fo);
        return out;
      },
      py::arg("sequence"), py::arg("t"), py::arg("channels") = 3, py::arg("step") = kDefaultImageStep,
      py::arg("window") = kDefaultImageWindow, py::arg("scales") = 3, py::arg("voxel_size") = 0.2,
      py::arg("seed") = 0, "Lift synthetic image features of past frames into frame t and fuse them into voxels.");

  // Static-moving switch -----------------------------------------------------
  py::class_<InstanceTrack>(m, "InstanceTrack")
      .def_readonly("instance_id", &InstanceTrack::instance_id)
      .def_readonly("class_id", &InstanceTrack::class_id)
      .def("__len__", [](const InstanceTrack& t) { return t.parts.size(); })
      .def("point_count", &InstanceTrack::point_count)
      .def("frames", [](const InstanceTrack& t) {
        std::vector<FrameIndex> out;
        for (const auto& p : t.parts) out.push_back(p.frame);
        return out;
      })
      .def("centroids", [](const InstanceTrack& t) {
        std::vector<Vec3> c;
        for (const auto& p : t.parts) c.push_back(p.centroid);
        return to_array(c);
      })
      .def("part_points", [](const InstanceTrack& t, std::size_t i) { return to_array(t.parts.at(i).points.xyz); });
  m.def("instance_ids", &instance_ids);
  m.def("extract_track", &extract_track, py::arg("aggregated"), py::arg("instance"));
  m.def(
      "classify_motion",
      [](const InstanceTrack& t, double threshold) { return std::string(to_string(classify_motion(t, threshold))); },
      py::arg("track"), py::arg("threshold") = kDefaultMotionThreshold);
  m.def("max_centroid_spread", &max_centroid_spread);
  m.def("moving_to_static", &moving_to_static, py::arg("track"), py::arg("threshold") = kDefaultMotionThreshold);
  m.def(
      "static_to_moving",
      [](const AggregatedCloud& agg, const InstanceTrack& track, std::uint64_t seed, double speed_min,
         double speed_max, double ring_radius, double coverage_radius) {
        StaticToMovingOptions opts;
        opts.speed = {speed_min, speed_max};
        return static_to_moving(track, scene_without_track(agg, track),
                                anchor_ring(track.parts.at(0).centroid, ring_radius, 8, coverage_radius), seed, opts);
      },
      py::arg("aggregated"), py::arg("track"), py::arg("seed"), py::arg("speed_min") = 0.2,
      py::arg("speed_max") = 1.0, py::arg("ring_radius") = 3.0, py::arg("coverage_radius") = 2.0,
      "Set a static track in motion, anchored on a ring around its present centroid.");
  m.def(
      "apply_switch",
      [](const AggregatedCloud& agg, const InstanceTrack& old_track, const InstanceTrack& new_track,
         const std::string& target, const std::optional<std::string>& pairs_json) {
        const auto table = pairs_json ? ClassPairTable::from_json(*pairs_json) : ClassPairTable::semantic_kitti();
        return apply_switch(agg, old_track, new_track, table, parse_state(target));
      },
      py::arg("aggregated"), py::arg("old_track"), py::arg("new_track"), py::arg("target"),
      py::arg("pairs_json") = py::none());

  // Bench and CLI -------------------------------------------------------------
  m.def(
      "run_bench",
      [](const Sequence& s, const std::vector<std::string>& strategies, const std::string& division, int window,
         FrameIndex t_first, FrameIndex t_last, int repeats) {
        const auto d = resolve_division(division);
        std::vector<Strategy> parsed;
        for (const auto& name : strategies) parsed.push_back(Strategy::parse(name, d));
        BenchOptions o;
        o.window = window;
        o.t_first = t_first;
        o.t_last = t_last;
        o.repeats = repeats;
        py::list rows;
        for (const auto& r : run_bench(s.frames, parsed, o).rows) {
          py::dict row;
          row["strategy"] = r.strategy;
          row["division"] = r.division;
          row["window"] = r.window;
          row["frames"] = r.frames;
          row["points"] = r.points;
          row["bytes"] = r.bytes;
          row["ms"] = r.milliseconds;
          row["per_frame_points"] = r.per_frame_points;
          rows.append(row);
        }
        return rows;
      },
      py::arg("sequence"), py::arg("strategies") = std::vector<std::string>{"direct", "fsa"},
      py::arg("division") = "division3", py::arg("window") = 16, py::arg("t_first") = 0, py::arg("t_last") = -1,
      py::arg("repeats") = 1);
  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"tlidar"};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
