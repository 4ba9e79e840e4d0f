#pragma once

// Generators and brute-force oracles shared by the unit and acceptance tests.
// Oracles deliberately avoid the library code paths they check.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include "tlidar/fsa.hpp"
#include "tlidar/random.hpp"
#include "tlidar/smsa.hpp"
#include "tlidar/voxel_grid.hpp"

namespace tlidar::testing {

inline Vec3 random_vec(Rng& rng, double lo, double hi) {
  return Vec3(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
}

inline Pose random_pose(Rng& rng, double max_translation = 50.0) {
  Vec3 axis = random_vec(rng, -1.0, 1.0);
  if (axis.norm() < 1e-3) axis = Vec3::UnitZ();
  return Pose::from_axis_angle(axis.normalized(), rng.uniform(-M_PI, M_PI),
                               random_vec(rng, -max_translation, max_translation));
}

/// Random sequence with arbitrary poses and labels drawn from `classes`.
inline std::vector<SequenceFrame> random_frames(Rng& rng, int frame_count, int max_points,
                                                const std::vector<ClassId>& classes) {
  std::vector<SequenceFrame> frames;
  for (int f = 0; f < frame_count; ++f) {
    SequenceFrame fr;
    fr.index = f;
    fr.timestamp = f * kFramePeriodSeconds;
    fr.pose = random_pose(rng, 20.0);
    const int n = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_points) + 1));
    for (int i = 0; i < n; ++i) {
      fr.labeled.push_back(random_vec(rng, -60.0, 60.0), rng.uniform(),
                           classes[rng.below(classes.size())],
                           static_cast<InstanceId>(rng.below(4)));
    }
    frames.push_back(std::move(fr));
  }
  return frames;
}

/// Random division over `classes`; some classes are left to the default group.
inline GroupDivision random_division(Rng& rng, const std::vector<ClassId>& classes) {
  GroupDivision d;
  d.name = "random";
  d.window = 1 + static_cast<int>(rng.below(12));
  const int groups = 1 + static_cast<int>(rng.below(4));
  for (int k = 0; k < groups; ++k) {
    ClassGroup g;
    g.name = "g" + std::to_string(k);
    g.step = rng.below(4) == 0 ? Step::infinite() : Step::every(1 + static_cast<int>(rng.below(5)));
    if (rng.coin()) g.distance_split = DistanceSplit{rng.uniform(10.0, 80.0), 1 + static_cast<int>(rng.below(3))};
    d.groups.push_back(std::move(g));
  }
  for (ClassId c : classes) {
    const auto slot = rng.below(static_cast<std::uint64_t>(groups) + 1);
    if (slot < static_cast<std::uint64_t>(groups)) d.groups[slot].classes.insert(c);
  }
  return d;
}

/// (source_frame, source_point, x, y, z, intensity, semantic, instance) rows, sorted.
using PointKey = std::tuple<FrameIndex, std::uint32_t, double, double, double, double, ClassId, InstanceId>;

inline std::vector<PointKey> point_multiset(const AggregatedCloud& a) {
  std::vector<PointKey> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& p = a.labeled.cloud.xyz[i];
    out.emplace_back(a.source_frame[i], a.source_point[i], p.x(), p.y(), p.z(),
                     a.labeled.cloud.intensity[i], a.labeled.semantic[i], a.labeled.instance[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Concatenate every frame up to t, then keep the rows FSA should emit.
/// `mask_labels` maps frame -> labels used for group membership (empty: own labels).
inline AggregatedCloud fsa_oracle(const std::vector<SequenceFrame>& frames, FrameIndex t,
                                  const GroupDivision& div,
                                  const std::map<FrameIndex, std::vector<ClassId>>& mask_labels = {}) {
  const FrameIndex first = frames.front().index;
  const AggregatedCloud all = aggregate_direct(frames, t, static_cast<int>(t - first));
  AggregatedCloud out;
  auto keep = [&](std::size_t r) {
    const FrameIndex o = all.source_frame[r];
    if (o == t) return -1;
    const std::uint32_t row = all.source_point[r];
    const SequenceFrame* src = nullptr;
    for (const auto& f : frames) {
      if (f.index == o) src = &f;
    }
    ClassId cls = src->labeled.semantic[row];
    if (auto it = mask_labels.find(o); it != mask_labels.end()) cls = it->second[row];
    const ClassGroup* group = nullptr;
    for (const auto& g : div.groups) {
      if (g.classes.count(cls)) group = &g;
    }
    if (!group || group->step.is_infinite()) return -1;
    int s = group->step.frames();
    if (group->distance_split && src->labeled.cloud.xyz[row].norm() < group->distance_split->threshold) {
      s *= group->distance_split->near_step_multiplier;
    }
    const FrameIndex lag = t - o;
    const int n = div.window / s;
    if (lag % s != 0 || lag / s < 1 || lag / s > n) return -1;
    return s;
  };
  for (std::size_t r = 0; r < all.size(); ++r) {
    const int s = keep(r);
    if (s < 0) continue;
    out.labeled.push_back_from(all.labeled, r, all.labeled.cloud.xyz[r]);
    out.source_frame.push_back(all.source_frame[r]);
    out.source_point.push_back(all.source_point[r]);
    out.source_step.push_back(s);
  }
  return out;
}

/// Aggregated cloud holding one instance over `parts` frames, part i shifted by i * step,
/// plus unrelated background points.
inline AggregatedCloud track_cloud(Rng& rng, int parts, const Vec3& step, InstanceId id = 5, ClassId cls = 10,
                            int per_part = 20, int background = 50) {
  AggregatedCloud agg;
  LabeledCloud src;
  std::vector<Vec3> shape;
  for (int k = 0; k < per_part; ++k) shape.push_back(Vec3(rng.uniform(-2, 2), rng.uniform(-0.8, 0.8), rng.uniform(0, 1.5)));
  for (int i = 0; i < parts; ++i) {
    for (const auto& s : shape) {
      src.push_back(Vec3(10, 4, 0) + s + static_cast<double>(i) * step, rng.uniform(), cls, id);
      agg.append(src, src.size() - 1, src.cloud.xyz.back(), 100 - i, i == 0 ? 0 : 1);
    }
    for (int b = 0; b < background / parts; ++b) {
      src.push_back(random_vec(rng, -30, 30), rng.uniform(), 40, 0);
      agg.append(src, src.size() - 1, src.cloud.xyz.back(), 100 - i, i == 0 ? 0 : 1);
    }
  }
  return agg;
}

inline std::vector<std::vector<double>> distance_matrix(const TrackPart& p) {
  std::vector<std::vector<double>> d(p.points.size(), std::vector<double>(p.points.size()));
  for (std::size_t i = 0; i < p.points.size(); ++i)
    for (std::size_t j = 0; j < p.points.size(); ++j) d[i][j] = (p.points.xyz[i] - p.points.xyz[j]).norm();
  return d;
}

/// Every part keeps its pairwise point distances.
inline bool rigid(const InstanceTrack& a, const InstanceTrack& b) {
  for (std::size_t k = 0; k < a.parts.size(); ++k) {
    const auto da = distance_matrix(a.parts[k]), db = distance_matrix(b.parts[k]);
    for (std::size_t i = 0; i < da.size(); ++i)
      for (std::size_t j = 0; j < da.size(); ++j)
        if (std::abs(da[i][j] - db[i][j]) > 1e-9) return false;
  }
  return true;
}

/// Random sparse voxel map with coordinates in [-extent, extent]^3.
inline VoxelFeatureMap random_map(Rng& rng, int count, int width, int extent, double voxel_size = 0.5,
                                  const Vec3& origin = Vec3::Zero(), int scale = 0) {
  std::set<VoxelCoord> coords;
  const auto span = static_cast<std::uint64_t>(2 * extent + 1);
  for (int i = 0; i < count; ++i) {
    coords.insert({static_cast<int>(rng.below(span)) - extent, static_cast<int>(rng.below(span)) - extent,
                   static_cast<int>(rng.below(span)) - extent});
  }
  FeatureMatrix f(static_cast<Eigen::Index>(coords.size()), width);
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    for (int c = 0; c < width; ++c) f(r, c) = rng.uniform(-1.0, 1.0);
  }
  return VoxelFeatureMap::from_entries(voxel_size, origin, scale,
                                       std::vector<VoxelCoord>(coords.begin(), coords.end()), f);
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tlidar_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace tlidar::testing
