#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tlidar/sequence_io.hpp"

namespace tlidar {

enum class Kinematics { kStatic, kConstantVelocity };

/// A rigid box of points that either stays put or translates at a fixed
/// world-frame velocity (m/s).
struct SyntheticInstance {
  InstanceId id = 1;
  ClassId class_id = 0;
  Kinematics kinematics = Kinematics::kStatic;
  Vec3 center = Vec3::Zero();  // world frame at frame 0
  Vec3 size = Vec3(4.0, 1.8, 1.5);
  Vec3 velocity = Vec3::Zero();
  std::size_t points = 100;  // per frame, drawn from the class budget
};

/// Ego pose at frame f: translate(start + velocity * f * dt) * rot_z(yaw_rate * f * dt).
struct EgoTrajectory {
  Vec3 start = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double yaw_rate = 0.0;
};

struct SyntheticSceneSpec {
  std::size_t frame_count = 1;
  std::size_t points_per_frame = 1000;
  std::map<ClassId, double> class_histogram;  // fraction of points per class
  std::vector<SyntheticInstance> instances;
  EgoTrajectory ego;
  double scene_radius = 50.0;  // background points fall within this range of the ego
  double sensor_height = 1.73;
  std::uint64_t seed = 0;

  /// Throws ConfigError for empty histograms, fractions not summing to 1,
  /// zero frames, or instances that overflow their class budget.
  void validate() const;
};

/// Per-class point counts for one frame: largest-remainder rounding, so each
/// count is within one point of fraction * points_per_frame.
std::map<ClassId, std::size_t> class_budget(const SyntheticSceneSpec& spec);

/// Forward-looking camera (optical axis along LiDAR +x) with KITTI-like intrinsics.
CameraCalib default_synthetic_calib();

/// Deterministic given spec.seed. Instance points keep identical local
/// offsets in every frame, so their world-frame centroid follows the declared
/// kinematics exactly.
Sequence generate_synthetic(const SyntheticSceneSpec& spec);

/// Resamples round(error_rate * N) semantic ids uniformly from the other
/// classes present in the frame. Simulates historical predictions.
SequenceFrame corrupt_labels(const SequenceFrame& frame, double error_rate, std::uint64_t seed);

/// KITTI-like histogram with static and moving car instances.
SyntheticSceneSpec kitti_like_scene_spec(std::uint64_t seed = 0);

SyntheticSceneSpec synthetic_spec_from_json(const std::string& text);
SyntheticSceneSpec load_synthetic_spec(const std::filesystem::path& path);
std::string synthetic_spec_to_json(const SyntheticSceneSpec& spec);

}  // namespace tlidar
