#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tlidar/fsa.hpp"

namespace tlidar {

enum class MotionState { kStatic, kMoving };

const char* to_string(MotionState state);

/// Points of one instance observed at one source frame, in present-frame
/// coordinates. `rows` index the aggregated cloud the part was cut from.
struct TrackPart {
  FrameIndex frame = 0;
  PointCloud points;
  Vec3 centroid = Vec3::Zero();
  std::vector<std::size_t> rows;
};

/// Temporal parts of one instance, most recent first (parts[0] is o_0).
struct InstanceTrack {
  InstanceId instance_id = 0;
  ClassId class_id = 0;
  std::vector<TrackPart> parts;

  std::size_t point_count() const;
};

inline constexpr double kDefaultMotionThreshold = 0.1;

/// Distinct non-zero instance ids in ascending order.
std::vector<InstanceId> instance_ids(const AggregatedCloud& aggregated);

/// Throws NotAugmentableError when the instance is absent or seen in one frame only.
InstanceTrack extract_track(const AggregatedCloud& aggregated, InstanceId instance);

double max_centroid_spread(const InstanceTrack& track);

/// Moving iff the largest pairwise centroid distance exceeds `threshold`.
MotionState classify_motion(const InstanceTrack& track, double threshold = kDefaultMotionThreshold);

/// q = C_{o_0} - C_{o_1}, the offset between the two most recent parts.
Vec3 adjacent_offset(const InstanceTrack& track);

/// Translates part i by C_{o_0} - C_{o_i}. Throws NotAugmentableError for static tracks.
InstanceTrack moving_to_static(const InstanceTrack& track,
                               double threshold = kDefaultMotionThreshold);

struct AnchorSet {
  std::vector<Vec3> anchors;
  double coverage_radius = 2.0;  // vertical cylinder

  void validate() const;
};

/// `count` anchors evenly spaced on a horizontal circle around `center`.
AnchorSet anchor_ring(const Vec3& center, double ring_radius = 3.0, int count = 8,
                      double coverage_radius = 2.0);

/// Anchor whose coverage cylinder holds the fewest scene points; ties go to
/// the lowest index.
std::size_t choose_anchor(const AnchorSet& anchors, std::span<const Vec3> scene);

/// Meters per frame-step between adjacent parts.
struct SpeedRange {
  double min = 0.2;
  double max = 1.0;
};

enum class DirectionRule {
  kHorizontalExtents,  // longer of the two horizontal box extents
  kWidthVsHeight,      // x extent vs vertical extent: x if wider, else y
};

/// Unit axis (x or y) along which a static track is set in motion.
Vec3 motion_axis(const InstanceTrack& track, DirectionRule rule = DirectionRule::kHorizontalExtents);

struct StaticToMovingOptions {
  SpeedRange speed;
  DirectionRule direction = DirectionRule::kHorizontalExtents;
  double motion_threshold = kDefaultMotionThreshold;
};

/// Draws d with |d| ~ U[speed.min, speed.max] along motion_axis() with a
/// random sign, then places part i at anchor + i * d (anchor chosen by
/// choose_anchor over `scene`, which should exclude the track itself).
/// Throws NotAugmentableError for moving tracks, ConfigError for an empty
/// speed range.
InstanceTrack static_to_moving(const InstanceTrack& track, std::span<const Vec3> scene,
                               const AnchorSet& anchors, std::uint64_t seed,
                               const StaticToMovingOptions& options = {});

/// Present-frame points of `aggregated` that do not belong to `track`.
std::vector<Vec3> scene_without_track(const AggregatedCloud& aggregated, const InstanceTrack& track);

/// Static <-> moving semantic id pairs.
class ClassPairTable {
 public:
  ClassPairTable() = default;
  explicit ClassPairTable(std::vector<std::pair<ClassId, ClassId>> pairs);

  static ClassPairTable semantic_kitti();
  static ClassPairTable from_json(const std::string& text);
  static ClassPairTable load(const std::filesystem::path& path);
  std::string to_json() const;

  /// Label of `cls` in the requested state; ConfigError if unmapped.
  ClassId variant(ClassId cls, MotionState state) const;

  const std::vector<std::pair<ClassId, ClassId>>& pairs() const { return pairs_; }

 private:
  std::vector<std::pair<ClassId, ClassId>> pairs_;  // (static, moving)
};

/// Replaces the old track's points by the new track's and relabels them to
/// `target`'s variant. Other points are untouched.
AggregatedCloud apply_switch(const AggregatedCloud& aggregated, const InstanceTrack& track_old,
                             const InstanceTrack& track_new, const ClassPairTable& table,
                             MotionState target);

}  // namespace tlidar
