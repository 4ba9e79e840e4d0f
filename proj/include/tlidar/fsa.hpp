#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tlidar/sequence_io.hpp"

namespace tlidar {

/// Temporal sampling step of a class group; infinite means "never aggregate".
class Step {
 public:
  static Step every(int frames);
  static constexpr Step infinite() { return Step(); }

  bool is_infinite() const { return frames_ == 0; }
  int frames() const { return frames_; }  // 0 when infinite
  std::string to_string() const;

  friend bool operator==(const Step&, const Step&) = default;

 private:
  constexpr Step() = default;
  explicit constexpr Step(int frames) : frames_(frames) {}
  int frames_ = 0;
};

/// Points closer than `threshold` (range in their own sensor frame) use
/// step * near_step_multiplier.
struct DistanceSplit {
  double threshold = 30.0;
  int near_step_multiplier = 2;
};

struct ClassGroup {
  std::string name;
  std::set<ClassId> classes;
  Step step = Step::infinite();
  std::optional<DistanceSplit> distance_split;
};

/// Class -> group -> step assignment plus the temporal window.
struct GroupDivision {
  std::string name;
  std::vector<ClassGroup> groups;
  int window = 16;
  // Unmapped classes fall into an implicit trailing group with infinite step.
  // When false they are a configuration error.
  bool default_group = true;

  /// Throws ConfigError on duplicate classes, steps < 1, window < 1.
  void validate() const;

  /// Group index for `cls`; groups.size() denotes the implicit default group.
  std::optional<std::size_t> group_of(ClassId cls) const;
};

/// Per-point group assignment for one frame. mask(k) is M^k.
class GroupMask {
 public:
  GroupMask(std::vector<std::size_t> group_index, std::size_t group_count)
      : group_index_(std::move(group_index)), group_count_(group_count) {}

  std::size_t group_count() const { return group_count_; }
  std::size_t point_count() const { return group_index_.size(); }
  std::size_t group_of(std::size_t point) const { return group_index_[point]; }
  bool contains(std::size_t group, std::size_t point) const {
    return group_index_[point] == group;
  }
  std::vector<bool> mask(std::size_t group) const;
  std::size_t population(std::size_t group) const;

 private:
  std::vector<std::size_t> group_index_;
  std::size_t group_count_;
};

/// Aggregated cloud in present-frame coordinates with provenance per point.
struct AggregatedCloud {
  LabeledCloud labeled;
  std::vector<FrameIndex> source_frame;
  std::vector<std::uint32_t> source_point;  // row within the source frame
  std::vector<int> source_step;             // 0 for the present frame

  std::size_t size() const { return labeled.size(); }
  void append(const LabeledCloud& src, std::size_t row, const Vec3& p, FrameIndex frame, int step);
};

/// Ordered frames with index lookup. Frames must be sorted by unique index.
class FrameWindow {
 public:
  explicit FrameWindow(std::span<const SequenceFrame> frames);

  const SequenceFrame* find(FrameIndex index) const;
  const SequenceFrame& at(FrameIndex index) const;  // InvalidInputError if absent
  FrameIndex first_index() const;
  std::span<const SequenceFrame> frames() const { return frames_; }

  /// T_{o}: maps frame o's sensor coordinates into frame t's.
  Pose relative_pose(FrameIndex t, FrameIndex o) const;

 private:
  std::span<const SequenceFrame> frames_;
};

/// o_i = t - i * step for i = 1..floor(window/step), dropping indices before
/// the first available frame.
std::vector<FrameIndex> source_frames(FrameIndex t, int window, int step, FrameIndex first);

AggregatedCloud aggregate_direct(std::span<const SequenceFrame> frames, FrameIndex t, int window);

/// Uniform stepped aggregation of all classes: frame t plus every step-th
/// frame within the window.
AggregatedCloud aggregate_stepped(std::span<const SequenceFrame> frames, FrameIndex t, int window,
                                  int step);

GroupMask make_group_masks(const SequenceFrame& frame, const GroupDivision& division);

/// Points of group k from its source frames, excluding the present frame.
/// `mask_frames`, when non-empty, supplies the labels used to build masks
/// (e.g. simulated historical predictions); emitted labels always come from
/// `frames`.
AggregatedCloud aggregate_group(std::span<const SequenceFrame> frames, FrameIndex t,
                                const GroupDivision& division, std::size_t k,
                                std::span<const SequenceFrame> mask_frames = {});

/// Present frame followed by every group's aggregation in group order.
AggregatedCloud aggregate_fsa(std::span<const SequenceFrame> frames, FrameIndex t,
                              const GroupDivision& division,
                              std::span<const SequenceFrame> mask_frames = {});

std::vector<std::string> division_preset_names();
GroupDivision division_preset(const std::string& name);

GroupDivision division_from_json(const std::string& text);
GroupDivision load_division(const std::filesystem::path& path);
std::string division_to_json(const GroupDivision& division);

/// Preset name or path to a JSON division file.
GroupDivision resolve_division(const std::string& name_or_path);

}  // namespace tlidar
