#include "tlidar/fsa.hpp"

#include <algorithm>
#include <map>

#include "tlidar/errors.hpp"

namespace tlidar {

Step Step::every(int frames) {
  if (frames < 1) throw ConfigError("step must be >= 1, got " + std::to_string(frames));
  return Step(frames);
}

std::string Step::to_string() const { return is_infinite() ? "inf" : std::to_string(frames_); }

void GroupDivision::validate() const {
  if (window < 1) throw ConfigError("division window must be >= 1");
  std::set<ClassId> seen;
  for (const auto& g : groups) {
    for (ClassId c : g.classes) {
      if (!seen.insert(c).second) {
        throw ConfigError("class " + std::to_string(c) + " appears in more than one group");
      }
    }
    if (g.distance_split) {
      if (!(g.distance_split->threshold > 0.0)) {
        throw ConfigError("group '" + g.name + "': distance threshold must be positive");
      }
      if (g.distance_split->near_step_multiplier < 1) {
        throw ConfigError("group '" + g.name + "': near step multiplier must be >= 1");
      }
    }
  }
}

std::optional<std::size_t> GroupDivision::group_of(ClassId cls) const {
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].classes.count(cls)) return k;
  }
  if (default_group) return groups.size();
  return std::nullopt;
}

std::vector<bool> GroupMask::mask(std::size_t group) const {
  std::vector<bool> out(group_index_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = group_index_[i] == group;
  return out;
}

std::size_t GroupMask::population(std::size_t group) const {
  return static_cast<std::size_t>(std::count(group_index_.begin(), group_index_.end(), group));
}

void AggregatedCloud::append(const LabeledCloud& src, std::size_t row, const Vec3& p,
                             FrameIndex frame, int step) {
  labeled.push_back_from(src, row, p);
  source_frame.push_back(frame);
  source_point.push_back(static_cast<std::uint32_t>(row));
  source_step.push_back(step);
}

FrameWindow::FrameWindow(std::span<const SequenceFrame> frames) : frames_(frames) {
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    if (frames_[i].index <= frames_[i - 1].index) {
      throw InvalidInputError("frames must be sorted by strictly increasing index");
    }
  }
}

const SequenceFrame* FrameWindow::find(FrameIndex index) const {
  auto it = std::lower_bound(frames_.begin(), frames_.end(), index,
                             [](const SequenceFrame& f, FrameIndex i) { return f.index < i; });
  if (it == frames_.end() || it->index != index) return nullptr;
  return &*it;
}

const SequenceFrame& FrameWindow::at(FrameIndex index) const {
  const auto* f = find(index);
  if (!f) throw InvalidInputError("frame " + std::to_string(index) + " is not loaded");
  return *f;
}

FrameIndex FrameWindow::first_index() const {
  if (frames_.empty()) throw InvalidInputError("no frames given");
  return frames_.front().index;
}

Pose FrameWindow::relative_pose(FrameIndex t, FrameIndex o) const {
  return compose(invert(at(t).pose), at(o).pose);
}

std::vector<FrameIndex> source_frames(FrameIndex t, int window, int step, FrameIndex first) {
  std::vector<FrameIndex> out;
  if (step < 1 || window < 1) return out;
  const int n = window / step;
  for (int i = 1; i <= n; ++i) {
    const FrameIndex o = t - static_cast<FrameIndex>(i) * step;
    if (o < first) break;
    out.push_back(o);
  }
  return out;
}

namespace {

void append_frame(AggregatedCloud& out, const SequenceFrame& src, const Pose& to_present,
                  int step) {
  const auto& lc = src.labeled;
  for (std::size_t i = 0; i < lc.size(); ++i) {
    out.append(lc, i, to_present.apply(lc.cloud.xyz[i]), src.index, step);
  }
}

const SequenceFrame& present_frame(const FrameWindow& win, FrameIndex t) {
  const auto* f = win.find(t);
  if (!f) throw InvalidInputError("present frame " + std::to_string(t) + " out of range");
  f->labeled.validate();
  return *f;
}

// Dense class -> group table; labels are 16-bit so 65536 entries suffice.
class GroupLookup {
 public:
  static constexpr std::uint16_t kUnmapped = 0xFFFF;

  explicit GroupLookup(const GroupDivision& division)
      : table_(65536, division.default_group
                          ? static_cast<std::uint16_t>(division.groups.size())
                          : kUnmapped) {
    for (std::size_t k = 0; k < division.groups.size(); ++k) {
      for (ClassId c : division.groups[k].classes) {
        if (c < table_.size()) table_[c] = static_cast<std::uint16_t>(k);
      }
    }
  }

  std::size_t group_of(ClassId c) const {
    const std::uint16_t g = c < table_.size() ? table_[c] : kUnmapped;
    if (g == kUnmapped) {
      throw ConfigError("class " + std::to_string(c) +
                        " is not assigned to any group and the division has no default group");
    }
    return g;
  }

 private:
  std::vector<std::uint16_t> table_;
};

GroupMask build_masks(const SequenceFrame& frame, const GroupDivision& division,
                      const GroupLookup& lookup) {
  std::vector<std::size_t> index(frame.labeled.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = lookup.group_of(frame.labeled.semantic[i]);
  return GroupMask(std::move(index), division.groups.size() + (division.default_group ? 1 : 0));
}

struct MaskSource {
  const FrameWindow& frames;
  std::optional<FrameWindow> mask_frames;
  const GroupDivision& division;
  GroupLookup lookup;
  std::map<FrameIndex, GroupMask> cache;

  MaskSource(const FrameWindow& f, std::span<const SequenceFrame> masks, const GroupDivision& d)
      : frames(f), division(d), lookup(d) {
    if (!masks.empty()) mask_frames.emplace(masks);
  }

  const GroupMask& masks_for(FrameIndex o) {
    auto it = cache.find(o);
    if (it != cache.end()) return it->second;
    const SequenceFrame& data = frames.at(o);
    const SequenceFrame* labels = &data;
    if (mask_frames) {
      labels = &mask_frames->at(o);
      if (labels->labeled.size() != data.labeled.size()) {
        throw InvalidInputError("mask labels for frame " + std::to_string(o) + " have " +
                                std::to_string(labels->labeled.size()) + " points, frame has " +
                                std::to_string(data.labeled.size()));
      }
    }
    return cache.emplace(o, build_masks(*labels, division, lookup)).first->second;
  }
};

void append_group(AggregatedCloud& out, const FrameWindow& win, MaskSource& masks, FrameIndex t,
                  const GroupDivision& division, std::size_t k) {
  const std::size_t explicit_groups = division.groups.size();
  if (k > explicit_groups || (k == explicit_groups && !division.default_group)) {
    throw ConfigError("group " + std::to_string(k) + " does not exist in division '" +
                      division.name + "'");
  }
  if (k == explicit_groups) return;  // implicit default group: never aggregated
  const ClassGroup& group = division.groups[k];
  if (group.step.is_infinite()) return;

  const int step = group.step.frames();
  const FrameIndex first = win.first_index();
  const auto far_frames = source_frames(t, division.window, step, first);
  std::vector<FrameIndex> near_frames;
  double near_threshold = 0.0;
  int near_step = step;
  if (group.distance_split) {
    near_step = step * group.distance_split->near_step_multiplier;
    near_frames = source_frames(t, division.window, near_step, first);
    near_threshold = group.distance_split->threshold;
  }

  const SequenceFrame& present = present_frame(win, t);
  const Pose present_inv = invert(present.pose);
  for (FrameIndex o : far_frames) {
    const SequenceFrame& src = win.at(o);
    const GroupMask& mask = masks.masks_for(o);
    const Pose to_present = compose(present_inv, src.pose);
    const bool near_sampled =
        std::find(near_frames.begin(), near_frames.end(), o) != near_frames.end();
    const auto& lc = src.labeled;
    for (std::size_t i = 0; i < lc.size(); ++i) {
      if (!mask.contains(k, i)) continue;
      int used_step = step;
      if (group.distance_split && lc.cloud.xyz[i].norm() < near_threshold) {
        if (!near_sampled) continue;
        used_step = near_step;
      }
      out.append(lc, i, to_present.apply(lc.cloud.xyz[i]), o, used_step);
    }
  }
}

}  // namespace

AggregatedCloud aggregate_direct(std::span<const SequenceFrame> frames, FrameIndex t, int window) {
  return aggregate_stepped(frames, t, window, 1);
}

AggregatedCloud aggregate_stepped(std::span<const SequenceFrame> frames, FrameIndex t, int window,
                                  int step) {
  if (window < 0) throw InvalidInputError("window must be >= 0");
  if (step < 1) throw InvalidInputError("step must be >= 1");
  const FrameWindow win(frames);
  const SequenceFrame& present = present_frame(win, t);
  AggregatedCloud out;
  append_frame(out, present, Pose(), 0);
  const Pose present_inv = invert(present.pose);
  for (FrameIndex o : source_frames(t, window, step, win.first_index())) {
    const SequenceFrame& src = win.at(o);
    src.labeled.validate();
    append_frame(out, src, compose(present_inv, src.pose), step);
  }
  return out;
}

GroupMask make_group_masks(const SequenceFrame& frame, const GroupDivision& division) {
  division.validate();
  return build_masks(frame, division, GroupLookup(division));
}

AggregatedCloud aggregate_group(std::span<const SequenceFrame> frames, FrameIndex t,
                                const GroupDivision& division, std::size_t k,
                                std::span<const SequenceFrame> mask_frames) {
  division.validate();
  const FrameWindow win(frames);
  present_frame(win, t);
  MaskSource masks(win, mask_frames, division);
  AggregatedCloud out;
  append_group(out, win, masks, t, division, k);
  return out;
}

AggregatedCloud aggregate_fsa(std::span<const SequenceFrame> frames, FrameIndex t,
                              const GroupDivision& division,
                              std::span<const SequenceFrame> mask_frames) {
  division.validate();
  const FrameWindow win(frames);
  const SequenceFrame& present = present_frame(win, t);
  MaskSource masks(win, mask_frames, division);
  AggregatedCloud out;
  append_frame(out, present, Pose(), 0);
  for (std::size_t k = 0; k < division.groups.size(); ++k) {
    append_group(out, win, masks, t, division, k);
  }
  return out;
}

}  // namespace tlidar
