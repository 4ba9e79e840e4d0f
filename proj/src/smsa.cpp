#include "tlidar/smsa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlidar/errors.hpp"
#include "tlidar/random.hpp"

namespace tlidar {

const char* to_string(MotionState state) {
  return state == MotionState::kStatic ? "static" : "moving";
}

std::size_t InstanceTrack::point_count() const {
  std::size_t n = 0;
  for (const auto& p : parts) n += p.points.size();
  return n;
}

std::vector<InstanceId> instance_ids(const AggregatedCloud& aggregated) {
  std::set<InstanceId> ids(aggregated.labeled.instance.begin(), aggregated.labeled.instance.end());
  ids.erase(0);
  return {ids.begin(), ids.end()};
}

InstanceTrack extract_track(const AggregatedCloud& aggregated, InstanceId instance) {
  std::map<FrameIndex, TrackPart, std::greater<>> parts;
  std::map<ClassId, std::size_t> votes;
  const auto& lc = aggregated.labeled;
  for (std::size_t i = 0; i < lc.size(); ++i) {
    if (lc.instance[i] != instance) continue;
    auto& part = parts[aggregated.source_frame[i]];
    part.frame = aggregated.source_frame[i];
    part.points.push_back(lc.cloud.xyz[i], lc.cloud.intensity[i]);
    part.rows.push_back(i);
    ++votes[lc.semantic[i]];
  }
  if (parts.empty()) {
    throw NotAugmentableError("instance " + std::to_string(instance) + " is not in the cloud");
  }
  if (parts.size() < 2) {
    throw NotAugmentableError("instance " + std::to_string(instance) +
                              " appears in a single frame only");
  }
  InstanceTrack track;
  track.instance_id = instance;
  track.class_id = std::max_element(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
                     return a.second < b.second;
                   })->first;
  for (auto& [frame, part] : parts) {
    part.centroid = centroid(part.points.xyz);
    track.parts.push_back(std::move(part));
  }
  return track;
}

double max_centroid_spread(const InstanceTrack& track) {
  double spread = 0.0;
  for (std::size_t i = 0; i < track.parts.size(); ++i) {
    for (std::size_t j = i + 1; j < track.parts.size(); ++j) {
      spread = std::max(spread, (track.parts[i].centroid - track.parts[j].centroid).norm());
    }
  }
  return spread;
}

MotionState classify_motion(const InstanceTrack& track, double threshold) {
  return max_centroid_spread(track) > threshold ? MotionState::kMoving : MotionState::kStatic;
}

Vec3 adjacent_offset(const InstanceTrack& track) {
  if (track.parts.size() < 2) throw NotAugmentableError("track needs at least two parts");
  return track.parts[0].centroid - track.parts[1].centroid;
}

namespace {

void translate_part(TrackPart& part, const Vec3& shift) {
  for (auto& p : part.points.xyz) p += shift;
  part.centroid = centroid(part.points.xyz);
}

}  // namespace

InstanceTrack moving_to_static(const InstanceTrack& track, double threshold) {
  if (track.parts.size() < 2) throw NotAugmentableError("track needs at least two parts");
  if (classify_motion(track, threshold) != MotionState::kMoving) {
    throw NotAugmentableError("instance " + std::to_string(track.instance_id) +
                              " is already static");
  }
  InstanceTrack out = track;
  const Vec3 target = track.parts[0].centroid;
  for (auto& part : out.parts) translate_part(part, target - part.centroid);
  return out;
}

void AnchorSet::validate() const {
  if (anchors.empty()) throw ConfigError("anchor set is empty");
  if (!(coverage_radius > 0.0)) throw ConfigError("anchor coverage radius must be positive");
}

AnchorSet anchor_ring(const Vec3& center, double ring_radius, int count, double coverage_radius) {
  if (count < 1) throw ConfigError("anchor count must be >= 1");
  AnchorSet set;
  set.coverage_radius = coverage_radius;
  for (int k = 0; k < count; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / count;
    set.anchors.push_back(center + ring_radius * Vec3(std::cos(angle), std::sin(angle), 0.0));
  }
  set.validate();
  return set;
}

std::size_t choose_anchor(const AnchorSet& anchors, std::span<const Vec3> scene) {
  anchors.validate();
  const double r2 = anchors.coverage_radius * anchors.coverage_radius;
  std::size_t best = 0;
  std::size_t best_count = SIZE_MAX;
  for (std::size_t a = 0; a < anchors.anchors.size(); ++a) {
    const Vec3& anchor = anchors.anchors[a];
    std::size_t count = 0;
    for (const auto& p : scene) {
      const double dx = p.x() - anchor.x(), dy = p.y() - anchor.y();
      if (dx * dx + dy * dy <= r2) ++count;
    }
    if (count < best_count) {
      best = a;
      best_count = count;
    }
  }
  return best;
}

Vec3 motion_axis(const InstanceTrack& track, DirectionRule rule) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& part : track.parts) {
    for (const auto& p : part.points.xyz) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  const Vec3 extent = hi - lo;
  if (rule == DirectionRule::kHorizontalExtents) {
    return extent.x() >= extent.y() ? Vec3::UnitX() : Vec3::UnitY();
  }
  return extent.x() >= extent.z() ? Vec3::UnitX() : Vec3::UnitY();
}

InstanceTrack static_to_moving(const InstanceTrack& track, std::span<const Vec3> scene,
                               const AnchorSet& anchors, std::uint64_t seed,
                               const StaticToMovingOptions& options) {
  const auto& speed = options.speed;
  if (!(speed.min > 0.0) || !(speed.max >= speed.min) || !std::isfinite(speed.max)) {
    throw ConfigError("speed range [" + std::to_string(speed.min) + ", " +
                      std::to_string(speed.max) + "] is empty or non-positive");
  }
  if (track.parts.size() < 2) throw NotAugmentableError("track needs at least two parts");
  if (classify_motion(track, options.motion_threshold) != MotionState::kStatic) {
    throw NotAugmentableError("instance " + std::to_string(track.instance_id) +
                              " is already moving");
  }
  Rng rng(seed);
  const double magnitude = rng.uniform(speed.min, speed.max);
  const double sign = rng.coin() ? 1.0 : -1.0;
  const Vec3 step = sign * magnitude * motion_axis(track, options.direction);
  const Vec3& anchor = anchors.anchors[choose_anchor(anchors, scene)];

  InstanceTrack out = track;
  for (std::size_t i = 0; i < out.parts.size(); ++i) {
    auto& part = out.parts[i];
    translate_part(part, anchor - part.centroid + static_cast<double>(i) * step);
  }
  return out;
}

std::vector<Vec3> scene_without_track(const AggregatedCloud& aggregated, const InstanceTrack& track) {
  std::vector<bool> skip(aggregated.size(), false);
  for (const auto& part : track.parts) {
    for (std::size_t r : part.rows) {
      if (r < skip.size()) skip[r] = true;
    }
  }
  std::vector<Vec3> scene;
  scene.reserve(aggregated.size());
  for (std::size_t i = 0; i < aggregated.size(); ++i) {
    if (!skip[i]) scene.push_back(aggregated.labeled.cloud.xyz[i]);
  }
  return scene;
}

ClassPairTable::ClassPairTable(std::vector<std::pair<ClassId, ClassId>> pairs)
    : pairs_(std::move(pairs)) {
  std::set<ClassId> seen;
  for (const auto& [s, m] : pairs_) {
    if (!seen.insert(s).second || !seen.insert(m).second) {
      throw ConfigError("class pair table lists a class id twice");
    }
  }
}

ClassPairTable ClassPairTable::semantic_kitti() {
  return ClassPairTable({{10, 252},
                         {31, 253},
                         {30, 254},
                         {32, 255},
                         {16, 256},
                         {13, 257},
                         {18, 258},
                         {20, 259}});
}

ClassPairTable ClassPairTable::from_json(const std::string& text) {
  std::vector<std::pair<ClassId, ClassId>> pairs;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& p : j.at("pairs")) {
      pairs.emplace_back(p.at("static").get<ClassId>(), p.at("moving").get<ClassId>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("class pair table: ") + e.what());
  }
  return ClassPairTable(std::move(pairs));
}

ClassPairTable ClassPairTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open class pair table " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string ClassPairTable::to_json() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [s, m] : pairs_) pairs.push_back({{"static", s}, {"moving", m}});
  return nlohmann::json{{"pairs", pairs}}.dump(2) + "\n";
}

ClassId ClassPairTable::variant(ClassId cls, MotionState state) const {
  for (const auto& [s, m] : pairs_) {
    if (cls == s || cls == m) return state == MotionState::kStatic ? s : m;
  }
  throw ConfigError("class " + std::to_string(cls) + " has no static/moving pair in the table");
}

AggregatedCloud apply_switch(const AggregatedCloud& aggregated, const InstanceTrack& track_old,
                             const InstanceTrack& track_new, const ClassPairTable& table,
                             MotionState target) {
  if (track_old.parts.size() != track_new.parts.size()) {
    throw InvalidInputError("old and new tracks have different part counts");
  }
  AggregatedCloud out = aggregated;
  auto& lc = out.labeled;
  for (std::size_t k = 0; k < track_old.parts.size(); ++k) {
    const auto& old_part = track_old.parts[k];
    const auto& new_part = track_new.parts[k];
    if (old_part.rows != new_part.rows || new_part.points.size() != old_part.rows.size()) {
      throw InvalidInputError("new track part " + std::to_string(k) +
                              " does not line up with the old track");
    }
    for (std::size_t j = 0; j < old_part.rows.size(); ++j) {
      const std::size_t r = old_part.rows[j];
      if (r >= lc.size() || out.source_frame[r] != old_part.frame ||
          lc.instance[r] != track_old.instance_id || lc.cloud.xyz[r] != old_part.points.xyz[j]) {
        throw InvalidInputError("track point " + std::to_string(r) +
                                " is not part of the aggregated cloud");
      }
      lc.cloud.xyz[r] = new_part.points.xyz[j];
      lc.semantic[r] = table.variant(lc.semantic[r], target);
    }
  }
  return out;
}

}  // namespace tlidar
