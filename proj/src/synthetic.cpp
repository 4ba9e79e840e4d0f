#include "tlidar/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlidar/errors.hpp"
#include "tlidar/random.hpp"

namespace tlidar {

using nlohmann::json;

void SyntheticSceneSpec::validate() const {
  if (class_histogram.empty()) throw ConfigError("synthetic spec: empty class histogram");
  if (frame_count < 1) throw ConfigError("synthetic spec: frame_count must be >= 1");
  double total = 0.0;
  for (const auto& [cls, frac] : class_histogram) {
    if (!(frac >= 0.0)) {
      throw ConfigError("synthetic spec: negative fraction for class " + std::to_string(cls));
    }
    total += frac;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("synthetic spec: class fractions sum to " + std::to_string(total) +
                      ", expected 1");
  }
  if (!(scene_radius > 1.0)) throw ConfigError("synthetic spec: scene_radius must exceed 1 m");
  const auto budget = class_budget(*this);
  std::map<ClassId, std::size_t> used;
  std::set<InstanceId> ids;
  for (const auto& inst : instances) {
    if (inst.id == 0) throw ConfigError("synthetic spec: instance id 0 is reserved");
    if (!ids.insert(inst.id).second) {
      throw ConfigError("synthetic spec: duplicate instance id " + std::to_string(inst.id));
    }
    if (!class_histogram.count(inst.class_id)) {
      throw ConfigError("synthetic spec: instance " + std::to_string(inst.id) + " has class " +
                        std::to_string(inst.class_id) + " missing from the histogram");
    }
    if (inst.points == 0) throw ConfigError("synthetic spec: instance with zero points");
    used[inst.class_id] += inst.points;
  }
  for (const auto& [cls, n] : used) {
    if (n > budget.at(cls)) {
      throw ConfigError("synthetic spec: instances of class " + std::to_string(cls) + " need " +
                        std::to_string(n) + " points but the class budget is " +
                        std::to_string(budget.at(cls)));
    }
  }
}

std::map<ClassId, std::size_t> class_budget(const SyntheticSceneSpec& spec) {
  const double n = static_cast<double>(spec.points_per_frame);
  std::map<ClassId, std::size_t> out;
  std::vector<std::pair<double, ClassId>> remainders;
  std::size_t assigned = 0;
  for (const auto& [cls, frac] : spec.class_histogram) {
    const double exact = frac * n;
    const auto whole = static_cast<std::size_t>(std::floor(exact));
    out[cls] = whole;
    assigned += whole;
    remainders.emplace_back(exact - static_cast<double>(whole), cls);
  }
  // Largest remainder first; ties go to the smaller class id.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < spec.points_per_frame && i < remainders.size(); ++i) {
    ++out[remainders[i].second];
    ++assigned;
  }
  return out;
}

CameraCalib default_synthetic_calib() {
  Mat3 r;
  r << 0, -1, 0,  //
      0, 0, -1,   //
      1, 0, 0;
  return CameraCalib::pinhole(707.0912, 707.0912, 601.8873, 183.1104, Pose(r, Vec3::Zero()),
                              CameraCalib::kDefaultWidth, CameraCalib::kDefaultHeight);
}

namespace {

Pose ego_pose(const EgoTrajectory& ego, std::size_t frame) {
  const double t = static_cast<double>(frame) * kFramePeriodSeconds;
  const Vec3 position = ego.start + ego.velocity * t;
  return compose(Pose::translation(position.x(), position.y(), position.z()),
                 Pose::rotation_z(ego.yaw_rate * t));
}

// Fixed local point layout of an instance; mean is exactly removed so the
// centroid tracks the declared center.
std::vector<Vec3> instance_offsets(const SyntheticInstance& inst, std::uint64_t seed) {
  Rng rng(seed ^ (0x9E3779B97F4A7C15ull * (inst.id + 1)));
  std::vector<Vec3> offsets(inst.points);
  for (auto& o : offsets) {
    o = Vec3(rng.uniform(-0.5, 0.5) * inst.size.x(), rng.uniform(-0.5, 0.5) * inst.size.y(),
             rng.uniform(-0.5, 0.5) * inst.size.z());
  }
  const Vec3 mean = centroid(offsets);
  for (auto& o : offsets) o -= mean;
  return offsets;
}

// Background classes alternate between the ground plane and vertical facades.
Vec3 background_point(Rng& rng, std::size_t class_position, const SyntheticSceneSpec& spec,
                      const Pose& pose) {
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double range = rng.uniform(2.0, spec.scene_radius);
  const Vec3 origin = pose.translation();
  const double ground = spec.ego.start.z() - spec.sensor_height;
  if (class_position % 2 == 0) {
    return Vec3(origin.x() + range * std::cos(angle), origin.y() + range * std::sin(angle),
                ground);
  }
  // Facade: a wall at |y| = 8 + position meters from the ego track.
  const double side = rng.coin() ? 1.0 : -1.0;
  const double along = range * std::cos(angle);
  const double offset = 8.0 + static_cast<double>(class_position);
  return Vec3(origin.x() + along, origin.y() + side * offset, ground + rng.uniform(0.0, 6.0));
}

}  // namespace

Sequence generate_synthetic(const SyntheticSceneSpec& spec) {
  spec.validate();
  const auto budget = class_budget(spec);
  std::vector<std::vector<Vec3>> offsets;
  for (const auto& inst : spec.instances) offsets.push_back(instance_offsets(inst, spec.seed));

  Sequence seq;
  seq.calib = default_synthetic_calib();
  Rng rng(spec.seed);
  for (std::size_t f = 0; f < spec.frame_count; ++f) {
    SequenceFrame frame;
    frame.index = static_cast<FrameIndex>(f);
    frame.timestamp = static_cast<double>(f) * kFramePeriodSeconds;
    frame.pose = ego_pose(spec.ego, f);
    const Pose world_to_sensor = invert(frame.pose);
    const double t = frame.timestamp;
    auto& out = frame.labeled;
    out.reserve(spec.points_per_frame);

    std::size_t position = 0;
    for (const auto& [cls, count] : budget) {
      std::size_t remaining = count;
      for (std::size_t k = 0; k < spec.instances.size(); ++k) {
        const auto& inst = spec.instances[k];
        if (inst.class_id != cls) continue;
        const Vec3 center = inst.kinematics == Kinematics::kStatic
                                ? inst.center
                                : Vec3(inst.center + inst.velocity * t);
        for (const auto& o : offsets[k]) {
          out.push_back(world_to_sensor.apply(center + o), rng.uniform(), cls, inst.id);
        }
        remaining -= inst.points;
      }
      for (std::size_t i = 0; i < remaining; ++i) {
        const Vec3 world = background_point(rng, position, spec, frame.pose);
        out.push_back(world_to_sensor.apply(world), rng.uniform(), cls, 0);
      }
      ++position;
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

SequenceFrame corrupt_labels(const SequenceFrame& frame, double error_rate, std::uint64_t seed) {
  if (!(error_rate >= 0.0 && error_rate <= 1.0)) {
    throw InvalidInputError("error_rate must be in [0, 1], got " + std::to_string(error_rate));
  }
  SequenceFrame out = frame;
  const std::size_t n = frame.labeled.size();
  const auto count = static_cast<std::size_t>(std::lround(error_rate * static_cast<double>(n)));
  if (count == 0) return out;

  const std::set<ClassId> present(frame.labeled.semantic.begin(), frame.labeled.semantic.end());
  if (present.size() < 2) {
    throw InvalidInputError("corrupt_labels needs at least two classes in frame " +
                            std::to_string(frame.index));
  }
  const std::vector<ClassId> classes(present.begin(), present.end());
  Rng rng(seed ^ (0xD1B54A32D192ED03ull * static_cast<std::uint64_t>(frame.index + 1)));

  // Partial Fisher-Yates picks `count` distinct points.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(order[i], order[i + rng.below(n - i)]);
    const std::size_t p = order[i];
    const ClassId original = frame.labeled.semantic[p];
    // Uniform over the other classes: draw from size-1 slots, skip the original.
    auto pick = rng.below(classes.size() - 1);
    const auto orig_pos = static_cast<std::size_t>(
        std::lower_bound(classes.begin(), classes.end(), original) - classes.begin());
    if (pick >= orig_pos) ++pick;
    out.labeled.semantic[p] = classes[pick];
  }
  return out;
}

SyntheticSceneSpec kitti_like_scene_spec(std::uint64_t seed) {
  SyntheticSceneSpec spec;
  spec.frame_count = 40;
  spec.points_per_frame = 12000;
  spec.seed = seed;
  spec.class_histogram = {
      {10, 0.040},   // car
      {252, 0.010},  // moving-car
      {40, 0.210},   // road
      {50, 0.150},   // building
      {70, 0.315},   // vegetation
      {48, 0.080},   // sidewalk
      {72, 0.090},   // terrain
      {51, 0.030},   // fence
      {71, 0.020},   // trunk
      {80, 0.015},   // pole
      {81, 0.005},   // traffic-sign
      {30, 0.005},   // person
      {11, 0.005},   // bicycle
      {15, 0.005},   // motorcycle
      {44, 0.010},   // parking
      {49, 0.010},   // other-ground
  };
  const double ground = -spec.sensor_height + 0.75;
  spec.instances = {
      {1, 10, Kinematics::kStatic, Vec3(12.0, 4.5, ground), Vec3(4.2, 1.8, 1.5), Vec3::Zero(), 200},
      {2, 10, Kinematics::kStatic, Vec3(20.0, -4.5, ground), Vec3(4.5, 1.9, 1.6), Vec3::Zero(), 160},
      {3, 252, Kinematics::kConstantVelocity, Vec3(8.0, -1.8, ground), Vec3(4.4, 1.8, 1.5),
       Vec3(6.0, 0.0, 0.0), 100},
  };
  spec.ego.velocity = Vec3(5.0, 0.0, 0.0);
  return spec;
}

namespace {

Vec3 vec3_from_json(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(std::string("synthetic spec: '") + key + "' must be a 3-element array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

SyntheticSceneSpec synthetic_spec_from_json(const std::string& text) {
  SyntheticSceneSpec spec;
  try {
    const json j = json::parse(text);
    spec.frame_count = j.value("frame_count", spec.frame_count);
    spec.points_per_frame = j.value("points_per_frame", spec.points_per_frame);
    spec.seed = j.value("seed", spec.seed);
    spec.scene_radius = j.value("scene_radius", spec.scene_radius);
    spec.sensor_height = j.value("sensor_height", spec.sensor_height);
    if (j.contains("class_histogram")) {
      for (const auto& [key, frac] : j.at("class_histogram").items()) {
        spec.class_histogram[static_cast<ClassId>(std::stoul(key))] = frac.get<double>();
      }
    }
    if (j.contains("instances")) {
      for (const auto& ji : j.at("instances")) {
        SyntheticInstance inst;
        inst.id = ji.at("id").get<InstanceId>();
        inst.class_id = ji.at("class").get<ClassId>();
        inst.points = ji.value("points", inst.points);
        if (ji.contains("center")) inst.center = vec3_from_json(ji.at("center"), "center");
        if (ji.contains("size")) inst.size = vec3_from_json(ji.at("size"), "size");
        const std::string motion = ji.value("kinematics", std::string("static"));
        if (motion == "static") {
          inst.kinematics = Kinematics::kStatic;
        } else if (motion == "constant_velocity") {
          inst.kinematics = Kinematics::kConstantVelocity;
          inst.velocity = vec3_from_json(ji.at("velocity"), "velocity");
        } else {
          throw ConfigError("synthetic spec: unknown kinematics '" + motion +
                            "' (expected static | constant_velocity)");
        }
        spec.instances.push_back(inst);
      }
    }
    if (j.contains("ego")) {
      const auto& je = j.at("ego");
      if (je.contains("start")) spec.ego.start = vec3_from_json(je.at("start"), "start");
      if (je.contains("velocity")) spec.ego.velocity = vec3_from_json(je.at("velocity"), "velocity");
      spec.ego.yaw_rate = je.value("yaw_rate", 0.0);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ConfigError("synthetic spec: class_histogram keys must be integer class ids");
  }
  spec.validate();
  return spec;
}

SyntheticSceneSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open synthetic spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return synthetic_spec_from_json(buf.str());
}

std::string synthetic_spec_to_json(const SyntheticSceneSpec& spec) {
  json j;
  j["frame_count"] = spec.frame_count;
  j["points_per_frame"] = spec.points_per_frame;
  j["seed"] = spec.seed;
  j["scene_radius"] = spec.scene_radius;
  j["sensor_height"] = spec.sensor_height;
  json hist = json::object();
  for (const auto& [cls, frac] : spec.class_histogram) hist[std::to_string(cls)] = frac;
  j["class_histogram"] = hist;
  json insts = json::array();
  for (const auto& inst : spec.instances) {
    json ji = {{"id", inst.id},
               {"class", inst.class_id},
               {"points", inst.points},
               {"center", vec3_to_json(inst.center)},
               {"size", vec3_to_json(inst.size)}};
    if (inst.kinematics == Kinematics::kStatic) {
      ji["kinematics"] = "static";
    } else {
      ji["kinematics"] = "constant_velocity";
      ji["velocity"] = vec3_to_json(inst.velocity);
    }
    insts.push_back(ji);
  }
  j["instances"] = insts;
  j["ego"] = {{"start", vec3_to_json(spec.ego.start)},
              {"velocity", vec3_to_json(spec.ego.velocity)},
              {"yaw_rate", spec.ego.yaw_rate}};
  return j.dump(2) + "\n";
}

}  // namespace tlidar
