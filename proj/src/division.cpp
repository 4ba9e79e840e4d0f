#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tlidar/errors.hpp"
#include "tlidar/fsa.hpp"

namespace tlidar {

using nlohmann::json;

namespace {

// SemanticKITTI evaluation classes with the raw label ids that map onto them.
// nominal_iou is a representative per-class validation score of a
// single-scan sparse-conv baseline; it only drives band membership of the
// presets and is meant to be edited (see division JSON dumps).
struct EvalClass {
  const char* name;
  std::vector<ClassId> raw_ids;
  double nominal_iou;
  bool large;  // large surfaces that hold many points
};

const std::vector<EvalClass>& eval_classes() {
  static const std::vector<EvalClass> classes = {
      {"car", {10, 252}, 97.0, false},
      {"bicycle", {11}, 55.0, false},
      {"motorcycle", {15}, 80.0, false},
      {"truck", {18, 258}, 85.0, false},
      {"other-vehicle", {13, 16, 20, 256, 257, 259}, 65.0, false},
      {"person", {30, 254}, 80.0, false},
      {"bicyclist", {31, 253}, 92.0, false},
      {"motorcyclist", {32, 255}, 75.0, false},
      {"road", {40, 60}, 94.0, true},
      {"parking", {44}, 50.0, true},
      {"sidewalk", {48}, 82.0, true},
      {"other-ground", {49}, 8.0, true},
      {"building", {50}, 92.0, true},
      {"fence", {51}, 68.0, true},
      {"vegetation", {70}, 90.0, true},
      {"trunk", {71}, 72.0, false},
      {"terrain", {72}, 76.0, true},
      {"pole", {80}, 66.0, false},
      {"traffic-sign", {81}, 52.0, false},
  };
  return classes;
}

void add_class(ClassGroup& g, const EvalClass& c) { g.classes.insert(c.raw_ids.begin(), c.raw_ids.end()); }

void move_class(ClassGroup& from, ClassGroup& to, const EvalClass& c) {
  for (ClassId id : c.raw_ids) {
    if (from.classes.erase(id)) to.classes.insert(id);
  }
}

const EvalClass& eval_class(const std::string& name) {
  for (const auto& c : eval_classes()) {
    if (name == c.name) return c;
  }
  throw ConfigError("unknown evaluation class " + name);
}

// Bands [90,100] -> inf, [80,90) -> 4, rest -> 2.
GroupDivision band_division() {
  GroupDivision d;
  d.groups = {{"group1", {}, Step::infinite(), {}},
              {"group2", {}, Step::every(4), {}},
              {"group3", {}, Step::every(2), {}}};
  for (const auto& c : eval_classes()) {
    const std::size_t k = c.nominal_iou >= 90.0 ? 0 : c.nominal_iou >= 80.0 ? 1 : 2;
    add_class(d.groups[k], c);
  }
  return d;
}

// Ranks 1-6 -> inf, 7-12 -> 4, 13-19 -> 2.
GroupDivision rank_division() {
  GroupDivision d;
  d.groups = {{"top1-6", {}, Step::infinite(), {}},
              {"top7-12", {}, Step::every(4), {}},
              {"top13-19", {}, Step::every(2), {}}};
  std::vector<const EvalClass*> ranked;
  for (const auto& c : eval_classes()) ranked.push_back(&c);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto* a, const auto* b) { return a->nominal_iou > b->nominal_iou; });
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    add_class(d.groups[r < 6 ? 0 : r < 12 ? 1 : 2], *ranked[r]);
  }
  return d;
}

GroupDivision division3() {
  GroupDivision d = band_division();
  for (const char* name : {"other-ground", "terrain"}) {
    move_class(d.groups[2], d.groups[1], eval_class(name));
  }
  return d;
}

GroupDivision division4() {
  GroupDivision d = division3();
  ClassGroup coarse{"group4", {}, Step::every(8), {}};
  for (const auto& c : eval_classes()) {
    if (!c.large) continue;
    move_class(d.groups[1], coarse, c);
    move_class(d.groups[2], coarse, c);
  }
  d.groups.push_back(coarse);
  return d;
}

GroupDivision division5() {
  GroupDivision d = division4();
  for (auto& g : d.groups) {
    if (!g.step.is_infinite()) g.distance_split = DistanceSplit{30.0, 2};
  }
  return d;
}

}  // namespace

std::vector<std::string> division_preset_names() {
  return {"division1", "division2", "division3", "division4", "division5"};
}

GroupDivision division_preset(const std::string& name) {
  GroupDivision d;
  if (name == "division1") {
    d = band_division();
  } else if (name == "division2") {
    d = rank_division();
  } else if (name == "division3") {
    d = division3();
  } else if (name == "division4") {
    d = division4();
  } else if (name == "division5") {
    d = division5();
  } else {
    throw ConfigError("unknown division '" + name +
                      "'; valid presets: division1, division2, division3, division4, division5");
  }
  d.name = name;
  d.window = 16;
  d.default_group = true;
  d.validate();
  return d;
}

GroupDivision division_from_json(const std::string& text) {
  GroupDivision d;
  try {
    const json j = json::parse(text);
    d.name = j.value("name", std::string("custom"));
    d.window = j.value("window", 16);
    d.default_group = j.value("default_group", true);
    for (const auto& jg : j.at("groups")) {
      ClassGroup g;
      g.name = jg.value("name", "group" + std::to_string(d.groups.size() + 1));
      for (const auto& c : jg.at("classes")) g.classes.insert(c.get<ClassId>());
      const auto& step = jg.at("step");
      if (step.is_string()) {
        const auto s = step.get<std::string>();
        if (s != "inf") throw ConfigError("group '" + g.name + "': step must be an integer or \"inf\"");
        g.step = Step::infinite();
      } else {
        g.step = Step::every(step.get<int>());
      }
      if (jg.contains("near")) {
        const auto& jn = jg.at("near");
        g.distance_split = DistanceSplit{jn.value("threshold", 30.0), jn.value("step_multiplier", 2)};
      }
      d.groups.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("division config: ") + e.what());
  }
  d.validate();
  return d;
}

GroupDivision load_division(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open division file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return division_from_json(buf.str());
}

std::string division_to_json(const GroupDivision& division) {
  json j;
  j["name"] = division.name;
  j["window"] = division.window;
  j["default_group"] = division.default_group;
  json groups = json::array();
  for (const auto& g : division.groups) {
    json jg;
    jg["name"] = g.name;
    jg["classes"] = std::vector<ClassId>(g.classes.begin(), g.classes.end());
    if (g.step.is_infinite()) {
      jg["step"] = "inf";
    } else {
      jg["step"] = g.step.frames();
    }
    if (g.distance_split) {
      jg["near"] = {{"threshold", g.distance_split->threshold},
                    {"step_multiplier", g.distance_split->near_step_multiplier}};
    }
    groups.push_back(jg);
  }
  j["groups"] = groups;
  return j.dump(2) + "\n";
}

GroupDivision resolve_division(const std::string& name_or_path) {
  const auto names = division_preset_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return division_preset(name_or_path);
  }
  if (std::filesystem::is_regular_file(name_or_path)) return load_division(name_or_path);
  throw ConfigError("unknown division '" + name_or_path +
                    "'; valid presets: division1, division2, division3, division4, division5, "
                    "or a path to a division JSON file");
}

}  // namespace tlidar
