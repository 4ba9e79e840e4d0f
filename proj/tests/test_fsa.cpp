#include <doctest.h>

#include <map>

#include "support.hpp"
#include "tlidar/errors.hpp"
#include "tlidar/fsa.hpp"
#include "tlidar/synthetic.hpp"

using namespace tlidar;
using namespace tlidar::testing;

namespace {

std::vector<SequenceFrame> counted_frames(int count, int points) {
  std::vector<SequenceFrame> frames;
  for (int f = 0; f < count; ++f) {
    SequenceFrame fr;
    fr.index = f;
    fr.pose = Pose::translation(f, 0, 0);
    for (int i = 0; i < points; ++i) fr.labeled.push_back(Vec3(i, f, 1), 0.1, 1 + i % 2, 0);
    frames.push_back(std::move(fr));
  }
  return frames;
}

GroupDivision two_groups(Step a, Step b, int window) {
  GroupDivision d;
  d.name = "two";
  d.window = window;
  d.groups = {{"a", {1}, a, {}}, {"b", {2}, b, {}}};
  return d;
}

std::multiset<FrameIndex> frame_tags(const AggregatedCloud& a) {
  return {a.source_frame.begin(), a.source_frame.end()};
}

const std::vector<SequenceFrame>& kitti_frames() {
  static const auto seq = generate_synthetic(kitti_like_scene_spec(1));
  return seq.frames;
}

}  // namespace

TEST_CASE("direct aggregation with a zero window is the present frame") {
  const auto frames = counted_frames(3, 10);
  const auto out = aggregate_direct(frames, 2, 0);
  CHECK(out.labeled.cloud.xyz == frames[2].labeled.cloud.xyz);
  CHECK(out.labeled.semantic == frames[2].labeled.semantic);
  CHECK(frame_tags(out).count(2) == 10);
  CHECK(frame_tags(out).size() == 10);
}

TEST_CASE("direct aggregation counts every frame in the window") {
  const auto frames = counted_frames(3, 10);
  const auto out = aggregate_direct(frames, 2, 2);
  CHECK(out.size() == 30);
  for (FrameIndex f : {0, 1, 2}) CHECK(frame_tags(out).count(f) == 10);
  // Truncated at the sequence start.
  CHECK(aggregate_direct(frames, 1, 5).size() == 20);
  CHECK_THROWS_AS(aggregate_direct(frames, 3, 1), InvalidInputError);
  CHECK_THROWS_AS(aggregate_direct(frames, -1, 1), InvalidInputError);
}

TEST_CASE("aggregated points sit at their world positions") {
  Rng rng(12);
  const auto frames = random_frames(rng, 6, 80, {1, 2, 3});
  const auto out = aggregate_direct(frames, 5, 5);
  const Pose& present = frames[5].pose;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& src = frames[static_cast<std::size_t>(out.source_frame[i])];
    const Vec3 world_expected = src.pose.apply(src.labeled.cloud.xyz[out.source_point[i]]);
    CHECK((present.apply(out.labeled.cloud.xyz[i]) - world_expected).norm() < 1e-9);
  }
}

TEST_CASE("group masks partition the frame") {
  SequenceFrame f;
  for (ClassId c : {1, 1, 2}) f.labeled.push_back(Vec3::Zero(), 0, c, 0);
  GroupDivision single;
  single.groups = {{"all", {1, 2}, Step::every(1), {}}};
  CHECK(make_group_masks(f, single).mask(0) == std::vector<bool>{true, true, true});

  const auto m = make_group_masks(f, two_groups(Step::every(1), Step::every(2), 4));
  CHECK(m.mask(0) == std::vector<bool>{true, true, false});
  CHECK(m.mask(1) == std::vector<bool>{false, false, true});

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto frames = random_frames(rng, 1, 200, {0, 1, 2, 3, 4, 5});
    const auto div = random_division(rng, {0, 1, 2, 3, 4, 5});
    const auto masks = make_group_masks(frames[0], div);
    for (std::size_t i = 0; i < masks.point_count(); ++i) {
      int hits = 0;
      for (std::size_t k = 0; k < masks.group_count(); ++k) hits += masks.mask(k)[i];
      CHECK(hits == 1);
    }
  }
}

TEST_CASE("unmapped class without a default group names the class") {
  SequenceFrame f;
  f.labeled.push_back(Vec3::Zero(), 0, 77, 0);
  auto d = two_groups(Step::every(1), Step::every(1), 4);
  d.default_group = false;
  try {
    make_group_masks(f, d);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("77") != std::string::npos);
  }
  // With the default group the class is simply never aggregated.
  d.default_group = true;
  CHECK(make_group_masks(f, d).group_of(0) == 2);
}

TEST_CASE("group source frames follow t - i * s") {
  CHECK(source_frames(20, 16, 2, 0) == std::vector<FrameIndex>{18, 16, 14, 12, 10, 8, 6, 4});
  CHECK(source_frames(20, 16, 5, 0) == std::vector<FrameIndex>{15, 10, 5});
  CHECK(source_frames(5, 16, 2, 0) == std::vector<FrameIndex>{3, 1});
  CHECK(source_frames(5, 16, 2, 2) == std::vector<FrameIndex>{3});
  CHECK(source_frames(5, 1, 2, 0).empty());

  const auto frames = counted_frames(20, 6);
  const auto d = two_groups(Step::every(2), Step::infinite(), 16);
  const auto g0 = aggregate_group(frames, 19, d, 0);
  CHECK(std::set<FrameIndex>(g0.source_frame.begin(), g0.source_frame.end()) ==
        std::set<FrameIndex>{17, 15, 13, 11, 9, 7, 5, 3});
  CHECK(g0.size() == 8 * 3);
  CHECK(aggregate_group(frames, 19, d, 1).size() == 0);
  CHECK(aggregate_group(frames, 19, d, 2).size() == 0);  // implicit default group
  CHECK_THROWS_AS(aggregate_group(frames, 19, d, 3), ConfigError);
}

TEST_CASE("all-infinite division returns the present frame") {
  Rng rng(8);
  const auto frames = random_frames(rng, 5, 100, {1, 2});
  const auto out = aggregate_fsa(frames, 4, two_groups(Step::infinite(), Step::infinite(), 16));
  CHECK(out.labeled.cloud.xyz == frames[4].labeled.cloud.xyz);
  CHECK(out.labeled.semantic == frames[4].labeled.semantic);
}

TEST_CASE("fsa matches the concat-then-filter oracle") {
  Rng rng(21);
  const std::vector<ClassId> classes = {0, 1, 2, 3, 4, 5};
  for (int trial = 0; trial < 100; ++trial) {
    const auto frames = random_frames(rng, 2 + static_cast<int>(rng.below(8)), 300, classes);
    const auto div = random_division(rng, classes);
    const FrameIndex t = static_cast<FrameIndex>(rng.below(frames.size()));
    const auto got = aggregate_fsa(frames, t, div);
    const auto oracle = fsa_oracle(frames, t, div);
    // Present frame first, untouched.
    const auto& present = frames[static_cast<std::size_t>(t)].labeled;
    REQUIRE(got.size() >= present.size());
    for (std::size_t i = 0; i < present.size(); ++i) {
      CHECK(got.labeled.cloud.xyz[i] == present.cloud.xyz[i]);
      CHECK(got.source_frame[i] == t);
    }
    AggregatedCloud temporal;
    for (std::size_t i = present.size(); i < got.size(); ++i) {
      temporal.append(got.labeled, i, got.labeled.cloud.xyz[i], got.source_frame[i], got.source_step[i]);
      temporal.source_point.back() = got.source_point[i];
    }
    CHECK(point_multiset(temporal) == point_multiset(oracle));
    // Steps recorded per point agree with the oracle's choice.
    std::map<std::pair<FrameIndex, std::uint32_t>, int> steps;
    for (std::size_t i = 0; i < oracle.size(); ++i) steps[{oracle.source_frame[i], oracle.source_point[i]}] = oracle.source_step[i];
    for (std::size_t i = present.size(); i < got.size(); ++i) {
      CHECK(steps[{got.source_frame[i], got.source_point[i]}] == got.source_step[i]);
    }
  }
}

TEST_CASE("output order is present, then groups, then ascending i") {
  const auto frames = counted_frames(12, 4);
  const auto out = aggregate_fsa(frames, 11, two_groups(Step::every(3), Step::every(2), 8));
  std::vector<std::pair<ClassId, FrameIndex>> blocks;
  for (std::size_t i = 4; i < out.size(); ++i) {
    const std::pair<ClassId, FrameIndex> key{out.labeled.semantic[i], out.source_frame[i]};
    if (blocks.empty() || blocks.back() != key) blocks.push_back(key);
  }
  const std::vector<std::pair<ClassId, FrameIndex>> expect = {{1, 8}, {1, 5}, {2, 9}, {2, 7}, {2, 5}, {2, 3}};
  CHECK(blocks == expect);
}

TEST_CASE("distance split samples near points at the multiplied step") {
  std::vector<SequenceFrame> frames;
  for (int f = 0; f < 9; ++f) {
    SequenceFrame fr;
    fr.index = f;
    fr.labeled.push_back(Vec3(5, 0, 0), 0, 1, 0);   // near
    fr.labeled.push_back(Vec3(50, 0, 0), 0, 1, 0);  // far
    frames.push_back(fr);
  }
  GroupDivision d;
  d.window = 8;
  d.groups = {{"g", {1}, Step::every(2), DistanceSplit{30.0, 2}}};
  const auto out = aggregate_group(frames, 8, d, 0);
  std::multiset<FrameIndex> near, far;
  for (std::size_t i = 0; i < out.size(); ++i) {
    (out.source_point[i] == 0 ? near : far).insert(out.source_frame[i]);
    CHECK(out.source_step[i] == (out.source_point[i] == 0 ? 4 : 2));
  }
  CHECK(near == std::multiset<FrameIndex>{4, 0});
  CHECK(far == std::multiset<FrameIndex>{6, 4, 2, 0});
}

TEST_CASE("division presets") {
  auto steps = [](const GroupDivision& d) {
    std::vector<std::string> out;
    for (const auto& g : d.groups) out.push_back(g.step.to_string());
    return out;
  };
  const auto d1 = division_preset("division1");
  CHECK(steps(d1) == std::vector<std::string>{"inf", "4", "2"});
  CHECK(d1.window == 16);
  CHECK(steps(division_preset("division2")) == std::vector<std::string>{"inf", "4", "2"});
  CHECK(steps(division_preset("division3")) == std::vector<std::string>{"inf", "4", "2"});
  CHECK(steps(division_preset("division4")) == std::vector<std::string>{"inf", "4", "2", "8"});
  const auto d5 = division_preset("division5");
  REQUIRE(d5.groups[2].distance_split);
  CHECK(d5.groups[2].step.frames() * d5.groups[2].distance_split->near_step_multiplier == 4);
  CHECK(d5.groups[2].distance_split->threshold == 30.0);
  CHECK_FALSE(d5.groups[0].distance_split);
  for (const auto& name : division_preset_names()) {
    const auto d = division_preset(name);
    CHECK(d.window == 16);
    CHECK(d.group_of(10) == std::optional<std::size_t>(0));  // car is easy everywhere
    CHECK(d.group_of(0) == std::optional<std::size_t>(d.groups.size()));
  }
  // division3 moves other-ground and terrain out of the step-2 group.
  CHECK(d1.group_of(49) == std::optional<std::size_t>(2));
  CHECK(division_preset("division3").group_of(49) == std::optional<std::size_t>(1));
  CHECK_THROWS_AS(division_preset("division9"), ConfigError);
  CHECK_THROWS_AS(resolve_division("nope"), ConfigError);
}

TEST_CASE("division json round trip and validation") {
  for (const auto& name : division_preset_names()) {
    const auto d = division_preset(name);
    const auto back = division_from_json(division_to_json(d));
    CHECK(back.name == d.name);
    REQUIRE(back.groups.size() == d.groups.size());
    for (std::size_t k = 0; k < d.groups.size(); ++k) {
      CHECK(back.groups[k].classes == d.groups[k].classes);
      CHECK(back.groups[k].step == d.groups[k].step);
      CHECK(back.groups[k].distance_split.has_value() == d.groups[k].distance_split.has_value());
    }
  }
  CHECK_THROWS_AS(division_from_json(R"({"groups":[{"classes":[1],"step":2},{"classes":[1],"step":4}]})"), ConfigError);
  CHECK_THROWS_AS(division_from_json(R"({"groups":[{"classes":[1],"step":0}]})"), ConfigError);
  CHECK_THROWS_AS(division_from_json(R"({"window":0,"groups":[]})"), ConfigError);
  CHECK_THROWS_AS(division_from_json(R"({"groups":[{"classes":[1],"step":"never"}]})"), ConfigError);
  CHECK_THROWS_AS(division_from_json("not json"), ConfigError);
}

TEST_CASE("counting formula on a kitti-like scene") {
  const auto& frames = kitti_frames();
  const auto d = division_preset("division3");
  const FrameIndex t = 30;
  const auto out = aggregate_fsa(frames, t, d);
  std::size_t expect = frames[t].labeled.size();
  for (std::size_t k = 0; k < d.groups.size(); ++k) {
    if (d.groups[k].step.is_infinite()) continue;
    const auto n = static_cast<std::size_t>(d.window / d.groups[k].step.frames());
    std::size_t per_group = 0;
    for (std::size_t i = 1; i <= n; ++i) {
      per_group += make_group_masks(frames[t - static_cast<FrameIndex>(i) * d.groups[k].step.frames()], d).population(k);
    }
    CHECK(aggregate_group(frames, t, d, k).size() == per_group);
    expect += per_group;
  }
  CHECK(out.size() == expect);
}

TEST_CASE("fsa is a subset of direct") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto frames = random_frames(rng, 8, 150, {1, 2, 3, 4});
    const auto div = random_division(rng, {1, 2, 3, 4});
    const auto fsa = point_multiset(aggregate_fsa(frames, 7, div));
    const auto direct = point_multiset(aggregate_direct(frames, 7, div.window));
    CHECK(std::includes(direct.begin(), direct.end(), fsa.begin(), fsa.end()));
  }
}

TEST_CASE("smaller steps never shrink the output for fixed masks") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    // Same local points and labels in every frame, so masks are fixed.
    auto frames = random_frames(rng, 10, 100, {1, 2, 3});
    for (auto& f : frames) f.labeled = frames[0].labeled;
    auto div = random_division(rng, {1, 2, 3});
    std::size_t k = rng.below(div.groups.size());
    if (div.groups[k].step.is_infinite()) div.groups[k].step = Step::every(5);
    const std::size_t before = aggregate_fsa(frames, 9, div).size();
    div.groups[k].step = Step::every(std::max(1, div.groups[k].step.frames() - 1));
    CHECK(aggregate_fsa(frames, 9, div).size() >= before);
  }
}

TEST_CASE("group order does not change geometry") {
  Rng rng(51);
  const auto frames = random_frames(rng, 8, 150, {1, 2, 3, 4});
  auto div = random_division(rng, {1, 2, 3, 4});
  const auto a = point_multiset(aggregate_fsa(frames, 7, div));
  std::reverse(div.groups.begin(), div.groups.end());
  const auto b = point_multiset(aggregate_fsa(frames, 7, div));
  CHECK(a == b);
}

TEST_CASE("pseudo masks from corrupted labels") {
  const auto& frames = kitti_frames();
  const auto d = division_preset("division3");
  std::vector<SequenceFrame> clean, noisy;
  std::map<FrameIndex, std::vector<ClassId>> noisy_labels;
  for (const auto& f : frames) {
    clean.push_back(corrupt_labels(f, 0.0, 5));
    noisy.push_back(corrupt_labels(f, 0.2, 5));
    noisy_labels[f.index] = noisy.back().labeled.semantic;
  }
  CHECK(point_multiset(aggregate_fsa(frames, 25, d, clean)) == point_multiset(aggregate_fsa(frames, 25, d)));
  const auto pseudo = aggregate_fsa(frames, 25, d, noisy);
  AggregatedCloud temporal;
  for (std::size_t i = frames[25].labeled.size(); i < pseudo.size(); ++i) {
    temporal.append(pseudo.labeled, i, pseudo.labeled.cloud.xyz[i], pseudo.source_frame[i], pseudo.source_step[i]);
    temporal.source_point.back() = pseudo.source_point[i];
  }
  CHECK(point_multiset(temporal) == point_multiset(fsa_oracle(frames, 25, d, noisy_labels)));
  // Emitted labels stay ground truth.
  for (std::size_t i = 0; i < pseudo.size(); ++i) {
    const auto& src = frames[static_cast<std::size_t>(pseudo.source_frame[i])].labeled;
    CHECK(pseudo.labeled.semantic[i] == src.semantic[pseudo.source_point[i]]);
  }
  std::vector<SequenceFrame> short_masks(noisy.begin(), noisy.end());
  short_masks[20].labeled.semantic.pop_back();
  short_masks[20].labeled.instance.pop_back();
  short_masks[20].labeled.cloud.xyz.pop_back();
  short_masks[20].labeled.cloud.intensity.pop_back();
  CHECK_THROWS_AS(aggregate_fsa(frames, 24, d, short_masks), InvalidInputError);
}

TEST_CASE("frames must be sorted and unique") {
  auto frames = counted_frames(3, 2);
  std::swap(frames[0], frames[1]);
  CHECK_THROWS_AS(aggregate_direct(frames, 2, 2), InvalidInputError);
}
