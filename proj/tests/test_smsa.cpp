#include <doctest.h>

#include "support.hpp"
#include "tlidar/errors.hpp"
#include "tlidar/smsa.hpp"
#include "tlidar/synthetic.hpp"

using namespace tlidar;
using namespace tlidar::testing;

TEST_CASE("track extraction") {
  Rng rng(1);
  const auto agg = track_cloud(rng, 3, Vec3(1, 0, 0));
  const auto track = extract_track(agg, 5);
  REQUIRE(track.parts.size() == 3);
  CHECK(track.class_id == 10);
  CHECK(track.parts[0].frame == 100);  // most recent first
  CHECK(track.parts[2].frame == 98);
  for (const auto& part : track.parts) {
    Vec3 sum = Vec3::Zero();
    for (const auto& p : part.points.xyz) sum += p;
    CHECK((part.centroid - sum / static_cast<double>(part.points.size())).norm() < 1e-12);
    for (std::size_t j = 0; j < part.rows.size(); ++j) CHECK(agg.labeled.cloud.xyz[part.rows[j]] == part.points.xyz[j]);
  }
  CHECK((adjacent_offset(track) - Vec3(-1, 0, 0)).norm() < 1e-12);
  CHECK(instance_ids(agg) == std::vector<InstanceId>{5});
  CHECK_THROWS_AS(extract_track(agg, 6), NotAugmentableError);
  const auto single = track_cloud(rng, 1, Vec3::Zero());
  CHECK_THROWS_AS(extract_track(single, 5), NotAugmentableError);
}

TEST_CASE("motion classification") {
  Rng rng(2);
  CHECK(classify_motion(extract_track(track_cloud(rng, 4, Vec3::Zero()), 5), 0.1) == MotionState::kStatic);
  CHECK(classify_motion(extract_track(track_cloud(rng, 4, Vec3(1, 0, 0)), 5), 0.1) == MotionState::kMoving);
}

TEST_CASE("generator kinematics are recovered from aggregated tracks") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto seq = generate_synthetic(kitti_like_scene_spec(seed));
    const auto agg = aggregate_direct(seq.frames, 30, 8);
    CHECK(classify_motion(extract_track(agg, 1)) == MotionState::kStatic);
    CHECK(classify_motion(extract_track(agg, 2)) == MotionState::kStatic);
    const auto mover = extract_track(agg, 3);
    CHECK(classify_motion(mover) == MotionState::kMoving);
    // Constant velocity: consecutive offsets agree.
    for (std::size_t i = 0; i + 1 < mover.parts.size(); ++i) {
      const Vec3 d = mover.parts[i].centroid - mover.parts[i + 1].centroid;
      CHECK((d - adjacent_offset(mover)).norm() < 1e-9);
    }
  }
}

TEST_CASE("moving to static collapses every part onto the present centroid") {
  Rng rng(3);
  const auto track = extract_track(track_cloud(rng, 3, Vec3(1, 0, 0)), 5);
  const auto out = moving_to_static(track);
  for (const auto& p : out.parts) {
    CHECK((p.centroid - track.parts[0].centroid).norm() < 1e-9);
  }
  for (std::size_t k = 0; k < 3; ++k) CHECK(out.parts[k].points.size() == track.parts[k].points.size());
  CHECK(max_centroid_spread(out) < 1e-9);
  CHECK(rigid(track, out));
  CHECK_THROWS_AS(moving_to_static(out), NotAugmentableError);
}

TEST_CASE("static to moving on a single empty anchor") {
  Rng rng(4);
  const auto track = extract_track(track_cloud(rng, 4, Vec3::Zero()), 5);
  AnchorSet one{{Vec3::Zero()}, 2.0};
  StaticToMovingOptions opts;
  opts.speed = {0.5, 0.5};
  const auto out = static_to_moving(track, {}, one, 1, opts);
  CHECK((out.parts[0].centroid - Vec3::Zero()).norm() < 1e-9);
  for (std::size_t i = 0; i + 1 < out.parts.size(); ++i) {
    const Vec3 d = out.parts[i + 1].centroid - out.parts[i].centroid;
    CHECK(std::abs(d.norm() - 0.5) < 1e-9);
    CHECK(std::abs(d.y()) < 1e-12);  // the box is longer along x
  }
  CHECK(classify_motion(out) == MotionState::kMoving);
  CHECK_THROWS_AS(static_to_moving(out, {}, one, 1, opts), NotAugmentableError);
  opts.speed = {1.0, 0.5};
  CHECK_THROWS_AS(static_to_moving(track, {}, one, 1, opts), ConfigError);
  opts.speed = {0.0, 0.0};
  CHECK_THROWS_AS(static_to_moving(track, {}, one, 1, opts), ConfigError);
}

TEST_CASE("anchor with the fewest covered points wins") {
  AnchorSet two{{Vec3(0, 0, 0), Vec3(10, 0, 0)}, 2.0};
  std::vector<Vec3> crowded;
  Rng rng(5);
  for (int i = 0; i < 100; ++i) crowded.push_back(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-5, 5)));
  CHECK(choose_anchor(two, crowded) == 1);
  CHECK(choose_anchor(two, {}) == 0);  // tie -> lowest index
  crowded.push_back(Vec3(10.5, 0, 100));  // vertical cylinder ignores height
  CHECK(choose_anchor(two, crowded) == 1);
  const auto ring = anchor_ring(Vec3(1, 2, 3), 3.0, 8, 2.0);
  CHECK(ring.anchors.size() == 8);
  for (const auto& a : ring.anchors) CHECK(std::abs((a - Vec3(1, 2, 3)).norm() - 3.0) < 1e-12);
  CHECK_THROWS_AS(AnchorSet{}.validate(), ConfigError);
  CHECK_THROWS_AS((AnchorSet{{Vec3::Zero()}, 0.0}).validate(), ConfigError);
}

TEST_CASE("direction rules") {
  InstanceTrack t;
  TrackPart p;
  p.points.push_back(Vec3(0, 0, 0), 0);
  p.points.push_back(Vec3(1, 3, 5), 0);
  t.parts = {p, p};
  CHECK(motion_axis(t) == Vec3::UnitY());
  CHECK(motion_axis(t, DirectionRule::kWidthVsHeight) == Vec3::UnitY());
  t.parts[0].points.xyz[1] = Vec3(4, 3, 1);
  t.parts[1] = t.parts[0];
  CHECK(motion_axis(t) == Vec3::UnitX());
  CHECK(motion_axis(t, DirectionRule::kWidthVsHeight) == Vec3::UnitX());
}

TEST_CASE("switch contracts over random tracks") {
  Rng rng(6);
  const auto table = ClassPairTable::semantic_kitti();
  for (int trial = 0; trial < 100; ++trial) {
    const int parts = 2 + static_cast<int>(rng.below(8));
    const bool moving = rng.coin();
    const Vec3 step = moving ? Vec3(rng.uniform(0.3, 1.5), rng.uniform(-0.5, 0.5), 0) : Vec3::Zero();
    const auto agg = track_cloud(rng, parts, step, 5, moving ? 252 : 10);
    const auto track = extract_track(agg, 5);
    InstanceTrack out;
    MotionState target;
    if (moving) {
      out = moving_to_static(track);
      target = MotionState::kStatic;
      CHECK(max_centroid_spread(out) < 1e-9);
    } else {
      const auto anchors = anchor_ring(track.parts[0].centroid);
      const auto scene = scene_without_track(agg, track);
      const std::uint64_t seed = rng.next_u64();
      out = static_to_moving(track, scene, anchors, seed);
      const auto again = static_to_moving(track, scene, anchors, seed);
      for (std::size_t k = 0; k < out.parts.size(); ++k) CHECK(out.parts[k].points.xyz == again.parts[k].points.xyz);
      target = MotionState::kMoving;
      const Vec3 d = out.parts[0].centroid - out.parts[1].centroid;
      for (std::size_t i = 0; i + 1 < out.parts.size(); ++i) {
        CHECK((out.parts[i].centroid - out.parts[i + 1].centroid - d).norm() < 1e-9);
      }
      CHECK(d.norm() >= 0.2 - 1e-12);
      CHECK(d.norm() <= 1.0 + 1e-12);
      CHECK(classify_motion(out) == MotionState::kMoving);
      // Round trip collapses back to one point.
      CHECK(max_centroid_spread(moving_to_static(out)) < 1e-9);
    }
    CHECK(rigid(track, out));
    const auto switched = apply_switch(agg, track, out, table, target);
    REQUIRE(switched.size() == agg.size());
    std::vector<bool> in_track(agg.size(), false);
    for (const auto& p : track.parts)
      for (std::size_t r : p.rows) in_track[r] = true;
    for (std::size_t i = 0; i < agg.size(); ++i) {
      if (in_track[i]) {
        CHECK(switched.labeled.semantic[i] == (moving ? 10u : 252u));
        continue;
      }
      CHECK(switched.labeled.cloud.xyz[i] == agg.labeled.cloud.xyz[i]);
      CHECK(switched.labeled.semantic[i] == agg.labeled.semantic[i]);
      CHECK(switched.labeled.instance[i] == agg.labeled.instance[i]);
      CHECK(switched.labeled.cloud.intensity[i] == agg.labeled.cloud.intensity[i]);
    }
  }
}

TEST_CASE("apply_switch identity and errors") {
  Rng rng(7);
  const auto agg = track_cloud(rng, 3, Vec3::Zero());
  const auto track = extract_track(agg, 5);
  const auto same = apply_switch(agg, track, track, ClassPairTable::semantic_kitti(), MotionState::kStatic);
  CHECK(point_multiset(same) == point_multiset(agg));
  CHECK_THROWS_AS(apply_switch(agg, track, track, ClassPairTable({{1, 2}}), MotionState::kStatic), ConfigError);
  auto shorter = track;
  shorter.parts.pop_back();
  CHECK_THROWS_AS(apply_switch(agg, track, shorter, ClassPairTable::semantic_kitti(), MotionState::kStatic),
                  InvalidInputError);
}

TEST_CASE("class pair table") {
  const auto t = ClassPairTable::semantic_kitti();
  CHECK(t.variant(10, MotionState::kMoving) == 252);
  CHECK(t.variant(252, MotionState::kStatic) == 10);
  CHECK(t.variant(30, MotionState::kStatic) == 30);
  CHECK_THROWS_AS(t.variant(40, MotionState::kMoving), ConfigError);
  const auto back = ClassPairTable::from_json(t.to_json());
  CHECK(back.pairs() == t.pairs());
  CHECK_THROWS_AS(ClassPairTable::from_json(R"({"pairs":[{"static":1,"moving":2},{"static":2,"moving":3}]})"), ConfigError);
  CHECK_THROWS_AS(ClassPairTable::from_json("[]"), ConfigError);
}
