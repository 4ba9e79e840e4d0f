#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "support.hpp"
#include "tlidar/errors.hpp"
#include "tlidar/mask_distill.hpp"

using namespace tlidar;
using namespace tlidar::testing;

namespace {

VoxelFeatureMap with_features(const VoxelFeatureMap& like, const FeatureMatrix& f) {
  return VoxelFeatureMap::from_entries(like.voxel_size(), like.origin(), like.scale_level(), like.coords(), f);
}

}  // namespace

TEST_CASE("selection basics") {
  Rng rng(1);
  const auto m = random_map(rng, 200, 2, 5);
  const auto all = shared_selection(m, m);
  CHECK(all.size() == m.size());
  CHECK(all.coords == m.coords());

  const auto a = VoxelFeatureMap::from_entries(1.0, Vec3::Zero(), 0, {{0, 0, 0}}, FeatureMatrix::Zero(1, 2));
  const auto b = VoxelFeatureMap::from_entries(1.0, Vec3::Zero(), 0, {{0, 0, 1}}, FeatureMatrix::Zero(1, 2));
  CHECK(shared_selection(a, b).size() == 0);
  CHECK(distill_loss(a, b, shared_selection(a, b)) == 0.0);

  const auto other_size = VoxelFeatureMap::from_entries(0.5, Vec3::Zero(), 0, {{0, 0, 0}}, FeatureMatrix::Zero(1, 2));
  const auto other_scale = VoxelFeatureMap::from_entries(1.0, Vec3::Zero(), 1, {{0, 0, 0}}, FeatureMatrix::Zero(1, 2));
  const auto other_origin = VoxelFeatureMap::from_entries(1.0, Vec3(0.1, 0, 0), 0, {{0, 0, 0}}, FeatureMatrix::Zero(1, 2));
  CHECK_THROWS_AS(shared_selection(a, other_size), ConfigError);
  CHECK_THROWS_AS(shared_selection(a, other_scale), ConfigError);
  CHECK_THROWS_AS(shared_selection(a, other_origin), ConfigError);
}

TEST_CASE("selection equals a brute-force set intersection") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_map(rng, 150, 1, 4), t = random_map(rng, 150, 1, 4);
    std::set<VoxelCoord> ss(s.coords().begin(), s.coords().end()), both;
    for (const auto& c : t.coords()) {
      if (ss.count(c)) both.insert(c);
    }
    const auto sel = shared_selection(s, t);
    CHECK(sel.coords == std::vector<VoxelCoord>(both.begin(), both.end()));
    for (std::size_t k = 0; k < sel.size(); ++k) {
      CHECK(s.coords()[sel.student_index[k]] == sel.coords[k]);
      CHECK(t.coords()[sel.teacher_index[k]] == sel.coords[k]);
    }
  }
}

TEST_CASE("loss hand cases") {
  Rng rng(3);
  const auto m = random_map(rng, 100, 4, 4);
  CHECK(distill_loss(m, m, shared_selection(m, m)) == 0.0);

  FeatureMatrix fs(1, 2), ft(1, 2);
  fs << 4.0, 6.0;
  ft << 1.0, 2.0;
  const auto s = VoxelFeatureMap::from_entries(1.0, Vec3::Zero(), 0, {{2, 2, 2}}, fs);
  const auto t = VoxelFeatureMap::from_entries(1.0, Vec3::Zero(), 0, {{2, 2, 2}}, ft);
  CHECK(distill_loss(s, t, shared_selection(s, t)) == 5.0);
  CHECK(distill_loss(s, t, shared_selection(s, t), DistillNorm::kFrobenius) == 5.0);

  const auto wide = VoxelFeatureMap::from_entries(1.0, Vec3::Zero(), 0, {{2, 2, 2}}, FeatureMatrix::Zero(1, 3));
  CHECK_THROWS_AS(distill_loss(s, wide, shared_selection(s, wide)), ConfigError);
}

TEST_CASE("loss matches the scalar loop and its properties hold") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_map(rng, 300, 3, 5);
    const auto t = random_map(rng, 300, 3, 5);
    const double loss = distill_loss(s, t, shared_selection(s, t));
    CHECK(std::abs(loss - scalar_distill_loss(s, t)) < 1e-12);
    CHECK(loss >= 0.0);
    CHECK(distill_loss(t, s, shared_selection(t, s)) == loss);
    const double alpha = rng.uniform(-4, 4);
    const auto as = with_features(s, alpha * s.features()), at = with_features(t, alpha * t.features());
    CHECK(std::abs(distill_loss(as, at, shared_selection(as, at)) - std::abs(alpha) * loss) < 1e-12);
  }
}

TEST_CASE("triangle bound on a shared sparsity pattern") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_map(rng, 100, 3, 4);
    const auto b = with_features(a, FeatureMatrix::Random(static_cast<Eigen::Index>(a.size()), 3));
    const auto c = with_features(a, FeatureMatrix::Random(static_cast<Eigen::Index>(a.size()), 3));
    const auto sel = shared_selection(a, a);
    CHECK(distill_loss(a, c, sel) <= distill_loss(a, b, sel) + distill_loss(b, c, sel) + 1e-12);
  }
}

TEST_CASE("pairwise sum and total loss") {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * static_cast<double>(i);
  CHECK(pairwise_sum(v) == 249750.0);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  CHECK(total_loss({1.0, 2.0, 3.0, 4.0, 5.0}) == 15.0);
  CHECK(total_loss({1.0, 2.0, 3.0, 4.0, 5.0}, {0.5, 0.0, 2.0}) == 1.0 + 1.0 + 18.0);
}

TEST_CASE("frobenius mode is the global norm") {
  Rng rng(6);
  const auto s = random_map(rng, 200, 2, 4);
  const auto t = with_features(s, FeatureMatrix::Random(static_cast<Eigen::Index>(s.size()), 2));
  const double f = distill_loss(s, t, shared_selection(s, t), DistillNorm::kFrobenius);
  CHECK(std::abs(f - (s.features() - t.features()).norm()) < 1e-12);
}
