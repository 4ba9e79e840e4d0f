#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "tlidar/geometry.hpp"

namespace tlidar {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct VoxelCoord {
  std::int32_t x = 0, y = 0, z = 0;

  friend auto operator<=>(const VoxelCoord&, const VoxelCoord&) = default;
  VoxelCoord operator+(const VoxelCoord& o) const { return {x + o.x, y + o.y, z + o.z}; }
};

struct VoxelCoordHash {
  std::size_t operator()(const VoxelCoord& c) const noexcept {
    // Teschner et al. spatial hash primes.
    return (static_cast<std::size_t>(static_cast<std::uint32_t>(c.x)) * 73856093u) ^
           (static_cast<std::size_t>(static_cast<std::uint32_t>(c.y)) * 19349669u) ^
           (static_cast<std::size_t>(static_cast<std::uint32_t>(c.z)) * 83492791u);
  }
};

/// floor(a / 2) for negative coordinates too.
inline std::int32_t floor_half(std::int32_t a) { return a >= 0 ? a / 2 : -((-a + 1) / 2); }

/// Sparse voxel grid: integer coordinates -> fixed-width feature rows.
/// Entries are kept in ascending coordinate order; voxel (c) spans
/// [origin + c * size, origin + (c + 1) * size) and has its center at +0.5.
class VoxelFeatureMap {
 public:
  VoxelFeatureMap(double voxel_size, const Vec3& origin, int width, int scale_level = 0);

  /// Throws InvalidInputError on duplicate coordinates or width mismatch.
  static VoxelFeatureMap from_entries(double voxel_size, const Vec3& origin, int scale_level,
                                      std::vector<VoxelCoord> coords, const FeatureMatrix& features);

  double voxel_size() const { return voxel_size_; }
  const Vec3& origin() const { return origin_; }
  int width() const { return width_; }
  int scale_level() const { return scale_level_; }
  std::size_t size() const { return coords_.size(); }
  bool empty() const { return coords_.empty(); }

  const std::vector<VoxelCoord>& coords() const { return coords_; }
  const FeatureMatrix& features() const { return features_; }
  auto feature(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)); }

  std::optional<std::size_t> find(const VoxelCoord& c) const;
  bool contains(const VoxelCoord& c) const { return index_.count(c) != 0; }

  VoxelCoord coord_of(const Vec3& p) const;
  Vec3 center(const VoxelCoord& c) const;

  /// Same voxel size, origin, and scale level.
  bool same_grid(const VoxelFeatureMap& other) const;

 private:
  double voxel_size_;
  Vec3 origin_;
  int width_;
  int scale_level_;
  std::vector<VoxelCoord> coords_;
  FeatureMatrix features_;
  std::unordered_map<VoxelCoord, std::uint32_t, VoxelCoordHash> index_;
};

inline constexpr double kDefaultVoxelSize = 0.05;

/// Mean-reduces per-point features into voxels of `voxel_size`.
VoxelFeatureMap voxelize(std::span<const Vec3> points, const FeatureMatrix& features,
                         double voxel_size, const Vec3& origin = Vec3::Zero());

/// Halves coordinates (floor), mean-reduces, doubles the voxel size.
VoxelFeatureMap downsample(const VoxelFeatureMap& map);

/// Eight voxel centers around a query with raw trilinear weights.
struct TrilinearStencil {
  std::array<VoxelCoord, 8> corners;
  std::array<double, 8> weights;
};
TrilinearStencil trilinear_stencil(const VoxelFeatureMap& map, const Vec3& query);

/// Trilinear interpolation renormalized over occupied corners that carry a
/// positive weight. Queries without such a corner get the zero vector.
FeatureMatrix gather_trilinear(const VoxelFeatureMap& map, std::span<const Vec3> queries);

/// Dense 3x3x3 kernel with taps[offset][out][in].
struct FixedKernel {
  int in_channels = 0;
  int out_channels = 0;
  std::vector<double> taps;  // 27 * out * in

  static constexpr int kTaps = 27;

  /// Offset index of (dx, dy, dz) in [-1, 1]^3.
  static constexpr int offset_index(int dx, int dy, int dz) {
    return (dx + 1) * 9 + (dy + 1) * 3 + (dz + 1);
  }
  double& at(int offset, int out, int in) {
    return taps[static_cast<std::size_t>((offset * out_channels + out) * in_channels + in)];
  }
  double at(int offset, int out, int in) const {
    return taps[static_cast<std::size_t>((offset * out_channels + out) * in_channels + in)];
  }

  static FixedKernel zeros(int in_channels, int out_channels);
  /// Center tap identity, all other taps zero.
  static FixedKernel identity(int channels);
  /// Uniform taps in [-scale, scale]; scale defaults to 1 / (27 * in_channels).
  static FixedKernel random(int in_channels, int out_channels, std::uint64_t seed,
                            double scale = 0.0);
};

/// Submanifold convolution: output occupancy equals input occupancy; each
/// output row is sum over occupied neighbors x+d of taps[d] * f(x+d).
VoxelFeatureMap apply_fixed_kernel(const VoxelFeatureMap& map, const FixedKernel& kernel);

/// Binary dump: "TLVXMAP1", f64 voxel_size, f64 origin[3], i32 scale_level,
/// u32 width, u64 count, count * i32[3] coords, count * width f64 features.
/// All little-endian.
void write_voxel_map(const std::filesystem::path& path, const VoxelFeatureMap& map);
VoxelFeatureMap read_voxel_map(const std::filesystem::path& path);

}  // namespace tlidar
