#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tlidar/fsa.hpp"
#include "tlidar/sequence_io.hpp"
#include "tlidar/voxel_grid.hpp"

namespace tlidar {

/// H x W x C per-pixel features, row-major with channels innermost.
struct ImageFeatureMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  ImageFeatureMap() = default;
  ImageFeatureMap(int width, int height, int channels);
  static ImageFeatureMap constant(int width, int height, std::span<const double> value);

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Channel 0 = u / W, channel 1 = v / H, further channels seeded per frame.
/// Stand-in for backbone features when no images are supplied.
ImageFeatureMap synthetic_feature_image(const CameraCalib& calib, int channels, FrameIndex frame,
                                        std::uint64_t seed);

inline constexpr double kDefaultZMin = 0.1;

struct ImageProjection {
  std::vector<Eigen::Vector2d> pixel;  // (u, v)
  std::vector<double> depth;           // camera z
  std::vector<bool> in_fov;

  std::size_t in_fov_count() const;
};

/// p_cam = extrinsic * p; u = fx x/z + cx, v = fy y/z + cy.
/// In FOV iff z > z_min and 0 <= u < W and 0 <= v < H.
ImageProjection project_to_image(const PointCloud& cloud, const CameraCalib& calib,
                                 double z_min = kDefaultZMin);

enum class PixelSampling { kNearest, kBilinear };

struct LiftOptions {
  double z_min = kDefaultZMin;
  PixelSampling sampling = PixelSampling::kNearest;
};

/// Point-wise image features. Coordinates are in the frame named by the
/// producing call (own frame for lift_features, present frame after
/// aggregation).
struct PointImageFeatures {
  std::vector<Vec3> points;
  FeatureMatrix features;
  std::vector<FrameIndex> source_frame;
  std::vector<std::uint32_t> source_point;

  std::size_t size() const { return points.size(); }
};

PointImageFeatures lift_features(const SequenceFrame& frame, const ImageFeatureMap& image,
                                 const CameraCalib& calib, const LiftOptions& options = {});

inline constexpr int kDefaultImageStep = 12;
inline constexpr int kDefaultImageWindow = 48;

/// Present-frame lift followed by lifts at o_i = t - i * step (i = 1..floor(window/step)),
/// each transformed into frame t. `images` is parallel to `frames`.
PointImageFeatures aggregate_image_features(std::span<const SequenceFrame> frames,
                                            std::span<const ImageFeatureMap> images,
                                            const CameraCalib& calib, FrameIndex t,
                                            int step = kDefaultImageStep,
                                            int window = kDefaultImageWindow,
                                            const LiftOptions& options = {});

struct FuseOptions {
  int scales = 3;
  double voxel_size = kDefaultVoxelSize;
  std::uint64_t seed = 0;
  bool identity_kernel = false;
};

/// Kernel used at `scale` by fuse_to_voxels.
FixedKernel fusion_kernel(int channels, int scale, const FuseOptions& options);

/// voxelize + kernel, then (scales - 1) rounds of downsample + kernel.
std::vector<VoxelFeatureMap> fuse_to_voxels(const PointImageFeatures& aggregated,
                                            const FuseOptions& options = {});

/// Per temporal LiDAR point, trilinear gathers from every scale concatenated
/// in scale order (width = scales * C).
FeatureMatrix temporal_multimodal_gather(const AggregatedCloud& lidar,
                                         std::span<const VoxelFeatureMap> fused);

/// Sparse 2D supervision target.
struct LabelImage {
  static constexpr ClassId kIgnore = 0xFFFFFFFFu;

  int width = 0;
  int height = 0;
  std::vector<ClassId> labels;  // kIgnore where no point landed
  std::vector<double> depth;

  ClassId at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t labeled_count() const;
};

/// Nearest-depth point wins each pixel.
LabelImage project_labels_to_image(const SequenceFrame& frame, const CameraCalib& calib,
                                   double z_min = kDefaultZMin);

/// Rounded pixel index, clamped into the image.
Eigen::Vector2i nearest_pixel(const Eigen::Vector2d& uv, int width, int height);

}  // namespace tlidar
