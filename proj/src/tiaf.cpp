#include "tlidar/tiaf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tlidar/errors.hpp"
#include "tlidar/random.hpp"

namespace tlidar {

ImageFeatureMap::ImageFeatureMap(int width, int height, int channels)
    : width(width), height(height), channels(channels) {
  if (width <= 0 || height <= 0 || channels <= 0) {
    throw InvalidInputError("image dimensions must be positive");
  }
  data.assign(static_cast<std::size_t>(width) * height * channels, 0.0);
}

ImageFeatureMap ImageFeatureMap::constant(int width, int height, std::span<const double> value) {
  ImageFeatureMap img(width, height, static_cast<int>(value.size()));
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = value[i % value.size()];
  return img;
}

ImageFeatureMap synthetic_feature_image(const CameraCalib& calib, int channels, FrameIndex frame,
                                        std::uint64_t seed) {
  ImageFeatureMap img(calib.width, calib.height, channels);
  Rng rng(seed ^ (0xA24BAED4963EE407ull * static_cast<std::uint64_t>(frame + 1)));
  std::vector<double> extra(static_cast<std::size_t>(channels), 0.0);
  for (auto& e : extra) e = rng.uniform();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(x, y, c) = c == 0   ? static_cast<double>(x) / img.width
                          : c == 1 ? static_cast<double>(y) / img.height
                                   : extra[static_cast<std::size_t>(c)];
      }
    }
  }
  return img;
}

std::size_t ImageProjection::in_fov_count() const {
  std::size_t n = 0;
  for (bool b : in_fov) n += b ? 1 : 0;
  return n;
}

ImageProjection project_to_image(const PointCloud& cloud, const CameraCalib& calib, double z_min) {
  calib.validate();
  ImageProjection out;
  out.pixel.reserve(cloud.size());
  out.depth.reserve(cloud.size());
  out.in_fov.reserve(cloud.size());
  for (const auto& p : cloud.xyz) {
    const Vec3 c = calib.extrinsic.apply(p);
    const double z = c.z();
    Eigen::Vector2d uv(std::nan(""), std::nan(""));
    bool inside = false;
    if (z > z_min) {
      uv = Eigen::Vector2d(calib.fx * c.x() / z + calib.cx, calib.fy * c.y() / z + calib.cy);
      inside = uv.x() >= 0.0 && uv.x() < calib.width && uv.y() >= 0.0 && uv.y() < calib.height;
    }
    out.pixel.push_back(uv);
    out.depth.push_back(z);
    out.in_fov.push_back(inside);
  }
  return out;
}

Eigen::Vector2i nearest_pixel(const Eigen::Vector2d& uv, int width, int height) {
  const int x = std::min(static_cast<int>(std::floor(uv.x() + 0.5)), width - 1);
  const int y = std::min(static_cast<int>(std::floor(uv.y() + 0.5)), height - 1);
  return {std::max(x, 0), std::max(y, 0)};
}

namespace {

void sample_bilinear(const ImageFeatureMap& img, const Eigen::Vector2d& uv,
                     Eigen::Ref<Eigen::RowVectorXd> out) {
  const double u = std::clamp(uv.x(), 0.0, img.width - 1.0);
  const double v = std::clamp(uv.y(), 0.0, img.height - 1.0);
  const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double fx = u - x0, fy = v - y0;
  for (int c = 0; c < img.channels; ++c) {
    out(c) = (1 - fx) * (1 - fy) * img.at(x0, y0, c) + fx * (1 - fy) * img.at(x1, y0, c) +
             (1 - fx) * fy * img.at(x0, y1, c) + fx * fy * img.at(x1, y1, c);
  }
}

void append(PointImageFeatures& dst, const PointImageFeatures& src, const Pose& pose) {
  const auto offset = static_cast<Eigen::Index>(dst.size());
  dst.features.conservativeResize(offset + static_cast<Eigen::Index>(src.size()),
                                  src.features.cols());
  dst.features.bottomRows(static_cast<Eigen::Index>(src.size())) = src.features;
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst.points.push_back(pose.apply(src.points[i]));
    dst.source_frame.push_back(src.source_frame[i]);
    dst.source_point.push_back(src.source_point[i]);
  }
}

}  // namespace

PointImageFeatures lift_features(const SequenceFrame& frame, const ImageFeatureMap& image,
                                 const CameraCalib& calib, const LiftOptions& options) {
  if (image.width != calib.width || image.height != calib.height) {
    throw ConfigError("image is " + std::to_string(image.width) + "x" +
                      std::to_string(image.height) + " but calibration expects " +
                      std::to_string(calib.width) + "x" + std::to_string(calib.height));
  }
  const auto& cloud = frame.labeled.cloud;
  const ImageProjection proj = project_to_image(cloud, calib, options.z_min);
  const std::size_t m = proj.in_fov_count();
  PointImageFeatures out;
  out.points.reserve(m);
  out.features.resize(static_cast<Eigen::Index>(m), image.channels);
  std::size_t row = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!proj.in_fov[i]) continue;
    auto dst = out.features.row(static_cast<Eigen::Index>(row));
    if (options.sampling == PixelSampling::kNearest) {
      const auto px = nearest_pixel(proj.pixel[i], image.width, image.height);
      for (int c = 0; c < image.channels; ++c) dst(c) = image.at(px.x(), px.y(), c);
    } else {
      sample_bilinear(image, proj.pixel[i], dst);
    }
    out.points.push_back(cloud.xyz[i]);
    out.source_frame.push_back(frame.index);
    out.source_point.push_back(static_cast<std::uint32_t>(i));
    ++row;
  }
  return out;
}

PointImageFeatures aggregate_image_features(std::span<const SequenceFrame> frames,
                                            std::span<const ImageFeatureMap> images,
                                            const CameraCalib& calib, FrameIndex t, int step,
                                            int window, const LiftOptions& options) {
  if (step < 1) throw InvalidInputError("image step must be >= 1");
  if (window < 0) throw InvalidInputError("image window must be >= 0");
  if (images.size() != frames.size()) {
    throw ConfigError("need one image per frame: " + std::to_string(frames.size()) + " frames, " +
                      std::to_string(images.size()) + " images");
  }
  const FrameWindow win(frames);
  const auto image_of = [&](FrameIndex idx) -> const ImageFeatureMap& {
    return images[static_cast<std::size_t>(&win.at(idx) - frames.data())];
  };
  const auto* present = win.find(t);
  if (!present) throw InvalidInputError("present frame " + std::to_string(t) + " out of range");

  PointImageFeatures out = lift_features(*present, image_of(t), calib, options);
  for (FrameIndex o : source_frames(t, window, step, win.first_index())) {
    const PointImageFeatures lifted = lift_features(win.at(o), image_of(o), calib, options);
    append(out, lifted, win.relative_pose(t, o));
  }
  return out;
}

FixedKernel fusion_kernel(int channels, int scale, const FuseOptions& options) {
  if (options.identity_kernel) return FixedKernel::identity(channels);
  return FixedKernel::random(channels, channels,
                             options.seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(scale + 1)));
}

std::vector<VoxelFeatureMap> fuse_to_voxels(const PointImageFeatures& aggregated,
                                            const FuseOptions& options) {
  if (options.scales < 1) throw ConfigError("scales must be >= 1");
  const int channels = static_cast<int>(aggregated.features.cols());
  std::vector<VoxelFeatureMap> out;
  VoxelFeatureMap level = voxelize(aggregated.points, aggregated.features, options.voxel_size);
  out.push_back(apply_fixed_kernel(level, fusion_kernel(channels, 0, options)));
  for (int s = 1; s < options.scales; ++s) {
    level = downsample(out.back());
    out.push_back(apply_fixed_kernel(level, fusion_kernel(channels, s, options)));
  }
  return out;
}

FeatureMatrix temporal_multimodal_gather(const AggregatedCloud& lidar,
                                         std::span<const VoxelFeatureMap> fused) {
  if (fused.empty()) return FeatureMatrix(static_cast<Eigen::Index>(lidar.size()), 0);
  const int width = fused.front().width();
  for (const auto& m : fused) {
    if (m.width() != width) throw ConfigError("fused maps must share one feature width");
  }
  FeatureMatrix out(static_cast<Eigen::Index>(lidar.size()),
                    static_cast<Eigen::Index>(fused.size()) * width);
  const auto& points = lidar.labeled.cloud.xyz;
  for (std::size_t s = 0; s < fused.size(); ++s) {
    out.middleCols(static_cast<Eigen::Index>(s) * width, width) =
        gather_trilinear(fused[s], points);
  }
  return out;
}

std::size_t LabelImage::labeled_count() const {
  std::size_t n = 0;
  for (ClassId l : labels) n += l != kIgnore ? 1 : 0;
  return n;
}

LabelImage project_labels_to_image(const SequenceFrame& frame, const CameraCalib& calib,
                                   double z_min) {
  const ImageProjection proj = project_to_image(frame.labeled.cloud, calib, z_min);
  LabelImage img;
  img.width = calib.width;
  img.height = calib.height;
  const auto pixels = static_cast<std::size_t>(calib.width) * calib.height;
  img.labels.assign(pixels, LabelImage::kIgnore);
  img.depth.assign(pixels, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < proj.in_fov.size(); ++i) {
    if (!proj.in_fov[i]) continue;
    const auto px = nearest_pixel(proj.pixel[i], img.width, img.height);
    const auto slot = static_cast<std::size_t>(px.y()) * img.width + px.x();
    if (proj.depth[i] < img.depth[slot]) {
      img.depth[slot] = proj.depth[i];
      img.labels[slot] = frame.labeled.semantic[i];
    }
  }
  return img;
}

}  // namespace tlidar
