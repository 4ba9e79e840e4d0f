#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tlidar/geometry.hpp"

namespace tlidar {

using FrameIndex = std::int64_t;

inline constexpr double kFramePeriodSeconds = 0.1;

/// One LiDAR scan with its labels and LiDAR-to-world pose.
struct SequenceFrame {
  FrameIndex index = 0;
  LabeledCloud labeled;
  Pose pose;
  double timestamp = 0.0;
  // Camera-frame pose exactly as read from poses.txt. write_sequence() reuses
  // it while it still agrees with `pose`, so rewriting a loaded sequence does
  // not perturb the file.
  std::optional<std::array<double, 12>> stored_pose_rows;
};

/// Pinhole camera: intrinsics from the P2 projection, extrinsic from Tr.
struct CameraCalib {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  Pose extrinsic;  // LiDAR -> camera
  int width = 0, height = 0;
  std::array<double, 12> projection_rows{};  // P2 as stored
  std::array<double, 12> extrinsic_rows{};   // Tr as stored

  static constexpr int kDefaultWidth = 1241;
  static constexpr int kDefaultHeight = 376;

  static CameraCalib from_rows(const std::array<double, 12>& p2, const std::array<double, 12>& tr,
                               int width, int height);
  static CameraCalib pinhole(double fx, double fy, double cx, double cy, const Pose& extrinsic,
                             int width, int height);

  void validate() const;
};

struct Sequence {
  CameraCalib calib;
  std::vector<SequenceFrame> frames;
};

/// Inclusive frame range; `last < 0` means "through the final frame".
struct FrameRange {
  FrameIndex first = 0;
  FrameIndex last = -1;
};

using FileObserver = std::function<void(const std::filesystem::path&)>;

std::string frame_stem(FrameIndex index);  // "000042"

// Raw SemanticKITTI payload files.
PointCloud read_velodyne_bin(const std::filesystem::path& path);
void write_velodyne_bin(const std::filesystem::path& path, const PointCloud& cloud);

struct LabelPayload {
  std::vector<ClassId> semantic;
  std::vector<InstanceId> instance;
};
LabelPayload read_label_file(const std::filesystem::path& path);
void write_label_file(const std::filesystem::path& path, std::span<const ClassId> semantic,
                      std::span<const InstanceId> instance);

std::vector<std::array<double, 12>> read_pose_rows(const std::filesystem::path& path);
CameraCalib read_calib(const std::filesystem::path& path);
void write_calib(const std::filesystem::path& path, const CameraCalib& calib);

/// Lazy reader over a SemanticKITTI-layout sequence directory:
///   velodyne/NNNNNN.bin, labels/NNNNNN.label, poses.txt, calib.txt
/// Construction reads only poses.txt and calib.txt; read_frame(k) opens
/// only the two payload files of frame k.
class SequenceReader {
 public:
  explicit SequenceReader(std::filesystem::path dir, FileObserver observer = {});

  FrameIndex frame_count() const { return static_cast<FrameIndex>(camera_poses_.size()); }
  const CameraCalib& calib() const { return calib_; }
  /// LiDAR-to-world pose of frame k (Tr^-1 * P_cam * Tr).
  Pose pose(FrameIndex k) const;
  SequenceFrame read_frame(FrameIndex k) const;

 private:
  void check_index(FrameIndex k) const;

  std::filesystem::path dir_;
  FileObserver observer_;
  CameraCalib calib_;
  std::vector<std::array<double, 12>> camera_poses_;
};

Sequence load_sequence(const std::filesystem::path& dir, FrameRange range = {},
                       FileObserver observer = {});

/// Writes frames plus calib in the layout read by SequenceReader. Frame
/// indices must be 0..n-1 in order since poses.txt is positional.
void write_sequence(const std::filesystem::path& dir, const Sequence& sequence);

}  // namespace tlidar
