#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tlidar {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid SE(3) transform stored as rotation + translation.
///
/// Constructed either from an exact rotation (checked against 1e-9) or from
/// file data via from_row_major(), which accepts up to 1e-6 deviation from
/// orthonormality and then projects the rotation back onto SO(3) with a
/// polar decomposition.
class Pose {
 public:
  static constexpr double kStrictTolerance = 1e-9;
  static constexpr double kFileTolerance = 1e-6;

  Pose() = default;  // identity

  /// Throws InvalidInputError unless R is orthonormal with det +1 within 1e-9.
  Pose(const Mat3& rotation, const Vec3& translation);

  /// 3x4 row-major matrix as found in KITTI poses.txt / calib.txt.
  static Pose from_row_major(std::span<const double, 12> rows,
                             double tolerance = kFileTolerance);

  static Pose translation(double x, double y, double z);
  static Pose rotation_z(double radians);
  static Pose from_axis_angle(const Vec3& axis, double radians, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  std::array<double, 12> to_row_major() const;

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }

  /// Largest entry of |R^T R - I|.
  double orthonormality_error() const;

 private:
  struct Unchecked {};
  Pose(const Mat3& rotation, const Vec3& translation, Unchecked)
      : rotation_(rotation), translation_(translation) {}

  friend Pose compose(const Pose& a, const Pose& b);
  friend Pose invert(const Pose& a);

  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

/// (a ∘ b)(x) = a(b(x)).
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& a);

/// Max absolute difference over all 12 matrix entries.
double max_abs_difference(const Pose& a, const Pose& b);

/// Coordinates in meters plus per-point intensity.
struct PointCloud {
  std::vector<Vec3> xyz;
  std::vector<double> intensity;

  std::size_t size() const { return xyz.size(); }
  bool empty() const { return xyz.empty(); }
  void reserve(std::size_t n) {
    xyz.reserve(n);
    intensity.reserve(n);
  }
  void push_back(const Vec3& p, double i) {
    xyz.push_back(p);
    intensity.push_back(i);
  }

  /// Throws InvalidInputError on non-finite coordinates or length mismatch.
  void validate() const;
};

using ClassId = std::uint32_t;
using InstanceId = std::uint32_t;

struct LabeledCloud {
  PointCloud cloud;
  std::vector<ClassId> semantic;
  std::vector<InstanceId> instance;  // 0 = no instance

  std::size_t size() const { return cloud.size(); }
  void reserve(std::size_t n) {
    cloud.reserve(n);
    semantic.reserve(n);
    instance.reserve(n);
  }
  void push_back(const Vec3& p, double intensity, ClassId sem, InstanceId inst) {
    cloud.push_back(p, intensity);
    semantic.push_back(sem);
    instance.push_back(inst);
  }
  /// Appends row `i` of `other`, keeping coordinates as given in `p`.
  void push_back_from(const LabeledCloud& other, std::size_t i, const Vec3& p) {
    push_back(p, other.cloud.intensity[i], other.semantic[i], other.instance[i]);
  }

  void validate() const;
};

PointCloud transform_points(const Pose& pose, const PointCloud& pts);
LabeledCloud transform_points(const Pose& pose, const LabeledCloud& pts);

Vec3 centroid(std::span<const Vec3> points);

}  // namespace tlidar
