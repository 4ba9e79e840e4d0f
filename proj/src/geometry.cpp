#include "tlidar/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "tlidar/errors.hpp"

namespace tlidar {

namespace {

double orthonormality(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

void check_rotation(const Mat3& r, double tolerance) {
  if (!r.allFinite()) throw InvalidInputError("pose rotation has non-finite entries");
  const double ortho = orthonormality(r);
  const double det = r.determinant();
  if (ortho > tolerance || std::abs(det - 1.0) > tolerance) {
    std::ostringstream msg;
    msg << "pose rotation is not orthonormal: |R^T R - I| = " << ortho << ", det = " << det
        << " (tolerance " << tolerance << ")";
    throw InvalidInputError(msg.str());
  }
}

}  // namespace

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  check_rotation(rotation_, kStrictTolerance);
  if (!translation_.allFinite()) throw InvalidInputError("pose translation is not finite");
}

Pose Pose::from_row_major(std::span<const double, 12> rows, double tolerance) {
  Mat3 r;
  Vec3 t;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = rows[i * 4 + j];
    t(i) = rows[i * 4 + 3];
  }
  check_rotation(r, tolerance);
  if (!t.allFinite()) throw InvalidInputError("pose translation is not finite");
  // Nearest rotation in the Frobenius sense.
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 polar = svd.matrixU() * svd.matrixV().transpose();
  return Pose(polar, t, Unchecked{});
}

Pose Pose::translation(double x, double y, double z) {
  return Pose(Mat3::Identity(), Vec3(x, y, z), Unchecked{});
}

Pose Pose::rotation_z(double radians) {
  return Pose(Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix(), Vec3::Zero(),
              Unchecked{});
}

Pose Pose::from_axis_angle(const Vec3& axis, double radians, const Vec3& translation) {
  if (!(axis.norm() > 0.0)) throw InvalidInputError("rotation axis must be non-zero");
  return Pose(Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix(), translation,
              Unchecked{});
}

std::array<double, 12> Pose::to_row_major() const {
  std::array<double, 12> out{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out[i * 4 + j] = rotation_(i, j);
    out[i * 4 + 3] = translation_(i);
  }
  return out;
}

double Pose::orthonormality_error() const { return orthonormality(rotation_); }

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_,
              Pose::Unchecked{});
}

Pose invert(const Pose& a) {
  const Mat3 rt = a.rotation_.transpose();
  return Pose(rt, -(rt * a.translation_), Pose::Unchecked{});
}

double max_abs_difference(const Pose& a, const Pose& b) {
  return std::max((a.rotation() - b.rotation()).cwiseAbs().maxCoeff(),
                  (a.translation() - b.translation()).cwiseAbs().maxCoeff());
}

void PointCloud::validate() const {
  if (intensity.size() != xyz.size()) {
    throw InvalidInputError("intensity length " + std::to_string(intensity.size()) +
                            " does not match point count " + std::to_string(xyz.size()));
  }
  for (std::size_t i = 0; i < xyz.size(); ++i) {
    if (!xyz[i].allFinite()) {
      throw InvalidInputError("point " + std::to_string(i) + " has non-finite coordinates");
    }
  }
}

void LabeledCloud::validate() const {
  cloud.validate();
  if (semantic.size() != cloud.size() || instance.size() != cloud.size()) {
    throw InvalidInputError("label arrays do not match point count " +
                            std::to_string(cloud.size()));
  }
}

PointCloud transform_points(const Pose& pose, const PointCloud& pts) {
  pts.validate();
  PointCloud out;
  out.xyz.reserve(pts.size());
  for (const auto& p : pts.xyz) out.xyz.push_back(pose.apply(p));
  out.intensity = pts.intensity;
  return out;
}

LabeledCloud transform_points(const Pose& pose, const LabeledCloud& pts) {
  LabeledCloud out;
  out.cloud = transform_points(pose, pts.cloud);
  out.semantic = pts.semantic;
  out.instance = pts.instance;
  return out;
}

Vec3 centroid(std::span<const Vec3> points) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Vec3(sum / static_cast<double>(points.size()));
}

}  // namespace tlidar
