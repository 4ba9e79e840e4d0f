#include "tlidar/mask_distill.hpp"

#include <cmath>

#include "tlidar/errors.hpp"

namespace tlidar {

SharedVoxelSelection shared_selection(const VoxelFeatureMap& student,
                                      const VoxelFeatureMap& teacher) {
  if (!student.same_grid(teacher)) {
    throw ConfigError("student and teacher maps use different grids (voxel size, origin or scale)");
  }
  // Both coordinate lists are sorted: linear merge.
  SharedVoxelSelection sel;
  const auto& a = student.coords();
  const auto& b = teacher.coords();
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      sel.coords.push_back(a[i]);
      sel.student_index.push_back(i++);
      sel.teacher_index.push_back(j++);
    }
  }
  return sel;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double distill_loss(const VoxelFeatureMap& student, const VoxelFeatureMap& teacher,
                    const SharedVoxelSelection& selection, DistillNorm norm) {
  if (student.width() != teacher.width()) {
    throw ConfigError("student width " + std::to_string(student.width()) +
                      " differs from teacher width " + std::to_string(teacher.width()));
  }
  if (selection.student_index.size() != selection.size() ||
      selection.teacher_index.size() != selection.size()) {
    throw InvalidInputError("selection index arrays have inconsistent lengths");
  }
  if (selection.size() == 0) return 0.0;
  std::vector<double> terms(selection.size());
  for (std::size_t k = 0; k < selection.size(); ++k) {
    const std::size_t s = selection.student_index[k], t = selection.teacher_index[k];
    if (s >= student.size() || t >= teacher.size()) {
      throw InvalidInputError("selection index out of range");
    }
    const double sq = (student.feature(s) - teacher.feature(t)).squaredNorm();
    terms[k] = norm == DistillNorm::kPerVoxelMean ? std::sqrt(sq) : sq;
  }
  const double total = pairwise_sum(terms);
  return norm == DistillNorm::kPerVoxelMean ? total / static_cast<double>(terms.size())
                                            : std::sqrt(total);
}

double total_loss(const LossTerms& terms, const LossWeights& weights) {
  return terms.lidar + weights.distill * terms.distill + weights.fusion * terms.fusion +
         weights.image * (terms.image_2d + terms.image_3d);
}

}  // namespace tlidar
