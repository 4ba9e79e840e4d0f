#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tlidar/voxel_grid.hpp"

namespace tlidar {

/// Voxels present in both the student and the teacher map.
struct SharedVoxelSelection {
  std::vector<VoxelCoord> coords;  // ascending
  std::vector<std::size_t> student_index;
  std::vector<std::size_t> teacher_index;

  std::size_t size() const { return coords.size(); }
};

/// Exact coordinate intersection. Maps must share voxel size, origin and scale.
SharedVoxelSelection shared_selection(const VoxelFeatureMap& student,
                                      const VoxelFeatureMap& teacher);

enum class DistillNorm {
  kPerVoxelMean,  // mean over shared voxels of ||f_s - f_t||_2
  kFrobenius,     // ||F_s m_s - F_t m_t||_F over the whole selection
};

/// Masked feature distillation loss; 0 for an empty selection.
double distill_loss(const VoxelFeatureMap& student, const VoxelFeatureMap& teacher,
                    const SharedVoxelSelection& selection,
                    DistillNorm norm = DistillNorm::kPerVoxelMean);

/// Fixed-order pairwise summation, reproducible regardless of threading.
double pairwise_sum(std::span<const double> values);

struct LossTerms {
  double lidar = 0.0;
  double distill = 0.0;
  double fusion = 0.0;
  double image_2d = 0.0;
  double image_3d = 0.0;
};

struct LossWeights {
  double distill = 1.0;  // alpha
  double fusion = 1.0;   // beta
  double image = 1.0;    // gamma
};

/// lidar + alpha * distill + beta * fusion + gamma * (2d + 3d).
double total_loss(const LossTerms& terms, const LossWeights& weights = {});

}  // namespace tlidar
