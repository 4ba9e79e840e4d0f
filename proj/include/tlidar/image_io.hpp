#pragma once

#include <filesystem>

#include "tlidar/tiaf.hpp"

namespace tlidar {

// Binary PGM (P5, C = 1) or PPM (P6, C = 3); features = value / maxval.
ImageFeatureMap read_pnm(const std::filesystem::path& path);
// Writes C = 1 or 3 feature maps as 8-bit P5/P6, clamping to [0, 1].
void write_pnm(const std::filesystem::path& path, const ImageFeatureMap& image);

// Planar float32 feature file: "TLFM", u32 width, u32 height, u32 channels,
// then channels * height * width float32 values (plane-major), little-endian.
ImageFeatureMap read_feature_raw(const std::filesystem::path& path);
void write_feature_raw(const std::filesystem::path& path, const ImageFeatureMap& image);

/// Dispatches on extension: .pgm/.ppm/.pnm or the raw float format otherwise.
ImageFeatureMap read_image_features(const std::filesystem::path& path);

}  // namespace tlidar
