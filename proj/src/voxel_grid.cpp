#include "tlidar/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "tlidar/errors.hpp"
#include "tlidar/random.hpp"

namespace tlidar {

namespace {

constexpr double kCoordLimit = 1 << 30;

std::int32_t floor_to_coord(double v) {
  const double f = std::floor(v);
  if (!std::isfinite(f) || std::abs(f) > kCoordLimit) {
    throw InvalidInputError("voxel coordinate out of range");
  }
  return static_cast<std::int32_t>(f);
}

// Groups rows by coordinate and mean-reduces; result sorted by coordinate.
VoxelFeatureMap reduce_mean(double voxel_size, const Vec3& origin, int scale_level,
                            const std::vector<VoxelCoord>& keys, const FeatureMatrix& rows) {
  std::vector<std::uint32_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });
  std::vector<VoxelCoord> coords;
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && keys[order[j]] == keys[order[i]]) ++j;
    coords.push_back(keys[order[i]]);
    runs.emplace_back(i, j);
    i = j;
  }
  FeatureMatrix features(static_cast<Eigen::Index>(coords.size()), rows.cols());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto [begin, end] = runs[r];
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(rows.cols());
    for (std::size_t k = begin; k < end; ++k) sum += rows.row(order[k]);
    features.row(static_cast<Eigen::Index>(r)) = sum / static_cast<double>(end - begin);
  }
  return VoxelFeatureMap::from_entries(voxel_size, origin, scale_level, std::move(coords), features);
}

}  // namespace

VoxelFeatureMap::VoxelFeatureMap(double voxel_size, const Vec3& origin, int width, int scale_level)
    : voxel_size_(voxel_size),
      origin_(origin),
      width_(width),
      scale_level_(scale_level),
      features_(0, width) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw InvalidInputError("voxel size must be positive");
  }
  if (!origin.allFinite()) throw InvalidInputError("voxel origin must be finite");
  if (width < 0) throw InvalidInputError("feature width must be non-negative");
  if (scale_level < 0) throw InvalidInputError("scale level must be non-negative");
}

VoxelFeatureMap VoxelFeatureMap::from_entries(double voxel_size, const Vec3& origin,
                                              int scale_level, std::vector<VoxelCoord> coords,
                                              const FeatureMatrix& features) {
  VoxelFeatureMap map(voxel_size, origin, static_cast<int>(features.cols()), scale_level);
  if (static_cast<std::size_t>(features.rows()) != coords.size()) {
    throw InvalidInputError("feature rows do not match coordinate count");
  }
  std::vector<std::uint32_t> order(coords.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return coords[a] < coords[b]; });
  map.coords_.reserve(coords.size());
  map.features_.resize(features.rows(), features.cols());
  map.index_.reserve(coords.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const VoxelCoord c = coords[order[i]];
    if (!map.index_.emplace(c, static_cast<std::uint32_t>(i)).second) {
      throw InvalidInputError("duplicate voxel coordinate (" + std::to_string(c.x) + ", " +
                              std::to_string(c.y) + ", " + std::to_string(c.z) + ")");
    }
    map.coords_.push_back(c);
    map.features_.row(static_cast<Eigen::Index>(i)) = features.row(order[i]);
  }
  return map;
}

std::optional<std::size_t> VoxelFeatureMap::find(const VoxelCoord& c) const {
  const auto it = index_.find(c);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

VoxelCoord VoxelFeatureMap::coord_of(const Vec3& p) const {
  if (!p.allFinite()) throw InvalidInputError("non-finite point");
  const Vec3 q = (p - origin_) / voxel_size_;
  return {floor_to_coord(q.x()), floor_to_coord(q.y()), floor_to_coord(q.z())};
}

Vec3 VoxelFeatureMap::center(const VoxelCoord& c) const {
  return origin_ + voxel_size_ * Vec3(c.x + 0.5, c.y + 0.5, c.z + 0.5);
}

bool VoxelFeatureMap::same_grid(const VoxelFeatureMap& other) const {
  return voxel_size_ == other.voxel_size_ && origin_ == other.origin_ &&
         scale_level_ == other.scale_level_;
}

VoxelFeatureMap voxelize(std::span<const Vec3> points, const FeatureMatrix& features,
                         double voxel_size, const Vec3& origin) {
  if (static_cast<std::size_t>(features.rows()) != points.size()) {
    throw InvalidInputError("voxelize: " + std::to_string(points.size()) + " points but " +
                            std::to_string(features.rows()) + " feature rows");
  }
  const VoxelFeatureMap grid(voxel_size, origin, static_cast<int>(features.cols()));
  std::vector<VoxelCoord> keys;
  keys.reserve(points.size());
  for (const auto& p : points) keys.push_back(grid.coord_of(p));
  return reduce_mean(voxel_size, origin, 0, keys, features);
}

VoxelFeatureMap downsample(const VoxelFeatureMap& map) {
  std::vector<VoxelCoord> keys;
  keys.reserve(map.size());
  for (const auto& c : map.coords()) keys.push_back({floor_half(c.x), floor_half(c.y), floor_half(c.z)});
  return reduce_mean(map.voxel_size() * 2.0, map.origin(), map.scale_level() + 1, keys,
                     map.features());
}

TrilinearStencil trilinear_stencil(const VoxelFeatureMap& map, const Vec3& query) {
  // Continuous coordinate where voxel centers sit on integers.
  const Vec3 u = (query - map.origin()) / map.voxel_size() - Vec3::Constant(0.5);
  const VoxelCoord base{floor_to_coord(u.x()), floor_to_coord(u.y()), floor_to_coord(u.z())};
  const Vec3 frac = u - Vec3(base.x, base.y, base.z);
  TrilinearStencil s{};
  for (int corner = 0; corner < 8; ++corner) {
    const int dx = corner >> 2 & 1, dy = corner >> 1 & 1, dz = corner & 1;
    s.corners[corner] = base + VoxelCoord{dx, dy, dz};
    s.weights[corner] = (dx ? frac.x() : 1.0 - frac.x()) * (dy ? frac.y() : 1.0 - frac.y()) *
                        (dz ? frac.z() : 1.0 - frac.z());
  }
  return s;
}

FeatureMatrix gather_trilinear(const VoxelFeatureMap& map, std::span<const Vec3> queries) {
  FeatureMatrix out = FeatureMatrix::Zero(static_cast<Eigen::Index>(queries.size()), map.width());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const TrilinearStencil s = trilinear_stencil(map, queries[q]);
    double total = 0.0;
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(map.width());
    for (int corner = 0; corner < 8; ++corner) {
      if (!(s.weights[corner] > 0.0)) continue;
      const auto idx = map.find(s.corners[corner]);
      if (!idx) continue;
      total += s.weights[corner];
      acc += s.weights[corner] * map.feature(*idx);
    }
    if (total > 0.0) out.row(static_cast<Eigen::Index>(q)) = acc / total;
  }
  return out;
}

FixedKernel FixedKernel::zeros(int in_channels, int out_channels) {
  if (in_channels < 1 || out_channels < 1) throw ConfigError("kernel channels must be >= 1");
  FixedKernel k;
  k.in_channels = in_channels;
  k.out_channels = out_channels;
  k.taps.assign(static_cast<std::size_t>(kTaps * in_channels * out_channels), 0.0);
  return k;
}

FixedKernel FixedKernel::identity(int channels) {
  FixedKernel k = zeros(channels, channels);
  const int center = offset_index(0, 0, 0);
  for (int c = 0; c < channels; ++c) k.at(center, c, c) = 1.0;
  return k;
}

FixedKernel FixedKernel::random(int in_channels, int out_channels, std::uint64_t seed,
                                double scale) {
  FixedKernel k = zeros(in_channels, out_channels);
  if (!(scale > 0.0)) scale = 1.0 / (kTaps * in_channels);
  Rng rng(seed);
  for (auto& w : k.taps) w = rng.uniform(-scale, scale);
  return k;
}

VoxelFeatureMap apply_fixed_kernel(const VoxelFeatureMap& map, const FixedKernel& kernel) {
  if (kernel.in_channels != map.width()) {
    throw ConfigError("kernel expects " + std::to_string(kernel.in_channels) +
                      " input channels but the map has width " + std::to_string(map.width()));
  }
  if (kernel.taps.size() !=
      static_cast<std::size_t>(FixedKernel::kTaps * kernel.in_channels * kernel.out_channels)) {
    throw ConfigError("kernel tap count does not match its channel sizes");
  }
  // Per-offset weight matrices W_d (out x in).
  std::vector<Eigen::MatrixXd> weights(FixedKernel::kTaps,
                                       Eigen::MatrixXd(kernel.out_channels, kernel.in_channels));
  for (int o = 0; o < FixedKernel::kTaps; ++o) {
    for (int r = 0; r < kernel.out_channels; ++r) {
      for (int c = 0; c < kernel.in_channels; ++c) weights[o](r, c) = kernel.at(o, r, c);
    }
  }
  FeatureMatrix out = FeatureMatrix::Zero(static_cast<Eigen::Index>(map.size()), kernel.out_channels);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const VoxelCoord c = map.coords()[i];
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const auto j = map.find(c + VoxelCoord{dx, dy, dz});
          if (!j) continue;
          out.row(static_cast<Eigen::Index>(i)) +=
              (weights[FixedKernel::offset_index(dx, dy, dz)] * map.feature(*j).transpose())
                  .transpose();
        }
      }
    }
  }
  return VoxelFeatureMap::from_entries(map.voxel_size(), map.origin(), map.scale_level(),
                                       map.coords(), out);
}

namespace {

constexpr char kMagic[8] = {'T', 'L', 'V', 'X', 'M', 'A', 'P', '1'};

template <typename T>
void put(std::string& buf, const T& v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& pos, const std::filesystem::path& path) {
  if (pos + sizeof(T) > buf.size()) {
    throw FormatError(path.string() + ": truncated voxel map (" + std::to_string(buf.size()) +
                      " bytes)");
  }
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void write_voxel_map(const std::filesystem::path& path, const VoxelFeatureMap& map) {
  std::string buf(kMagic, sizeof(kMagic));
  put(buf, map.voxel_size());
  for (int i = 0; i < 3; ++i) put(buf, map.origin()(i));
  put(buf, static_cast<std::int32_t>(map.scale_level()));
  put(buf, static_cast<std::uint32_t>(map.width()));
  put(buf, static_cast<std::uint64_t>(map.size()));
  for (const auto& c : map.coords()) {
    put(buf, c.x);
    put(buf, c.y);
    put(buf, c.z);
  }
  for (std::size_t i = 0; i < map.size(); ++i) {
    for (int k = 0; k < map.width(); ++k) put(buf, map.features()(static_cast<Eigen::Index>(i), k));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFoundError("cannot create " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

VoxelFeatureMap read_voxel_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  const std::string buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path.string() + ": not a voxel map dump (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const auto voxel_size = take<double>(buf, pos, path);
  Vec3 origin;
  for (int i = 0; i < 3; ++i) origin(i) = take<double>(buf, pos, path);
  const auto scale = take<std::int32_t>(buf, pos, path);
  const auto width = take<std::uint32_t>(buf, pos, path);
  const auto count = take<std::uint64_t>(buf, pos, path);
  const std::uint64_t expected = pos + count * 12 + count * width * 8;
  if (buf.size() != expected) {
    throw FormatError(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                      std::to_string(buf.size()));
  }
  std::vector<VoxelCoord> coords(count);
  for (auto& c : coords) {
    c.x = take<std::int32_t>(buf, pos, path);
    c.y = take<std::int32_t>(buf, pos, path);
    c.z = take<std::int32_t>(buf, pos, path);
  }
  FeatureMatrix features(static_cast<Eigen::Index>(count), width);
  for (std::uint64_t i = 0; i < count; ++i) {
    for (std::uint32_t k = 0; k < width; ++k) {
      features(static_cast<Eigen::Index>(i), k) = take<double>(buf, pos, path);
    }
  }
  return VoxelFeatureMap::from_entries(voxel_size, origin, scale, std::move(coords), features);
}

}  // namespace tlidar
