#include "tlidar/sequence_io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "tlidar/errors.hpp"

namespace tlidar {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "payload readers assume a little-endian host");

std::vector<char> read_bytes(const fs::path& path, const FileObserver& observer = {}) {
  if (observer) observer(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Line-oriented text files must end in a newline; a missing one means the
// file was cut off, possibly mid-number.
std::string read_text(const fs::path& path, const FileObserver& observer = {}) {
  const auto bytes = read_bytes(path, observer);
  if (!bytes.empty() && bytes.back() != '\n') {
    throw FormatError(path.string() + ": truncated (" + std::to_string(bytes.size()) +
                      " bytes, no trailing newline)");
  }
  return {bytes.begin(), bytes.end()};
}

void write_bytes(const fs::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFoundError("cannot create " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw FormatError("short write to " + path.string());
}

double parse_double(std::string_view token, const fs::path& path, std::size_t line) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": bad number '" +
                      std::string(token) + "'");
  }
  return value;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::array<double, 12> parse_row12(std::span<const std::string_view> tokens,
                                   const fs::path& path, std::size_t line) {
  if (tokens.size() != 12) {
    throw FormatError(path.string() + ":" + std::to_string(line) + ": expected 12 values, got " +
                      std::to_string(tokens.size()));
  }
  std::array<double, 12> row{};
  for (std::size_t i = 0; i < 12; ++i) row[i] = parse_double(tokens[i], path, line);
  return row;
}

// Shortest representation that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_row(const std::array<double, 12>& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ' ';
    out += format_double(row[i]);
  }
  return out;
}

Pose camera_to_lidar_pose(const std::array<double, 12>& camera_rows, const Pose& tr) {
  return compose(invert(tr), compose(Pose::from_row_major(camera_rows), tr));
}

std::array<double, 12> lidar_to_camera_rows(const Pose& lidar_pose, const Pose& tr) {
  return compose(tr, compose(lidar_pose, invert(tr))).to_row_major();
}

}  // namespace

std::string frame_stem(FrameIndex index) {
  std::ostringstream s;
  s << std::setw(6) << std::setfill('0') << index;
  return s.str();
}

PointCloud read_velodyne_bin(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() % 16 != 0) {
    throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) +
                      " bytes is not a multiple of 16 (4 x float32 per point)");
  }
  const std::size_t n = bytes.size() / 16;
  PointCloud cloud;
  cloud.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    float v[4];
    std::memcpy(v, bytes.data() + i * 16, 16);
    cloud.push_back(Vec3(v[0], v[1], v[2]), v[3]);
  }
  cloud.validate();
  return cloud;
}

void write_velodyne_bin(const fs::path& path, const PointCloud& cloud) {
  cloud.validate();
  std::vector<float> data;
  data.reserve(cloud.size() * 4);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    data.push_back(static_cast<float>(cloud.xyz[i].x()));
    data.push_back(static_cast<float>(cloud.xyz[i].y()));
    data.push_back(static_cast<float>(cloud.xyz[i].z()));
    data.push_back(static_cast<float>(cloud.intensity[i]));
  }
  write_bytes(path, data.data(), data.size() * sizeof(float));
}

LabelPayload read_label_file(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (bytes.size() % 4 != 0) {
    throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) +
                      " bytes is not a multiple of 4 (uint32 per point)");
  }
  const std::size_t n = bytes.size() / 4;
  LabelPayload out;
  out.semantic.resize(n);
  out.instance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t raw;
    std::memcpy(&raw, bytes.data() + i * 4, 4);
    out.semantic[i] = raw & 0xFFFFu;
    out.instance[i] = raw >> 16;
  }
  return out;
}

void write_label_file(const fs::path& path, std::span<const ClassId> semantic,
                      std::span<const InstanceId> instance) {
  if (semantic.size() != instance.size()) {
    throw InvalidInputError("semantic/instance length mismatch");
  }
  std::vector<std::uint32_t> raw(semantic.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (semantic[i] > 0xFFFFu || instance[i] > 0xFFFFu) {
      throw InvalidInputError("label " + std::to_string(i) + " does not fit in 16+16 bits");
    }
    raw[i] = (instance[i] << 16) | semantic[i];
  }
  write_bytes(path, raw.data(), raw.size() * sizeof(std::uint32_t));
}

std::vector<std::array<double, 12>> read_pose_rows(const fs::path& path) {
  const std::string text = read_text(path);
  std::vector<std::array<double, 12>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    rows.push_back(parse_row12(tokens, path, line_no));
  }
  return rows;
}

CameraCalib CameraCalib::from_rows(const std::array<double, 12>& p2,
                                   const std::array<double, 12>& tr, int width, int height) {
  CameraCalib c;
  c.projection_rows = p2;
  c.extrinsic_rows = tr;
  c.fx = p2[0];
  c.cx = p2[2];
  c.fy = p2[5];
  c.cy = p2[6];
  c.extrinsic = Pose::from_row_major(tr);
  c.width = width;
  c.height = height;
  c.validate();
  return c;
}

CameraCalib CameraCalib::pinhole(double fx, double fy, double cx, double cy,
                                 const Pose& extrinsic, int width, int height) {
  const std::array<double, 12> p2{fx, 0.0, cx, 0.0, 0.0, fy, cy, 0.0, 0.0, 0.0, 1.0, 0.0};
  CameraCalib c = from_rows(p2, extrinsic.to_row_major(), width, height);
  c.extrinsic = extrinsic;
  return c;
}

void CameraCalib::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ConfigError("camera image size must be positive");
}

CameraCalib read_calib(const fs::path& path) {
  const std::string text = read_text(path);
  std::optional<std::array<double, 12>> p2, tr;
  int width = CameraCalib::kDefaultWidth, height = CameraCalib::kDefaultHeight;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    const auto tokens = split_ws(std::string_view(line).substr(colon + 1));
    if (key == "P2") {
      p2 = parse_row12(tokens, path, line_no);
    } else if (key == "Tr") {
      tr = parse_row12(tokens, path, line_no);
    } else if (key == "image_size") {
      if (tokens.size() != 2) throw FormatError(path.string() + ": image_size needs W H");
      width = static_cast<int>(parse_double(tokens[0], path, line_no));
      height = static_cast<int>(parse_double(tokens[1], path, line_no));
    }
  }
  if (!p2) throw FormatError(path.string() + ": missing P2: line");
  if (!tr) throw FormatError(path.string() + ": missing Tr: line");
  return CameraCalib::from_rows(*p2, *tr, width, height);
}

void write_calib(const fs::path& path, const CameraCalib& calib) {
  std::string text = "P2: " + format_row(calib.projection_rows) + "\n";
  text += "Tr: " + format_row(calib.extrinsic_rows) + "\n";
  text += "image_size: " + std::to_string(calib.width) + " " + std::to_string(calib.height) + "\n";
  write_bytes(path, text.data(), text.size());
}

SequenceReader::SequenceReader(fs::path dir, FileObserver observer)
    : dir_(std::move(dir)), observer_(std::move(observer)) {
  if (!fs::is_directory(dir_)) throw NotFoundError("sequence directory not found: " + dir_.string());
  const auto calib_path = dir_ / "calib.txt";
  const auto poses_path = dir_ / "poses.txt";
  if (observer_) {
    observer_(calib_path);
    observer_(poses_path);
  }
  calib_ = read_calib(calib_path);
  camera_poses_ = read_pose_rows(poses_path);
  // Directory listing only; no payload is opened.
  if (fs::is_directory(dir_ / "velodyne")) {
    std::size_t scans = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "velodyne")) scans += e.path().extension() == ".bin";
    if (scans != camera_poses_.size()) {
      throw FormatError(poses_path.string() + " has " + std::to_string(camera_poses_.size()) +
                        " poses but velodyne/ holds " + std::to_string(scans) + " scans");
    }
  }
}

void SequenceReader::check_index(FrameIndex k) const {
  if (k < 0 || k >= frame_count()) {
    throw InvalidInputError("frame " + std::to_string(k) + " outside sequence of " +
                            std::to_string(frame_count()) + " frames");
  }
}

Pose SequenceReader::pose(FrameIndex k) const {
  check_index(k);
  return camera_to_lidar_pose(camera_poses_[static_cast<std::size_t>(k)], calib_.extrinsic);
}

SequenceFrame SequenceReader::read_frame(FrameIndex k) const {
  check_index(k);
  const auto bin_path = dir_ / "velodyne" / (frame_stem(k) + ".bin");
  const auto label_path = dir_ / "labels" / (frame_stem(k) + ".label");
  if (observer_) {
    observer_(bin_path);
    observer_(label_path);
  }
  if (!fs::exists(bin_path)) throw NotFoundError("missing point file " + bin_path.string());
  if (!fs::exists(label_path)) throw NotFoundError("missing label file " + label_path.string());

  SequenceFrame frame;
  frame.index = k;
  frame.timestamp = static_cast<double>(k) * kFramePeriodSeconds;
  frame.labeled.cloud = read_velodyne_bin(bin_path);
  auto labels = read_label_file(label_path);
  if (labels.semantic.size() != frame.labeled.cloud.size()) {
    throw FormatError("size mismatch: " + bin_path.string() + " has " +
                      std::to_string(frame.labeled.cloud.size() * 16) + " bytes (" +
                      std::to_string(frame.labeled.cloud.size()) + " points) but " +
                      label_path.string() + " has " + std::to_string(labels.semantic.size() * 4) +
                      " bytes (" + std::to_string(labels.semantic.size()) + " labels)");
  }
  frame.labeled.semantic = std::move(labels.semantic);
  frame.labeled.instance = std::move(labels.instance);
  frame.stored_pose_rows = camera_poses_[static_cast<std::size_t>(k)];
  frame.pose = pose(k);
  return frame;
}

Sequence load_sequence(const fs::path& dir, FrameRange range, FileObserver observer) {
  SequenceReader reader(dir, std::move(observer));
  const FrameIndex last = range.last < 0 ? reader.frame_count() - 1 : range.last;
  if (range.first < 0 || range.first > last || last >= reader.frame_count()) {
    throw InvalidInputError("frame range [" + std::to_string(range.first) + ", " +
                            std::to_string(range.last) + "] invalid for sequence of " +
                            std::to_string(reader.frame_count()) + " frames");
  }
  Sequence seq;
  seq.calib = reader.calib();
  for (FrameIndex k = range.first; k <= last; ++k) seq.frames.push_back(reader.read_frame(k));
  return seq;
}

void write_sequence(const fs::path& dir, const Sequence& sequence) {
  fs::create_directories(dir / "velodyne");
  fs::create_directories(dir / "labels");
  write_calib(dir / "calib.txt", sequence.calib);
  std::string poses;
  for (std::size_t i = 0; i < sequence.frames.size(); ++i) {
    const auto& frame = sequence.frames[i];
    if (frame.index != static_cast<FrameIndex>(i)) {
      throw InvalidInputError("write_sequence needs contiguous frames from 0; got index " +
                              std::to_string(frame.index) + " at position " + std::to_string(i));
    }
    frame.labeled.validate();
    write_velodyne_bin(dir / "velodyne" / (frame_stem(frame.index) + ".bin"), frame.labeled.cloud);
    write_label_file(dir / "labels" / (frame_stem(frame.index) + ".label"), frame.labeled.semantic,
                     frame.labeled.instance);
    std::array<double, 12> rows = lidar_to_camera_rows(frame.pose, sequence.calib.extrinsic);
    if (frame.stored_pose_rows &&
        max_abs_difference(camera_to_lidar_pose(*frame.stored_pose_rows, sequence.calib.extrinsic),
                           frame.pose) < 1e-9) {
      rows = *frame.stored_pose_rows;
    }
    poses += format_row(rows) + "\n";
  }
  write_bytes(dir / "poses.txt", poses.data(), poses.size());
}

}  // namespace tlidar
