#include "tlidar/image_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "tlidar/errors.hpp"

namespace tlidar {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(const std::string& buf, std::size_t& pos, const fs::path& path) {
  while (pos < buf.size()) {
    if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  if (start == pos) throw FormatError(path.string() + ": truncated PNM header");
  return buf.substr(start, pos - start);
}

int header_int(const std::string& buf, std::size_t& pos, const fs::path& path) {
  const std::string tok = header_token(buf, pos, path);
  try {
    return std::stoi(tok);
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": bad PNM header field '" + tok + "'");
  }
}

}  // namespace

ImageFeatureMap read_pnm(const fs::path& path) {
  const std::string buf = slurp(path);
  std::size_t pos = 0;
  const std::string magic = header_token(buf, pos, path);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError(path.string() + ": unsupported PNM magic '" + magic + "' (P5/P6 only)");
  }
  const int width = header_int(buf, pos, path);
  const int height = header_int(buf, pos, path);
  const int maxval = header_int(buf, pos, path);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw FormatError(path.string() + ": invalid PNM dimensions or maxval");
  }
  ++pos;  // single whitespace before the raster
  const std::size_t bytes_per_sample = maxval < 256 ? 1 : 2;
  const std::size_t expected =
      static_cast<std::size_t>(width) * height * channels * bytes_per_sample;
  if (buf.size() < pos + expected) {
    throw FormatError(path.string() + ": raster has " + std::to_string(buf.size() - pos) +
                      " bytes, expected " + std::to_string(expected));
  }
  ImageFeatureMap img(width, height, channels);
  const auto* raster = reinterpret_cast<const unsigned char*>(buf.data() + pos);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const unsigned v = bytes_per_sample == 1 ? raster[i] : (raster[2 * i] << 8 | raster[2 * i + 1]);
    img.data[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

void write_pnm(const fs::path& path, const ImageFeatureMap& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw ConfigError("PNM output needs 1 or 3 channels, got " + std::to_string(image.channels));
  }
  std::string buf = (image.channels == 1 ? "P5\n" : "P6\n") + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  for (double v : image.data) {
    buf.push_back(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFoundError("cannot create " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

ImageFeatureMap read_feature_raw(const fs::path& path) {
  const std::string buf = slurp(path);
  if (buf.size() < 16 || std::memcmp(buf.data(), "TLFM", 4) != 0) {
    throw FormatError(path.string() + ": not a raw feature file (bad magic)");
  }
  std::uint32_t dims[3];
  std::memcpy(dims, buf.data() + 4, sizeof(dims));
  const std::size_t count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (buf.size() != 16 + count * 4) {
    throw FormatError(path.string() + ": expected " + std::to_string(16 + count * 4) +
                      " bytes, found " + std::to_string(buf.size()));
  }
  ImageFeatureMap img(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                      static_cast<int>(dims[2]));
  const char* plane = buf.data() + 16;
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        float v;
        std::memcpy(&v, plane, 4);
        plane += 4;
        img.at(x, y, c) = v;
      }
    }
  }
  return img;
}

void write_feature_raw(const fs::path& path, const ImageFeatureMap& image) {
  std::string buf("TLFM");
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(image.width),
                                 static_cast<std::uint32_t>(image.height),
                                 static_cast<std::uint32_t>(image.channels)};
  buf.append(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        const auto v = static_cast<float>(image.at(x, y, c));
        buf.append(reinterpret_cast<const char*>(&v), 4);
      }
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFoundError("cannot create " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

ImageFeatureMap read_image_features(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
  return read_feature_raw(path);
}

}  // namespace tlidar
