// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <png.h>

namespace viewstyle {

namespace {

constexpr std::uint8_t kDepthMagic[4] = {'D', 'P', 'F', '1'};
constexpr std::size_t kDepthHeader = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(bytes[at + static_cast<std::size_t>(i)]) << (8 * i);
  return x;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

double number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw Error(ErrorCode::kParseError, std::string("missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace

std::vector<std::uint8_t> encode_depth(const DepthMap& values, bool disparity) {
  std::vector<std::uint8_t> out(std::begin(kDepthMagic), std::end(kDepthMagic));
  out.reserve(kDepthHeader + 4 * values.size());
  put_u32(out, static_cast<std::uint32_t>(values.width()));
  put_u32(out, static_cast<std::uint32_t>(values.height()));
  put_u32(out, disparity ? 1u : 0u);
  for (const float x : values.pixels()) put_u32(out, std::bit_cast<std::uint32_t>(x));
  return out;
}

DepthFile decode_depth(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kDepthMagic), std::end(kDepthMagic), bytes.begin())) {
    throw Error(ErrorCode::kMagicMismatch, "not a depth file");
  }
  if (bytes.size() < kDepthHeader) throw Error(ErrorCode::kTruncatedFile, "depth header truncated");
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t h = get_u32(bytes, 8);
  const std::uint32_t flags = get_u32(bytes, 12);
  if (w > kMaxRasterSide || h > kMaxRasterSide) throw Error(ErrorCode::kDimensionOverflow, "depth raster too large");
  const std::size_t count = static_cast<std::size_t>(w) * h;
  if (bytes.size() < kDepthHeader + 4 * count) throw Error(ErrorCode::kTruncatedFile, "depth payload truncated");
  DepthFile file{DepthMap(static_cast<int>(w), static_cast<int>(h)), (flags & 1u) != 0};
  for (std::size_t i = 0; i < count; ++i) file.values[i] = std::bit_cast<float>(get_u32(bytes, kDepthHeader + 4 * i));
  return file;
}

void write_depth(const std::filesystem::path& path, const DepthMap& values, bool disparity) {
  write_bytes(path, encode_depth(values, disparity));
}

DepthFile read_depth(const std::filesystem::path& path) { return decode_depth(read_bytes(path)); }

double srgb_from_linear(double linear) {
  const double x = std::clamp(linear, 0.0, 1.0);
  return x <= 0.0031308 ? 12.92 * x : 1.055 * std::pow(x, 1.0 / 2.4) - 0.055;
}

double linear_from_srgb(double encoded) {
  const double x = std::clamp(encoded, 0.0, 1.0);
  return x <= 0.04045 ? x / 12.92 : std::pow((x + 0.055) / 1.055, 2.4);
}

std::uint8_t srgb_byte(float linear) {
  return static_cast<std::uint8_t>(std::lround(srgb_from_linear(linear) * 255.0));
}

void write_png(const std::filesystem::path& path, const ColorImage& rgb) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::vector<std::uint8_t> buffer(rgb.size() * 3);
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    for (int c = 0; c < 3; ++c) buffer[3 * i + static_cast<std::size_t>(c)] = srgb_byte(rgb[i][c]);
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(rgb.width());
  image.height = static_cast<png_uint_32>(rgb.height());
  image.format = PNG_FORMAT_RGB;
  if (png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
    throw Error(ErrorCode::kIoError, "cannot write " + path.string() + ": " + image.message);
  }
}

ColorImage read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    throw Error(ErrorCode::kIoError, "cannot read " + path.string() + ": " + image.message);
  }
  if (image.width > kMaxRasterSide || image.height > kMaxRasterSide) {
    png_image_free(&image);
    throw Error(ErrorCode::kDimensionOverflow, "image too large: " + path.string());
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
    throw Error(ErrorCode::kIoError, "cannot decode " + path.string() + ": " + image.message);
  }
  std::array<float, 256> lut{};
  for (int k = 0; k < 256; ++k) lut[static_cast<std::size_t>(k)] = static_cast<float>(linear_from_srgb(k / 255.0));
  ColorImage rgb(static_cast<int>(image.width), static_cast<int>(image.height));
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    rgb[i] = Rgb(lut[buffer[3 * i]], lut[buffer[3 * i + 1]], lut[buffer[3 * i + 2]]);
  }
  return rgb;
}

nlohmann::json trajectory_to_json(const Trajectory& trajectory) {
  nlohmann::json frames = nlohmann::json::array();
  for (const TrajectoryView& view : trajectory.frames) {
    const Intrinsics& k = view.camera.intrinsics;
    std::vector<double> m;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) m.push_back(view.camera.pose.matrix()(r, c));
    }
    frames.push_back({{"name", view.name},
                      {"intrinsics",
                       {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width},
                        {"height", k.height}}},
                      {"world_from_camera", m}});
  }
  nlohmann::json doc{{"convention", "xr-yd-zf"}, {"frames", frames}};
  if (!trajectory.metadata.empty()) doc["metadata"] = trajectory.metadata;
  return doc;
}

Trajectory trajectory_from_json(const nlohmann::json& doc) {
  try {
    if (doc.contains("convention") && doc.at("convention") != "xr-yd-zf") {
      throw Error(ErrorCode::kParseError, "unsupported camera convention");
    }
    if (!doc.contains("frames") || !doc.at("frames").is_array()) {
      throw Error(ErrorCode::kParseError, "trajectory needs a 'frames' array");
    }
    Trajectory trajectory;
    for (const auto& f : doc.at("frames")) {
      TrajectoryView view;
      view.name = f.at("name").get<std::string>();
      const auto& k = f.at("intrinsics");
      view.camera.intrinsics = Intrinsics{number(k, "fx"), number(k, "fy"), number(k, "cx"), number(k, "cy"),
                                          static_cast<int>(number(k, "width")), static_cast<int>(number(k, "height"))};
      const auto& m = f.at("world_from_camera");
      if (!m.is_array() || m.size() != 16) throw Error(ErrorCode::kParseError, "world_from_camera needs 16 values");
      Eigen::Matrix4d matrix;
      for (int i = 0; i < 16; ++i) matrix(i / 4, i % 4) = m.at(static_cast<std::size_t>(i)).get<double>();
      view.camera.pose = Pose(matrix);
      trajectory.frames.push_back(std::move(view));
    }
    if (doc.contains("metadata")) {
      for (const auto& [key, value] : doc.at("metadata").items()) {
        trajectory.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
    trajectory.validate();
    return trajectory;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed trajectory: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    throw Error(ErrorCode::kParseError, std::string("invalid trajectory: ") + e.what());
  }
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
  write_json(path, trajectory_to_json(trajectory));
}

Trajectory read_trajectory(const std::filesystem::path& path) { return trajectory_from_json(read_json(path)); }

void write_frame(const std::filesystem::path& dir, const std::string& name, const RgbdFrame& frame) {
  write_png(dir / (name + ".png"), frame.rgb);
  write_depth(dir / (name + ".dpf"), frame.depth);
}

RgbdFrame read_frame(const std::filesystem::path& dir, const TrajectoryView& view, int index) {
  RgbdFrame frame;
  frame.rgb = read_png(dir / (view.name + ".png"));
  DepthFile depth = read_depth(dir / (view.name + ".dpf"));
  if (depth.disparity) {
    for (float& d : depth.values.pixels()) d = d > 0.0f ? 1.0f / d : 0.0f;
  }
  frame.depth = std::move(depth.values);
  frame.intrinsics = view.camera.intrinsics;
  frame.pose = view.camera.pose;
  frame.index = index;
  frame.validate();
  return frame;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& document) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << document.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

}  // namespace viewstyle
