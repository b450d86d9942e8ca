// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewstyle/frame.hpp"

namespace viewstyle {

/// Largest width or height accepted by the raster readers.
inline constexpr std::uint32_t kMaxRasterSide = 16384;

// Depth files: "DPF1", u32 LE width, u32 LE height, u32 LE flags
// (bit 0 set = disparity), then width*height f32 LE values in row-major order.
struct DepthFile {
  DepthMap values;
  bool disparity = false;
};

std::vector<std::uint8_t> encode_depth(const DepthMap& values, bool disparity = false);
/// Throws kMagicMismatch, kTruncatedFile, kDimensionOverflow.
DepthFile decode_depth(std::span<const std::uint8_t> bytes);
void write_depth(const std::filesystem::path& path, const DepthMap& values, bool disparity = false);
DepthFile read_depth(const std::filesystem::path& path);

/// sRGB transfer functions on [0, 1].
double srgb_from_linear(double linear);
double linear_from_srgb(double encoded);
/// 8-bit sRGB code of a linear value (clamped to [0, 1]).
std::uint8_t srgb_byte(float linear);

/// 8-bit RGB PNG; pixels are converted between linear and sRGB here.
void write_png(const std::filesystem::path& path, const ColorImage& rgb);
ColorImage read_png(const std::filesystem::path& path);

nlohmann::json trajectory_to_json(const Trajectory& trajectory);
/// Throws kParseError for malformed documents or an unknown convention.
Trajectory trajectory_from_json(const nlohmann::json& document);
void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_trajectory(const std::filesystem::path& path);

/// <dir>/<name>.png + <dir>/<name>.dpf.
void write_frame(const std::filesystem::path& dir, const std::string& name, const RgbdFrame& frame);
RgbdFrame read_frame(const std::filesystem::path& dir, const TrajectoryView& view, int index);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& document);

}  // namespace viewstyle
