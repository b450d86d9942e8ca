// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "viewstyle/attention.hpp"
#include "viewstyle/composite.hpp"
#include "viewstyle/schedule.hpp"
#include "viewstyle/stylizer.hpp"
#include "viewstyle/warp.hpp"

namespace viewstyle {

/// Which previously stylized frames condition frame k.
struct ReferencePolicy {
  bool first = true;     // frame 0
  bool previous = true;  // frame k - 1

  std::vector<int> references(int k) const;
};

struct PipelineConfig {
  std::filesystem::path trajectory;  // paths are not part of the config hash
  std::filesystem::path inputs;
  std::filesystem::path output;

  int width = 512;
  int height = 512;
  std::uint64_t seed = 0;
  bool propagate = true;  // false: every frame stylized independently
  StyleStrength strengths;
  AttentionConfig attention;
  CompositeOptions composite;
  WarpOptions warp;
  ReferencePolicy references;
  TokenGrid tokens{32, 32};
  int grid_steps = 50;
  MockStylizerParams stylizer;

  void validate() const;
  HeatmapParams heatmap_params() const;
};

nlohmann::json config_to_json(const PipelineConfig& config);
/// Missing keys keep their defaults. Throws kParseError.
PipelineConfig config_from_json(const nlohmann::json& document);
/// SHA-256 of the canonical JSON of every setting except the paths.
std::string config_hash(const PipelineConfig& config);

struct FrameReport {
  int index = 0;
  std::vector<int> references;
  std::size_t composite_pixels = 0;
  double depth_scale = 1.0;
  double seq_rmse = 0.0;  // against the previous stylized frame; NaN for frame 0
};

struct PipelineResult {
  std::vector<RgbdFrame> frames;
  std::vector<FrameReport> reports;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string output_hash;  // SHA-256 over every output raster
  double mean_seq_rmse = 0.0;

  nlohmann::json manifest() const;
};

using FrameCallback = std::function<void(const RgbdFrame&, const FrameReport&)>;

/// One stylization pass for a frame without references: partial inversion,
/// denoising, decoding and depth rescaling against the input depth.
RgbdFrame stylize_frame(const RgbdFrame& input, Denoiser& denoiser, const StyleStrength& strengths, int grid_steps,
                        std::uint64_t seed);

/// Stylizes frames in order. Frame 0 sees no references; frame k is
/// conditioned on warps of the stylized reference frames (composite,
/// heatmaps, cached latents). `on_frame` runs after each frame, so outputs
/// written there survive a later failure, which is rethrown as kFrameFailed
/// naming the frame.
PipelineResult run_pipeline(std::span<const RgbdFrame> inputs, const PipelineConfig& config, Denoiser& denoiser,
                            const FrameCallback& on_frame = {});
/// Same, with a MockStylizer built from config.stylizer.
PipelineResult run_pipeline(std::span<const RgbdFrame> inputs, const PipelineConfig& config,
                            const FrameCallback& on_frame = {});

/// SHA-256 over the RGB and depth payloads of the frames, in order.
std::string frames_hash(std::span<const RgbdFrame> frames);

}  // namespace viewstyle
