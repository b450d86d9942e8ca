// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "viewstyle/schedule.hpp"
#include "viewstyle/stylizer.hpp"
#include "viewstyle/warp.hpp"

namespace viewstyle {

struct DatagenOptions {
  int views_per_input = 6;
  double translation_ratio = 0.15;    // ball radius as a fraction of the median depth
  double max_rotation_degrees = 10.0;
  double min_validity = 0.2;          // pairs whose double warp covers less are skipped
  std::uint64_t seed = 0;
  StyleStrength strengths;
  int grid_steps = 50;
  MockStylizerParams stylizer;
  WarpOptions warp;
  int band_px = 3;

  void validate() const;
};

/// Conditioning example: the stylized target, its composite with the
/// unstylized input after a round trip through another camera, and the mask
/// of composite pixels taken from the round trip.
struct TrainingPair {
  int input = 0;
  int view = 0;
  Pose offset;  // second camera relative to the input camera
  ColorImage stylized;
  DepthMap stylized_depth;
  ColorImage warped;  // stylized image after the round trip
  DepthMap warped_depth;
  ValidityMask validity;  // coverage of the round trip
  ColorImage composite;
  DepthMap composite_depth;
  ValidityMask mask;
  double depth_scale = 1.0;
};

struct SkippedPair {
  int input = 0;
  int view = 0;
  double validity = 0.0;  // covered fraction of the raster
};

struct DatagenResult {
  std::vector<TrainingPair> pairs;
  std::vector<SkippedPair> skipped;
};

/// Camera offset with a translation uniform in the ball of the given radius
/// and a rotation about a uniform axis by an angle uniform in [0, max_angle].
Pose random_camera_offset(std::uint64_t seed, int input, int view, double radius, double max_angle);

/// Warps `stylized` to its camera composed with `offset`, back again, and
/// composites the result with `input` (depth aligned on the boundary band).
TrainingPair make_training_pair(const RgbdFrame& input, const RgbdFrame& stylized, const Pose& offset,
                                const WarpOptions& warp, int band_px);

/// Stylizes every input with the mock stylizer and emits views_per_input
/// pairs per input. Inputs are processed in parallel with per-input random
/// streams, so the result does not depend on the thread count.
DatagenResult synthesize_controlnet_pairs(std::span<const RgbdFrame> inputs, const DatagenOptions& options);

}  // namespace viewstyle
