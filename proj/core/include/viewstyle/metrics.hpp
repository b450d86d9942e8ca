// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "viewstyle/warp.hpp"

namespace viewstyle {

/// Per-pixel feature maps for the feature-distance metric. A pretrained
/// network can be bridged in by implementing this interface.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int channels() const = 0;
  virtual ChannelRaster extract(const ColorImage& rgb) const = 0;
  /// Whether features are scaled to unit L2 norm per pixel before comparison.
  virtual bool normalize() const { return true; }
};

class IdentityExtractor final : public FeatureExtractor {
 public:
  int channels() const override { return 3; }
  ChannelRaster extract(const ColorImage& rgb) const override;
};

/// Per color channel: value, |d/du|, |d/dv| (central differences, clamped at
/// the border) and the standard deviation over the in-bounds 3x3 patch.
/// Channel 4c + k holds feature k of color c.
class GradientPatchExtractor final : public FeatureExtractor {
 public:
  int channels() const override { return 12; }
  ChannelRaster extract(const ColorImage& rgb) const override;
};

/// Scales every pixel's feature vector to unit L2 norm; zero vectors stay zero.
ChannelRaster normalize_channels(const ChannelRaster& features);

/// Warps frame i into frame j's camera and returns the RGB RMSE over the
/// warp's validity mask. Throws kEmptyValidity if nothing is covered.
double sequential_rmse(const RgbdFrame& frame_i, const RgbdFrame& frame_j, const WarpOptions& options = {});

/// Same geometry as sequential_rmse, applied to extracted features.
double sequential_feature_distance(const RgbdFrame& frame_i, const RgbdFrame& frame_j,
                                   const FeatureExtractor& extractor, const WarpOptions& options = {});

/// Halfway view: midpoint position, slerp(0.5) orientation, averaged
/// intrinsics. Empty when the orientations differ by more than 90 degrees.
std::optional<Camera> interpolate_eval_views(const Camera& a, const Camera& b);

/// Index of the candidate whose position is closest to the query; ties go to
/// the smaller rotation angle, then the lower index. Throws kInvalidArgument
/// for an empty candidate list.
std::size_t nearest_view(const Pose& query, std::span<const Pose> candidates);

/// Midpoints of consecutive views (rejected pairs skipped), thinned to at most
/// `cap` views by a uniform stride.
std::vector<Camera> select_eval_views(std::span<const Camera> views, std::size_t cap = 100);

}  // namespace viewstyle
