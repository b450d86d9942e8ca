// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "viewstyle/warp.hpp"

namespace viewstyle {

struct CompositeWeights {
  double lambda1 = 1.0;   // viewing-angle reward
  double lambda2 = 3.0;   // occlusion-ratio penalty
  double lambda3 = 0.02;  // reference-age reward

  bool operator==(const CompositeWeights&) const = default;
};

/// S = l1 |sin(theta)| - l2 (d_warp / d_target) + l3 (idx_target - idx_ref).
/// Throws kNonPositiveDepth if d_target <= 0 and kBadIndexOrder if the
/// reference comes after the target.
double compositing_score(double theta, double d_warp, double d_target, int idx_target, int idx_ref,
                         const CompositeWeights& weights);

/// Median of the values; the mean of the two middle elements for even counts.
/// Throws kEmptyMask on empty input.
double median(std::vector<double> values);

/// median(ref / pred) over the mask. Throws kEmptyMask if no masked pixel has
/// usable depth on both sides.
double median_scale(const DepthMap& pred, const DepthMap& ref, const ValidityMask& mask);

/// Pixels of `region` within Chebyshev distance band_px of a pixel outside it.
/// The raster border does not count as outside.
ValidityMask boundary_band(const ValidityMask& region, int band_px);

/// Scale for the warped depth: median(target / warped) over the boundary band
/// of the warp's validity, or over all valid pixels when the band is empty.
/// Throws kEmptyValidity when no pixel has usable depth on both sides.
double align_composite_depth(const WarpResult& warped, const RgbdFrame& target, int band_px = 3);

struct CompositeReference {
  const WarpResult* warp = nullptr;
  Eigen::Vector3d look_at = Eigen::Vector3d::UnitZ();  // reference camera, world frame
  int index = 0;                                       // reference position in the trajectory
};

struct CompositeOptions {
  CompositeWeights weights;
  /// Warped pixel is used iff its score exceeds this.
  double threshold = 0.0;
  int band_px = 3;
};

struct CompositeFrame {
  ColorImage rgb;
  DepthMap depth;
  ValidityMask source_mask;           // 1 = pixel from a warped stylized reference
  Grid<std::int8_t> source_reference; // which reference, -1 for target pixels
  CompositeWeights weights;
  std::vector<double> depth_scales;   // per reference
};

/// Per pixel: the reference with the highest score wins if that score exceeds
/// the threshold, otherwise the target pixel is kept. Each reference's depth is
/// aligned to the target before scoring. Target depth holes take the best
/// covering reference unconditionally.
CompositeFrame build_composite(std::span<const CompositeReference> references, const RgbdFrame& target,
                               const CompositeOptions& options = {});

}  // namespace viewstyle
