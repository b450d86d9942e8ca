// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/composite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "viewstyle/parallel.hpp"

namespace viewstyle {

double compositing_score(double theta, double d_warp, double d_target, int idx_target, int idx_ref,
                         const CompositeWeights& weights) {
  if (!(d_target > 0.0)) throw Error(ErrorCode::kNonPositiveDepth, "target depth must be positive");
  if (idx_target < idx_ref) {
    throw Error(ErrorCode::kBadIndexOrder, "reference index must not exceed target index");
  }
  return weights.lambda1 * std::abs(std::sin(theta)) - weights.lambda2 * (d_warp / d_target) +
         weights.lambda3 * static_cast<double>(idx_target - idx_ref);
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyMask, "median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double median_scale(const DepthMap& pred, const DepthMap& ref, const ValidityMask& mask) {
  if (!pred.same_shape(ref) || !pred.same_shape(mask)) {
    throw Error(ErrorCode::kDimensionMismatch, "median_scale rasters differ in size");
  }
  std::vector<double> ratios;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0 || !valid_depth(pred[i]) || !valid_depth(ref[i])) continue;
    ratios.push_back(static_cast<double>(ref[i]) / static_cast<double>(pred[i]));
  }
  if (ratios.empty()) throw Error(ErrorCode::kEmptyMask, "median_scale mask selects no usable pixel");
  return median(std::move(ratios));
}

ValidityMask boundary_band(const ValidityMask& region, int band_px) {
  if (band_px < 0) throw Error(ErrorCode::kInvalidArgument, "band width must be non-negative");
  const int w = region.width();
  const int h = region.height();
  ValidityMask band(w, h, 0);
  parallel_for(0, h, [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < w; ++u) {
      if (region(u, v) == 0) continue;
      bool near_outside = false;
      for (int dv = -band_px; dv <= band_px && !near_outside; ++dv) {
        for (int du = -band_px; du <= band_px; ++du) {
          const int x = u + du;
          const int y = v + dv;
          if (region.contains(x, y) && region(x, y) == 0) {
            near_outside = true;
            break;
          }
        }
      }
      band(u, v) = near_outside ? 1 : 0;
    }
  });
  return band;
}

double align_composite_depth(const WarpResult& warped, const RgbdFrame& target, int band_px) {
  if (!warped.depth.same_shape(target.depth)) {
    throw Error(ErrorCode::kDimensionMismatch, "warp and target rasters differ in size");
  }
  ValidityMask usable(target.width(), target.height(), 0);
  for (std::size_t i = 0; i < usable.size(); ++i) {
    usable[i] = (warped.validity[i] != 0 && valid_depth(warped.depth[i]) && valid_depth(target.depth[i])) ? 1 : 0;
  }
  if (count_true(usable) == 0) {
    throw Error(ErrorCode::kEmptyValidity, "no pixel with usable depth in both warp and target");
  }
  const ValidityMask band = boundary_band(warped.validity, band_px);
  ValidityMask band_usable(usable.width(), usable.height(), 0);
  for (std::size_t i = 0; i < band.size(); ++i) band_usable[i] = (band[i] != 0 && usable[i] != 0) ? 1 : 0;
  if (count_true(band_usable) == 0) return median_scale(warped.depth, target.depth, usable);
  return median_scale(warped.depth, target.depth, band_usable);
}

CompositeFrame build_composite(std::span<const CompositeReference> references, const RgbdFrame& target,
                               const CompositeOptions& options) {
  const int w = target.width();
  const int h = target.height();
  CompositeFrame out;
  out.rgb = target.rgb;
  out.depth = target.depth;
  out.source_mask = ValidityMask(w, h, 0);
  out.source_reference = Grid<std::int8_t>(w, h, -1);
  out.weights = options.weights;

  std::vector<const CompositeReference*> usable;
  for (const CompositeReference& ref : references) {
    if (ref.warp == nullptr) throw Error(ErrorCode::kInvalidArgument, "composite reference without a warp");
    if (ref.warp->depth.width() != w || ref.warp->depth.height() != h) {
      throw Error(ErrorCode::kDimensionMismatch, "warp does not target this frame");
    }
    if (ref.index > target.index) {
      throw Error(ErrorCode::kBadIndexOrder, "reference index must not exceed target index");
    }
    double scale = std::numeric_limits<double>::quiet_NaN();
    if (count_true(ref.warp->validity) > 0) {
      try {
        scale = align_composite_depth(*ref.warp, target, options.band_px);
      } catch (const Error& e) {
        // All warped pixels land on target holes: nothing to align against.
        if (e.code() != ErrorCode::kEmptyValidity) throw;
        scale = 1.0;
      }
      usable.push_back(&ref);
    }
    out.depth_scales.push_back(scale);
  }
  if (usable.empty()) return out;

  std::vector<double> scales;
  for (const CompositeReference* ref : usable) {
    scales.push_back(out.depth_scales[static_cast<std::size_t>(ref - references.data())]);
  }

  parallel_for(0, h, [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < w; ++u) {
      const std::size_t idx = out.depth.index(u, v);
      const float d_target = target.depth[idx];
      const bool target_hole = !valid_depth(d_target);
      int best = -1;
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < usable.size(); ++r) {
        const WarpResult& warp = *usable[r]->warp;
        if (warp.validity[idx] == 0) continue;
        const double d_warp = static_cast<double>(warp.depth[idx]) * scales[r];
        double score = 0.0;
        if (target_hole) {
          score = -d_warp;  // nearest covering surface
        } else {
          const Eigen::Vector3d n = warp.surface_normal[idx].cast<double>();
          const double cos_theta = std::clamp(n.dot(usable[r]->look_at), -1.0, 1.0);
          score = compositing_score(std::acos(cos_theta), d_warp, d_target, target.index, usable[r]->index,
                                    options.weights);
        }
        if (score > best_score) {
          best_score = score;
          best = static_cast<int>(r);
        }
      }
      if (best < 0) continue;
      if (!target_hole && !(best_score > options.threshold)) continue;
      const WarpResult& warp = *usable[static_cast<std::size_t>(best)]->warp;
      out.rgb[idx] = warp.rgb[idx];
      out.depth[idx] = static_cast<float>(static_cast<double>(warp.depth[idx]) * scales[static_cast<std::size_t>(best)]);
      out.source_mask[idx] = 1;
      out.source_reference[idx] =
          static_cast<std::int8_t>(usable[static_cast<std::size_t>(best)] - references.data());
    }
  });
  return out;
}

}  // namespace viewstyle
