// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/datagen.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Geometry>

#include "viewstyle/composite.hpp"
#include "viewstyle/parallel.hpp"
#include "viewstyle/pipeline.hpp"

namespace viewstyle {

namespace {

constexpr std::uint64_t kOffsetStream = 0x0ff5e7;

Eigen::Vector3d random_direction(std::uint64_t seed, int input, int view, std::uint64_t slot) {
  Eigen::Vector3d d;
  do {
    for (int i = 0; i < 3; ++i) {
      d[i] = counter_normal(seed ^ kOffsetStream, static_cast<std::uint64_t>(input),
                            static_cast<std::uint64_t>(view), slot++);
    }
  } while (d.norm() < 1e-12);
  return d.normalized();
}

double median_depth(const DepthMap& depth) {
  std::vector<double> values;
  for (const float d : depth.pixels()) {
    if (valid_depth(d)) values.push_back(d);
  }
  return median(std::move(values));
}

}  // namespace

void DatagenOptions::validate() const {
  if (views_per_input < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one view per input");
  if (!(translation_ratio >= 0.0) || !(max_rotation_degrees >= 0.0) || !(min_validity >= 0.0 && min_validity <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad datagen options");
  }
  strengths.validate();
}

Pose random_camera_offset(std::uint64_t seed, int input, int view, double radius, double max_angle) {
  const Eigen::Vector3d direction = random_direction(seed, input, view, 0);
  const double r = radius * std::cbrt(counter_uniform(seed ^ kOffsetStream, static_cast<std::uint64_t>(input),
                                                      static_cast<std::uint64_t>(view), 100));
  const Eigen::Vector3d axis = random_direction(seed, input, view, 200);
  const double angle = max_angle * counter_uniform(seed ^ kOffsetStream, static_cast<std::uint64_t>(input),
                                                   static_cast<std::uint64_t>(view), 300);
  return Pose(Eigen::AngleAxisd(angle, axis).toRotationMatrix(), r * direction);
}

TrainingPair make_training_pair(const RgbdFrame& input, const RgbdFrame& stylized, const Pose& offset,
                                const WarpOptions& warp, int band_px) {
  TrainingPair pair;
  pair.offset = offset;
  pair.stylized = stylized.rgb;
  pair.stylized_depth = stylized.depth;

  const Camera away{stylized.intrinsics, stylized.pose * offset};
  const WarpResult out = warp_frame(stylized, away, warp);
  RgbdFrame moved;
  moved.rgb = out.rgb;
  moved.depth = out.depth;
  for (std::size_t i = 0; i < moved.depth.size(); ++i) {
    if (out.validity[i] == 0) moved.depth[i] = 0.0f;
  }
  moved.intrinsics = away.intrinsics;
  moved.pose = away.pose;
  moved.index = stylized.index;
  const WarpResult back = warp_frame(moved, stylized.camera(), warp);

  pair.warped = back.rgb;
  pair.warped_depth = back.depth;
  pair.validity = back.validity;
  pair.mask = back.validity;
  pair.composite = input.rgb;
  pair.composite_depth = input.depth;
  if (count_true(back.validity) == 0) return pair;
  try {
    pair.depth_scale = align_composite_depth(back, input, band_px);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyValidity) throw;
  }
  for (std::size_t i = 0; i < pair.mask.size(); ++i) {
    if (pair.mask[i] == 0) continue;
    pair.composite[i] = back.rgb[i];
    pair.composite_depth[i] = static_cast<float>(static_cast<double>(back.depth[i]) * pair.depth_scale);
  }
  return pair;
}

DatagenResult synthesize_controlnet_pairs(std::span<const RgbdFrame> inputs, const DatagenOptions& options) {
  options.validate();
  struct Slot {
    std::vector<TrainingPair> pairs;
    std::vector<SkippedPair> skipped;
  };
  std::vector<Slot> slots(inputs.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(inputs.size()), [&](std::ptrdiff_t i) {
    const RgbdFrame& input = inputs[static_cast<std::size_t>(i)];
    const int index = static_cast<int>(i);
    MockStylizer stylizer(options.stylizer);
    RgbdFrame source = input;
    source.index = index;
    const RgbdFrame stylized =
        stylize_frame(source, stylizer, options.strengths, options.grid_steps, options.seed + static_cast<std::uint64_t>(i));
    const double radius = options.translation_ratio * median_depth(input.depth);
    const double max_angle = options.max_rotation_degrees * std::numbers::pi / 180.0;
    Slot& slot = slots[static_cast<std::size_t>(i)];
    for (int view = 0; view < options.views_per_input; ++view) {
      const Pose offset = random_camera_offset(options.seed, index, view, radius, max_angle);
      TrainingPair pair = make_training_pair(source, stylized, offset, options.warp, options.band_px);
      const double coverage = static_cast<double>(count_true(pair.validity)) / static_cast<double>(pair.validity.size());
      if (coverage < options.min_validity) {
        slot.skipped.push_back(SkippedPair{index, view, coverage});
        continue;
      }
      pair.input = index;
      pair.view = view;
      slot.pairs.push_back(std::move(pair));
    }
  });
  DatagenResult result;
  for (Slot& slot : slots) {
    for (TrainingPair& p : slot.pairs) result.pairs.push_back(std::move(p));
    for (const SkippedPair& s : slot.skipped) result.skipped.push_back(s);
  }
  return result;
}

}  // namespace viewstyle
