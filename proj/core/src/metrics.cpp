// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include <Eigen/Geometry>

namespace viewstyle {

namespace {

double masked_rmse(const ChannelRaster& a, const ChannelRaster& b, const ValidityMask& mask) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int v = 0; v < mask.height(); ++v) {
    for (int u = 0; u < mask.width(); ++u) {
      if (mask(u, v) == 0) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = static_cast<double>(a.at(u, v, c)) - static_cast<double>(b.at(u, v, c));
        sum += d * d;
      }
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::kEmptyValidity, "warp covers no target pixel");
  return std::sqrt(sum / (static_cast<double>(n) * a.channels()));
}

}  // namespace

ChannelRaster IdentityExtractor::extract(const ColorImage& rgb) const { return to_channels(rgb); }

ChannelRaster GradientPatchExtractor::extract(const ColorImage& rgb) const {
  const int w = rgb.width();
  const int h = rgb.height();
  ChannelRaster out(w, h, channels());
  auto sample = [&](int u, int v, int c) {
    return static_cast<double>(rgb(std::clamp(u, 0, w - 1), std::clamp(v, 0, h - 1))[c]);
  };
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        double sum_sq = 0.0;
        int n = 0;
        for (int dv = -1; dv <= 1; ++dv) {
          for (int du = -1; du <= 1; ++du) {
            if (!rgb.contains(u + du, v + dv)) continue;
            const double x = rgb(u + du, v + dv)[c];
            sum += x;
            sum_sq += x * x;
            ++n;
          }
        }
        const double mean = sum / n;
        out.at(u, v, 4 * c + 0) = rgb(u, v)[c];
        out.at(u, v, 4 * c + 1) = static_cast<float>(std::abs(sample(u + 1, v, c) - sample(u - 1, v, c)) / 2.0);
        out.at(u, v, 4 * c + 2) = static_cast<float>(std::abs(sample(u, v + 1, c) - sample(u, v - 1, c)) / 2.0);
        out.at(u, v, 4 * c + 3) = static_cast<float>(std::sqrt(std::max(sum_sq / n - mean * mean, 0.0)));
      }
    }
  }
  return out;
}

ChannelRaster normalize_channels(const ChannelRaster& features) {
  ChannelRaster out = features;
  for (int v = 0; v < out.height(); ++v) {
    for (int u = 0; u < out.width(); ++u) {
      auto px = out.pixel(u, v);
      double norm = 0.0;
      for (const float x : px) norm += static_cast<double>(x) * x;
      norm = std::sqrt(norm);
      if (!(norm > 0.0)) continue;
      for (float& x : px) x = static_cast<float>(x / norm);
    }
  }
  return out;
}

double sequential_rmse(const RgbdFrame& frame_i, const RgbdFrame& frame_j, const WarpOptions& options) {
  const WarpResult warp = warp_frame(frame_i, frame_j.camera(), options);
  return masked_rmse(to_channels(warp.rgb), to_channels(frame_j.rgb), warp.validity);
}

double sequential_feature_distance(const RgbdFrame& frame_i, const RgbdFrame& frame_j,
                                   const FeatureExtractor& extractor, const WarpOptions& options) {
  ChannelRaster fi = extractor.extract(frame_i.rgb);
  ChannelRaster fj = extractor.extract(frame_j.rgb);
  if (extractor.normalize()) {
    fi = normalize_channels(fi);
    fj = normalize_channels(fj);
  }
  const MeshWarp warp = warp_frame_with_mesh(frame_i, frame_j.camera(), options);
  const ChannelRaster warped = resample(warp.mesh, warp.result, fi);
  return masked_rmse(warped, fj, warp.result.validity);
}

std::optional<Camera> interpolate_eval_views(const Camera& a, const Camera& b) {
  const Eigen::Matrix3d ra = a.pose.rotation();
  const Eigen::Matrix3d rb = b.pose.rotation();
  if (rotation_angle_between(ra, rb) > std::numbers::pi / 2.0) return std::nullopt;
  if (a.intrinsics.width != b.intrinsics.width || a.intrinsics.height != b.intrinsics.height) {
    throw Error(ErrorCode::kDimensionMismatch, "views have different raster sizes");
  }
  Eigen::Quaterniond qa(ra);
  Eigen::Quaterniond qb(rb);
  // Align hemispheres symmetrically so that swapping a and b only flips the
  // sign of the sum, which maps to the same rotation matrix.
  if (qa.coeffs().dot(qb.coeffs()) < 0.0) {
    if (std::make_tuple(qa.w(), qa.x(), qa.y(), qa.z()) < std::make_tuple(qb.w(), qb.x(), qb.y(), qb.z())) {
      qa.coeffs() = -qa.coeffs();
    } else {
      qb.coeffs() = -qb.coeffs();
    }
  }
  Eigen::Quaterniond mid;
  mid.coeffs() = qa.coeffs() + qb.coeffs();
  mid.normalize();
  const Eigen::Vector3d position = 0.5 * (a.pose.translation() + b.pose.translation());

  Camera out;
  out.pose = Pose(mid.toRotationMatrix(), position);
  out.intrinsics = a.intrinsics;
  out.intrinsics.fx = 0.5 * (a.intrinsics.fx + b.intrinsics.fx);
  out.intrinsics.fy = 0.5 * (a.intrinsics.fy + b.intrinsics.fy);
  out.intrinsics.cx = 0.5 * (a.intrinsics.cx + b.intrinsics.cx);
  out.intrinsics.cy = 0.5 * (a.intrinsics.cy + b.intrinsics.cy);
  return out;
}

std::size_t nearest_view(const Pose& query, std::span<const Pose> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "no candidate views");
  std::size_t best = 0;
  double best_distance = std::numeric_limits<double>::infinity();
  double best_angle = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double distance = (candidates[i].translation() - query.translation()).norm();
    const double angle = rotation_angle_between(candidates[i].rotation(), query.rotation());
    if (distance < best_distance || (distance == best_distance && angle < best_angle)) {
      best = i;
      best_distance = distance;
      best_angle = angle;
    }
  }
  return best;
}

std::vector<Camera> select_eval_views(std::span<const Camera> views, std::size_t cap) {
  std::vector<Camera> mids;
  for (std::size_t i = 0; i + 1 < views.size(); ++i) {
    if (auto mid = interpolate_eval_views(views[i], views[i + 1])) mids.push_back(*mid);
  }
  if (mids.size() <= cap) return mids;
  std::vector<Camera> out;
  out.reserve(cap);
  for (std::size_t k = 0; k < cap; ++k) out.push_back(mids[k * mids.size() / cap]);
  return out;
}

}  // namespace viewstyle
