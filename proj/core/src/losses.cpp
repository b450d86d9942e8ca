// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/losses.hpp"

#include <cmath>

namespace viewstyle {

namespace {

double l1_difference(const Eigen::Vector3f& a, const Eigen::Vector3f& b) {
  return (a.cast<double>() - b.cast<double>()).cwiseAbs().sum();
}

}  // namespace

void LossWeights::validate() const {
  for (const double w : {lambda_tvl1, lambda_n, lambda_d}) {
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::kInvalidArgument, "loss weights must be finite and >= 0");
  }
}

double tvl1_normals(const NormalMap& normals) {
  double total = 0.0;
  for (int v = 0; v < normals.height(); ++v) {
    for (int u = 0; u < normals.width(); ++u) {
      if (u + 1 < normals.width()) total += l1_difference(normals(u + 1, v), normals(u, v));
      if (v + 1 < normals.height()) total += l1_difference(normals(u, v + 1), normals(u, v));
    }
  }
  return total;
}

double scale_invariant_depth_loss(const DepthMap& pred, const DepthMap& gt, const ValidityMask& mask, double lambda) {
  if (!pred.same_shape(gt) || !pred.same_shape(mask)) {
    throw Error(ErrorCode::kDimensionMismatch, "depth loss rasters differ in size");
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0) continue;
    if (!(pred[i] > 0.0f) || !(gt[i] > 0.0f) || !std::isfinite(pred[i]) || !std::isfinite(gt[i])) {
      throw Error(ErrorCode::kNonPositiveDepth, "depth loss needs positive depths on the mask");
    }
    const double d = std::log(static_cast<double>(pred[i])) - std::log(static_cast<double>(gt[i]));
    sum += d;
    sum_sq += d * d;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyMask, "depth loss mask is empty");
  const double mean = sum / static_cast<double>(n);
  return sum_sq / static_cast<double>(n) - lambda * mean * mean;
}

double normal_dot_loss(const NormalMap& normals, const NormalMap& reference, const std::optional<ValidityMask>& mask) {
  if (!normals.same_shape(reference) || (mask && !normals.same_shape(*mask))) {
    throw Error(ErrorCode::kDimensionMismatch, "normal loss rasters differ in size");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (mask && (*mask)[i] == 0) continue;
    total += normals[i].cast<double>().dot(reference[i].cast<double>());
  }
  return -total;
}

double total_loss(double photometric, double tvl1, double normal, double depth, const LossWeights& weights) {
  weights.validate();
  return photometric + weights.lambda_tvl1 * tvl1 + weights.lambda_n * normal + weights.lambda_d * depth;
}

}  // namespace viewstyle
