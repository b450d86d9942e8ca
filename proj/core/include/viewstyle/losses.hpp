// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "viewstyle/raster.hpp"

namespace viewstyle {

struct LossWeights {
  double lambda_tvl1 = 0.05;
  double lambda_n = 0.001;
  double lambda_d = 0.5;

  void validate() const;
};

/// L1 total variation of a normal map: sum over horizontally and vertically
/// adjacent pixel pairs of the L1 norm of their difference.
double tvl1_normals(const NormalMap& normals);

/// Log-space depth loss over the mask: mean(d^2) - lambda * mean(d)^2 with
/// d = log(pred) - log(gt). lambda = 1 makes it invariant to global scale.
/// Throws kEmptyMask, kNonPositiveDepth, kDimensionMismatch.
double scale_invariant_depth_loss(const DepthMap& pred, const DepthMap& gt, const ValidityMask& mask,
                                  double lambda = 1.0);

/// -sum of n . n_gt over the mask (all pixels when no mask is given).
double normal_dot_loss(const NormalMap& normals, const NormalMap& reference,
                       const std::optional<ValidityMask>& mask = std::nullopt);

/// phot + lambda_tvl1 tvl1 + lambda_n n + lambda_d d.
double total_loss(double photometric, double tvl1, double normal, double depth, const LossWeights& weights = {});

}  // namespace viewstyle
