// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "viewstyle/warp.hpp"

namespace viewstyle {

/// Layers eligible for feature injection: all but the first `skip_first` and
/// the last `skip_last`.
struct InjectLayerPolicy {
  int skip_first = 2;
  int skip_last = 3;

  bool allows(int layer, int num_layers) const noexcept {
    return layer >= skip_first && layer < num_layers - skip_last;
  }
};

struct AttentionConfig {
  double lambda_self = 0.5;
  double l_min = 0.5;
  double d_max = 100.0;  // pixels
  double lambda_inject = 0.15;
  double temperature = 0.001;
  InjectLayerPolicy inject_layers;

  void validate() const;
};

enum class KernelCombine {
  kSum,  // true convolution: overlapping cones add
  kMax,  // overlapping cones take the maximum
};

struct HeatmapParams {
  double d_max = 100.0;
  double l_min = 0.5;
  KernelCombine combine = KernelCombine::kSum;
  bool clamp_upper = true;  // clamp L to at most 1 after the blur

  void validate() const;
};

struct TokenGrid {
  int width = 0;
  int height = 0;

  int count() const noexcept { return width * height; }
  bool operator==(const TokenGrid&) const = default;
};

/// Largest token count a dense heatmap axis may have (64 x 64).
inline constexpr int kMaxDenseTokens = 4096;

/// Reference pixel (u, v) forward-warps to target pixel (target_u, target_v).
struct Correspondence {
  int u = 0;
  int v = 0;
  int target_u = 0;
  int target_v = 0;
};

/// Dense L at attention resolution: rows are target tokens, columns are
/// reference tokens, both in row-major token order.
struct DenseHeatmap {
  TokenGrid target;
  TokenGrid reference;
  Eigen::MatrixXd values;
};

struct AttentionHeatmap {
  int reference_width = 0;
  int reference_height = 0;
  int target_width = 0;
  int target_height = 0;
  HeatmapParams params;
  std::vector<Correspondence> correspondences;  // reference raster order
  std::optional<DenseHeatmap> dense;
};

/// Linear-decay blur kernel max(1 - |(du, dv)| / d_max, 0).
inline double heatmap_kernel(double du, double dv, double d_max) {
  return std::max(1.0 - std::sqrt(du * du + dv * dv) / d_max, 0.0);
}

/// Pixel window [begin, end) of token `i` when `pixels` are pooled into
/// `tokens` (adaptive pooling: floor(i P / T) to ceil((i + 1) P / T)).
std::pair<int, int> pool_window(int i, int pixels, int tokens);

/// Unoccluded flow entries, rounded to the nearest target pixel.
AttentionHeatmap correspondences_from_flow(const FlowField& flow, const HeatmapParams& params);

/// Dense L' for the given token grids: the reference delta field is blurred
/// with the kernel, clamped to [l_min, 1] (upper bound optional), then
/// max-pooled over reference windows and target windows. Computed from the
/// correspondence list without materializing the full-resolution 4D tensor.
/// Throws kInvalidArgument if either grid exceeds kMaxDenseTokens or the
/// full resolution.
DenseHeatmap materialize_heatmap(const AttentionHeatmap& heatmap, TokenGrid target, TokenGrid reference);

/// correspondences_from_flow + materialize_heatmap.
AttentionHeatmap build_heatmap(const FlowField& flow, const HeatmapParams& params, TokenGrid target,
                               TokenGrid reference);

struct AttentionReference {
  const Eigen::MatrixXd& keys;     // m x d
  const Eigen::MatrixXd& values;   // m x dv
  const Eigen::MatrixXd& heatmap;  // n x m, entries > 0
};

/// softmax(Q [K_self, K_ref]^T / sqrt(d) + log Delta) [V_self, V_ref], where
/// Delta is lambda_self on self keys and the heatmap on reference keys.
Eigen::MatrixXd biased_attention(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& self_keys,
                                 const Eigen::MatrixXd& self_values,
                                 std::span<const AttentionReference> references, double lambda_self);

/// Concatenates per-reference heatmaps along the reference-token axis.
Eigen::MatrixXd stack_heatmaps(std::span<const Eigen::MatrixXd> heatmaps);

/// Row-wise softmax(L / T) over the reference axis. With T < 1e-6 and a gap
/// above 1e-3 between the two largest entries the row becomes one-hot.
Eigen::MatrixXd mixing_matrix(const Eigen::MatrixXd& heatmap, double temperature);

/// w_j = max_i L_ji * lambda_inject.
Eigen::VectorXd injection_weights(const Eigen::MatrixXd& heatmap, double lambda_inject);

/// h'_j = (1 - w_j) h_j + w_j sum_i M_ji h_ref_i. Throws kWeightOutOfRange for
/// weights outside [0, 1].
Eigen::MatrixXd inject_features(const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& reference_hidden,
                                const Eigen::MatrixXd& mixing, const Eigen::VectorXd& weights);

}  // namespace viewstyle
