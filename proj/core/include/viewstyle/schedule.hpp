// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "viewstyle/attention.hpp"
#include "viewstyle/raster.hpp"

namespace viewstyle {

/// Latents are 8-channel rasters: RGB, disparity, the two channel masks and
/// two reserved channels. No learned encoder sits in between.
namespace latent {
inline constexpr int kChannels = 8;
inline constexpr int kRed = 0;
inline constexpr int kGreen = 1;
inline constexpr int kBlue = 2;
inline constexpr int kDisparity = 3;
inline constexpr int kMaskRgb = 4;
inline constexpr int kMaskDepth = 5;
}  // namespace latent

using Latent = ChannelRaster;

/// Style strengths as normalized timesteps in [0, 1].
struct StyleStrength {
  double t_rgb_max = 0.5;
  double t_depth_max = 0.5;
  double t_noise = 0.05;

  /// Requires all values in [0, 1] and t_noise <= min(t_rgb_max, t_depth_max)
  /// whenever both maxima are positive.
  void validate() const;
  double upper() const noexcept { return std::max(t_rgb_max, t_depth_max); }
  double lower() const noexcept { return std::min(t_rgb_max, t_depth_max); }
};

struct ChannelMasks {
  bool rgb = false;
  bool depth = false;
  double t = 0.0;
};

/// rgb = (t <= t_rgb_max), depth = (t <= t_depth_max).
ChannelMasks channel_masks(double t, const StyleStrength& strengths);

/// Replaces the RGB group and/or the disparity group of `latent` with the
/// proposal according to the masks. Other channels are left untouched.
/// Throws kShapeMismatch if the rasters differ in shape.
void gated_update(Latent& latent, const Latent& proposed, const ChannelMasks& masks);

/// Variance-preserving cosine schedule over t in [0, 1]:
/// alpha_bar(t) = cos^2(((t + s) / (1 + s)) pi / 2) / cos^2((s / (1 + s)) pi / 2),
/// floored so that the terminal step stays invertible.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(double offset = 0.008, double floor = 1e-4);

  double alpha_bar(double t) const;

 private:
  double offset_;
  double floor_;
  double norm_;
};

/// Descending timesteps from 1 to 0.
struct TimestepGrid {
  std::vector<double> timesteps;

  static TimestepGrid uniform(int steps = 50);
  void validate() const;
};

/// Deterministic DDIM move from t_from to t_to for the given noise estimate;
/// works in either direction.
Latent ddim_step(const Latent& x, const Latent& noise, double t_from, double t_to, const NoiseSchedule& schedule);

/// Noise estimate implied by a clean-sample prediction. Zero where
/// 1 - alpha_bar(t) vanishes.
Latent noise_from_clean(const Latent& x, const Latent& clean, double t, const NoiseSchedule& schedule);

/// Standard normal sample from a stateless counter-based generator: the key
/// (seed, frame, step, index) is folded through SplitMix64 finalizers and the
/// two resulting 53-bit uniforms go through Box-Muller.
double counter_normal(std::uint64_t seed, std::uint64_t frame, std::uint64_t step, std::uint64_t index);
/// Uniform [0, 1) sample from the same generator (first uniform only).
double counter_uniform(std::uint64_t seed, std::uint64_t frame, std::uint64_t step, std::uint64_t index);

/// Write-once store of intermediate latents keyed by (frame, timestep).
/// Safe for concurrent readers.
class LatentCache {
 public:
  /// Throws kCacheConflict if the key already exists.
  void put(int frame, double t, const Latent& latent);
  std::shared_ptr<const Latent> get(int frame, double t) const;
  /// Entry of `frame` with the timestep closest to t, or nullptr.
  std::shared_ptr<const Latent> nearest(int frame, double t) const;
  std::size_t size() const;
  std::size_t count(int frame) const;
  /// Drops every entry of a frame that no later frame will read. Pointers
  /// already handed out stay valid.
  void evict(int frame);

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::pair<int, double>, std::shared_ptr<const Latent>> entries_;
};

struct ReferenceConditioning {
  int frame = 0;
  const Latent* source = nullptr;  // encoded unstylized reference input
  Eigen::MatrixXd heatmap;         // dense L: target tokens x reference tokens
};

/// Everything a denoiser may look at besides the latent itself.
struct Conditioning {
  int frame = 0;
  bool inverting = false;
  StyleStrength strengths;
  const Latent* source = nullptr;             // encoded unstylized target input
  const Latent* composite = nullptr;          // encoded composite, if any
  const ValidityMask* composite_mask = nullptr;
  std::vector<ReferenceConditioning> references;
  TokenGrid tokens;                           // attention resolution of the heatmaps
  const LatentCache* cache = nullptr;
  AttentionConfig attention;
};

/// Noise-predicting model. Implementations must be deterministic for fixed
/// inputs. The latent's mask channels hold the current channel masks.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Latent predict_noise(const Latent& x, double t, const Conditioning& conditioning) = 0;
};

/// Ascending inversion timesteps: t_noise, grid points strictly between
/// t_noise and the larger maximum, the smaller maximum if it falls inside, and
/// the larger maximum. Empty when the larger maximum does not exceed t_noise.
/// Throws kGridTooCoarse when that range would be covered by fewer than two
/// steps.
std::vector<double> inversion_timesteps(const StyleStrength& strengths, const TimestepGrid& grid);

/// Descending denoising timesteps from the larger maximum to 0, with the
/// smaller maximum inserted when positive.
std::vector<double> denoise_timesteps(const StyleStrength& strengths, const TimestepGrid& grid);

struct InversionResult {
  Latent latent;
  std::vector<double> timesteps;
  std::vector<Latent> intermediates;  // latent after noising and after every inversion step
};

/// Gaussian noising of each channel group to t_noise (groups whose maximum is
/// below t_noise are left alone), then DDIM inversion up to each group's own
/// maximum: once a group passes its maximum its updates are discarded.
InversionResult partial_invert(const Latent& clean, Denoiser& denoiser, const StyleStrength& strengths,
                               const TimestepGrid& grid, const NoiseSchedule& schedule,
                               const Conditioning& conditioning, std::uint64_t seed);

/// DDIM denoising along denoise_timesteps with gated updates. Every visited
/// latent, including the final one, is written to `cache` under
/// (conditioning.frame, t) when a cache is given.
Latent denoise(const Latent& noised, Denoiser& denoiser, const StyleStrength& strengths, const TimestepGrid& grid,
               const NoiseSchedule& schedule, const Conditioning& conditioning, LatentCache* cache);

/// stylized * median(rendered / stylized) over the mask.
DepthMap rescale_stylized_depth(const DepthMap& stylized, const DepthMap& rendered, const ValidityMask& mask);

}  // namespace viewstyle
