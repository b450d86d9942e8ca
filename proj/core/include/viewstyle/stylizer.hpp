// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "viewstyle/frame.hpp"
#include "viewstyle/schedule.hpp"

namespace viewstyle {

/// RGB and disparity into an 8-channel latent; holes get disparity 0 and the
/// mask/reserved channels start at 0.
Latent encode_latent(const ColorImage& rgb, const DepthMap& depth);
inline Latent encode_latent(const RgbdFrame& frame) { return encode_latent(frame.rgb, frame.depth); }

struct DecodedLatent {
  ColorImage rgb;
  DepthMap depth;
};

/// Inverse of encode_latent. RGB is clamped to [0, 1]. Holes of `source`
/// stay holes, and a disparity that still equals the encoded source value
/// decodes to the source depth bit for bit.
DecodedLatent decode_latent(const Latent& x, const RgbdFrame& source);

/// Mean of `count` channels starting at `first` over each token's pixel
/// window; one row per token in row-major token order.
Eigen::MatrixXd pool_tokens(const ChannelRaster& x, TokenGrid grid, int first, int count);

/// Bilinear upsampling of per-token values, with token centers at the middle
/// of their pixel windows and edge clamping.
ChannelRaster upsample_tokens(const Eigen::MatrixXd& tokens, TokenGrid grid, int width, int height);

struct MockStylizerParams {
  double hue_degrees = 90.0;      // hue rotation per unit RGB strength
  double jitter = 0.2;            // per-frame low-frequency color noise per unit RGB strength
  double depth_amplitude = 0.25;  // meters of displacement per unit depth strength
  double attention_gain = 20.0;   // sharpness of content matching in feature sharing
  std::uint64_t seed = 0;
};

/// Deterministic stand-in for an RGBD diffusion model. It predicts a clean
/// sample and reports the implied noise:
///  - while inverting, the clean sample is the unstylized input, which keeps
///    inversion and denoising mutually consistent;
///  - otherwise it is the input with a hue rotation, a per-frame smooth color
///    jitter and a smooth depth displacement, all scaled by the channel
///    strengths. Style residuals of cached reference frames are then shared
///    through biased attention and feature injection at token resolution, and
///    composite pixels replace the result where the composite mask is set.
class MockStylizer final : public Denoiser {
 public:
  explicit MockStylizer(const MockStylizerParams& params = {}, const NoiseSchedule& schedule = NoiseSchedule())
      : params_(params), schedule_(schedule) {}

  Latent predict_noise(const Latent& x, double t, const Conditioning& conditioning) override;

  /// Clean-sample prediction outside inversion.
  Latent stylized_clean(const Conditioning& conditioning) const;

  const MockStylizerParams& params() const noexcept { return params_; }

 private:
  struct Memo {
    const Latent* source = nullptr;
    const Latent* composite = nullptr;
    const LatentCache* cache = nullptr;
    int frame = 0;
    double t_rgb = 0.0;
    double t_depth = 0.0;
    std::size_t references = 0;
    Latent clean;
  };

  MockStylizerParams params_;
  NoiseSchedule schedule_;
  std::optional<Memo> memo_;
};

}  // namespace viewstyle
