// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/stylizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "viewstyle/attention.hpp"
#include "viewstyle/parallel.hpp"

namespace viewstyle {

namespace {

// Streams of the counter generator used by the mock.
constexpr std::uint64_t kJitterStream = 0x6a17;
constexpr std::uint64_t kDepthStream = 0xd3f7;

float encoded_disparity(float depth) {
  return valid_depth(depth) ? static_cast<float>(1.0 / static_cast<double>(depth)) : 0.0f;
}

Eigen::Matrix3d hue_rotation(double radians) {
  const Eigen::Vector3d k = Eigen::Vector3d::Ones().normalized();
  Eigen::Matrix3d cross;
  cross << 0.0, -k.z(), k.y(), k.z(), 0.0, -k.x(), -k.y(), k.x(), 0.0;
  return std::cos(radians) * Eigen::Matrix3d::Identity() + std::sin(radians) * cross +
         (1.0 - std::cos(radians)) * k * k.transpose();
}

// Per-frame color noise: a 4x4 grid of normal samples per channel spanning
// the raster, bilinearly interpolated.
class JitterField {
 public:
  static constexpr int kCells = 4;

  JitterField(std::uint64_t seed, int frame) {
    for (int c = 0; c < 3; ++c) {
      for (int k = 0; k < kCells * kCells; ++k) {
        nodes_[c][k] = counter_normal(seed ^ kJitterStream, static_cast<std::uint64_t>(frame),
                                      static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(k));
      }
    }
  }

  double operator()(int channel, double fu, double fv) const {
    const double gx = fu * (kCells - 1);
    const double gy = fv * (kCells - 1);
    const int x0 = std::min(static_cast<int>(gx), kCells - 2);
    const int y0 = std::min(static_cast<int>(gy), kCells - 2);
    const double ax = gx - x0;
    const double ay = gy - y0;
    const auto& n = nodes_[channel];
    return (1 - ay) * ((1 - ax) * n[y0 * kCells + x0] + ax * n[y0 * kCells + x0 + 1]) +
           ay * ((1 - ax) * n[(y0 + 1) * kCells + x0] + ax * n[(y0 + 1) * kCells + x0 + 1]);
  }

 private:
  double nodes_[3][kCells * kCells];
};

struct Wave {
  double fu, fv, phase;
};

std::vector<Wave> depth_waves(std::uint64_t seed) {
  std::vector<Wave> waves;
  for (std::uint64_t k = 0; k < 3; ++k) {
    waves.push_back(Wave{4.0 * counter_uniform(seed ^ kDepthStream, 0, k, 0) - 2.0,
                         4.0 * counter_uniform(seed ^ kDepthStream, 0, k, 1) - 2.0,
                         2.0 * std::numbers::pi * counter_uniform(seed ^ kDepthStream, 0, k, 2)});
  }
  return waves;
}

// q = [g c, 1], k = [g c, -g^2 |c|^2 / 2]: q.k equals -g^2 |c - c'|^2 / 2 up to
// a per-query constant, so attention follows color similarity.
Eigen::MatrixXd content_queries(const Eigen::MatrixXd& colors, double gain) {
  Eigen::MatrixXd q(colors.rows(), 4);
  q.leftCols(3) = gain * colors;
  q.col(3).setOnes();
  return q;
}

Eigen::MatrixXd content_keys(const Eigen::MatrixXd& colors, double gain) {
  Eigen::MatrixXd k(colors.rows(), 4);
  k.leftCols(3) = gain * colors;
  k.col(3) = -0.5 * gain * gain * colors.rowwise().squaredNorm();
  return k;
}

}  // namespace

Latent encode_latent(const ColorImage& rgb, const DepthMap& depth) {
  if (!rgb.same_shape(depth)) throw Error(ErrorCode::kDimensionMismatch, "rgb and depth differ in size");
  Latent x(rgb.width(), rgb.height(), latent::kChannels, 0.0f);
  for (int v = 0; v < rgb.height(); ++v) {
    for (int u = 0; u < rgb.width(); ++u) {
      for (int c = 0; c < 3; ++c) x.at(u, v, c) = rgb(u, v)[c];
      x.at(u, v, latent::kDisparity) = encoded_disparity(depth(u, v));
    }
  }
  return x;
}

DecodedLatent decode_latent(const Latent& x, const RgbdFrame& source) {
  if (x.width() != source.width() || x.height() != source.height() || x.channels() != latent::kChannels) {
    throw Error(ErrorCode::kShapeMismatch, "latent does not match the source frame");
  }
  DecodedLatent out{ColorImage(x.width(), x.height()), DepthMap(x.width(), x.height(), 0.0f)};
  for (int v = 0; v < x.height(); ++v) {
    for (int u = 0; u < x.width(); ++u) {
      for (int c = 0; c < 3; ++c) {
        const float value = x.at(u, v, c);
        out.rgb(u, v)[c] = std::isnan(value) ? 0.0f : std::clamp(value, 0.0f, 1.0f);
      }
      const float d = source.depth(u, v);
      if (!valid_depth(d)) continue;
      const float disparity = x.at(u, v, latent::kDisparity);
      if (disparity == encoded_disparity(d)) {
        out.depth(u, v) = d;
      } else if (disparity > 0.0f && std::isfinite(disparity)) {
        out.depth(u, v) = static_cast<float>(1.0 / static_cast<double>(disparity));
      }
    }
  }
  return out;
}

Eigen::MatrixXd pool_tokens(const ChannelRaster& x, TokenGrid grid, int first, int count) {
  if (grid.width <= 0 || grid.height <= 0 || grid.width > x.width() || grid.height > x.height()) {
    throw Error(ErrorCode::kInvalidArgument, "token grid must be non-empty and no finer than the raster");
  }
  if (first < 0 || count < 0 || first + count > x.channels()) {
    throw Error(ErrorCode::kInvalidArgument, "channel range out of bounds");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grid.count(), count);
  for (int ty = 0; ty < grid.height; ++ty) {
    const auto [v0, v1] = pool_window(ty, x.height(), grid.height);
    for (int tx = 0; tx < grid.width; ++tx) {
      const auto [u0, u1] = pool_window(tx, x.width(), grid.width);
      const int row = ty * grid.width + tx;
      for (int v = v0; v < v1; ++v) {
        for (int u = u0; u < u1; ++u) {
          for (int c = 0; c < count; ++c) out(row, c) += x.at(u, v, first + c);
        }
      }
      out.row(row) /= static_cast<double>((u1 - u0) * (v1 - v0));
    }
  }
  return out;
}

ChannelRaster upsample_tokens(const Eigen::MatrixXd& tokens, TokenGrid grid, int width, int height) {
  if (tokens.rows() != grid.count()) throw Error(ErrorCode::kShapeMismatch, "token count does not match the grid");
  const int channels = static_cast<int>(tokens.cols());
  ChannelRaster out(width, height, channels);
  const double sx = static_cast<double>(grid.width) / width;
  const double sy = static_cast<double>(grid.height) / height;
  parallel_for(0, height, [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    const double gy = std::clamp((v + 0.5) * sy - 0.5, 0.0, grid.height - 1.0);
    const int y0 = std::min(static_cast<int>(gy), std::max(grid.height - 2, 0));
    const int y1 = std::min(y0 + 1, grid.height - 1);
    const double ay = gy - y0;
    for (int u = 0; u < width; ++u) {
      const double gx = std::clamp((u + 0.5) * sx - 0.5, 0.0, grid.width - 1.0);
      const int x0 = std::min(static_cast<int>(gx), std::max(grid.width - 2, 0));
      const int x1 = std::min(x0 + 1, grid.width - 1);
      const double ax = gx - x0;
      for (int c = 0; c < channels; ++c) {
        const double top = (1 - ax) * tokens(y0 * grid.width + x0, c) + ax * tokens(y0 * grid.width + x1, c);
        const double bottom = (1 - ax) * tokens(y1 * grid.width + x0, c) + ax * tokens(y1 * grid.width + x1, c);
        out.at(u, v, c) = static_cast<float>((1 - ay) * top + ay * bottom);
      }
    }
  });
  return out;
}

Latent MockStylizer::predict_noise(const Latent& x, double t, const Conditioning& conditioning) {
  if (conditioning.source == nullptr) throw Error(ErrorCode::kInvalidArgument, "mock stylizer needs the source latent");
  if (conditioning.inverting) return noise_from_clean(x, *conditioning.source, t, schedule_);

  const bool hit = memo_ && memo_->source == conditioning.source && memo_->composite == conditioning.composite &&
                   memo_->cache == conditioning.cache && memo_->frame == conditioning.frame &&
                   memo_->t_rgb == conditioning.strengths.t_rgb_max &&
                   memo_->t_depth == conditioning.strengths.t_depth_max &&
                   memo_->references == conditioning.references.size();
  if (!hit) {
    memo_ = Memo{conditioning.source, conditioning.composite, conditioning.cache, conditioning.frame,
                 conditioning.strengths.t_rgb_max, conditioning.strengths.t_depth_max,
                 conditioning.references.size(), stylized_clean(conditioning)};
  }
  return noise_from_clean(x, memo_->clean, t, schedule_);
}

Latent MockStylizer::stylized_clean(const Conditioning& conditioning) const {
  const Latent& source = *conditioning.source;
  const int w = source.width();
  const int h = source.height();
  const double t_rgb = conditioning.strengths.t_rgb_max;
  const double t_depth = conditioning.strengths.t_depth_max;
  const Eigen::Matrix3d hue = hue_rotation(params_.hue_degrees * t_rgb * std::numbers::pi / 180.0);
  const std::vector<Wave> waves = depth_waves(params_.seed);
  const double amplitude = params_.depth_amplitude * t_depth;
  const double jitter = params_.jitter * t_rgb;
  const JitterField jitter_field(params_.seed, conditioning.frame);

  Latent clean = source;
  parallel_for(0, h, [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    const double fv = h > 1 ? static_cast<double>(v) / (h - 1) : 0.0;
    for (int u = 0; u < w; ++u) {
      const double fu = w > 1 ? static_cast<double>(u) / (w - 1) : 0.0;
      const Eigen::Vector3d rgb(source.at(u, v, 0), source.at(u, v, 1), source.at(u, v, 2));
      const Eigen::Vector3d rotated = hue * rgb;
      for (int c = 0; c < 3; ++c) {
        const double noise = jitter * jitter_field(c, fu, fv);
        clean.at(u, v, c) = static_cast<float>(rotated[c] + noise);
      }
      const float disparity = source.at(u, v, latent::kDisparity);
      if (disparity > 0.0f) {
        double field = 0.0;
        for (const Wave& wave : waves) {
          field += std::sin(2.0 * std::numbers::pi * (wave.fu * u / w + wave.fv * v / h) + wave.phase) / 3.0;
        }
        const double depth = 1.0 / static_cast<double>(disparity);
        const double moved = std::max(depth + amplitude * field, 0.1 * depth);
        clean.at(u, v, latent::kDisparity) = static_cast<float>(1.0 / moved);
      }
    }
  });

  // Feature sharing with previously stylized references.
  const TokenGrid grid = conditioning.tokens;
  if (!conditioning.references.empty() && conditioning.cache != nullptr && grid.count() > 0) {
    const Eigen::MatrixXd colors = pool_tokens(source, grid, latent::kRed, 3);
    const Eigen::MatrixXd hidden = pool_tokens(clean, grid, latent::kRed, 4) - pool_tokens(source, grid, latent::kRed, 4);
    const Eigen::MatrixXd queries = content_queries(colors, params_.attention_gain);
    const Eigen::MatrixXd self_keys = content_keys(colors, params_.attention_gain);

    std::vector<Eigen::MatrixXd> keys;
    std::vector<Eigen::MatrixXd> values;
    std::vector<Eigen::MatrixXd> heatmaps;
    for (const ReferenceConditioning& ref : conditioning.references) {
      const auto stylized = conditioning.cache->get(ref.frame, 0.0);
      if (!stylized || ref.source == nullptr) continue;
      if (ref.heatmap.rows() != grid.count()) throw Error(ErrorCode::kShapeMismatch, "heatmap rows must match tokens");
      const TokenGrid ref_grid = grid;
      if (ref.heatmap.cols() != ref_grid.count()) {
        throw Error(ErrorCode::kShapeMismatch, "heatmap columns must match reference tokens");
      }
      keys.push_back(content_keys(pool_tokens(*ref.source, ref_grid, latent::kRed, 3), params_.attention_gain));
      values.push_back(pool_tokens(*stylized, ref_grid, latent::kRed, 4) -
                       pool_tokens(*ref.source, ref_grid, latent::kRed, 4));
      heatmaps.push_back(ref.heatmap);
    }
    if (!heatmaps.empty()) {
      std::vector<AttentionReference> refs;
      for (std::size_t r = 0; r < heatmaps.size(); ++r) refs.push_back({keys[r], values[r], heatmaps[r]});
      const Eigen::MatrixXd attended =
          biased_attention(queries, self_keys, hidden, refs, conditioning.attention.lambda_self);
      Eigen::Index rows = 0;
      for (const auto& v : values) rows += v.rows();
      Eigen::MatrixXd stacked_values(rows, 4);
      rows = 0;
      for (const auto& v : values) {
        stacked_values.middleRows(rows, v.rows()) = v;
        rows += v.rows();
      }
      const Eigen::MatrixXd stacked = stack_heatmaps(heatmaps);
      const Eigen::MatrixXd shared =
          inject_features(attended, stacked_values, mixing_matrix(stacked, conditioning.attention.temperature),
                          injection_weights(stacked, conditioning.attention.lambda_inject));
      const ChannelRaster delta = upsample_tokens(shared - hidden, grid, w, h);
      for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
          if (t_rgb > 0.0) {
            for (int c = 0; c < 3; ++c) clean.at(u, v, c) += delta.at(u, v, c);
          }
          if (t_depth > 0.0 && source.at(u, v, latent::kDisparity) > 0.0f) {
            const float moved = clean.at(u, v, latent::kDisparity) + delta.at(u, v, 3);
            if (moved > 0.0f) clean.at(u, v, latent::kDisparity) = moved;
          }
        }
      }
    }
  }

  if (conditioning.composite != nullptr && conditioning.composite_mask != nullptr) {
    const Latent& composite = *conditioning.composite;
    const ValidityMask& mask = *conditioning.composite_mask;
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        if (mask(u, v) == 0) continue;
        for (int c = latent::kRed; c <= latent::kBlue; ++c) clean.at(u, v, c) = composite.at(u, v, c);
        if (composite.at(u, v, latent::kDisparity) > 0.0f) {
          clean.at(u, v, latent::kDisparity) = composite.at(u, v, latent::kDisparity);
        }
      }
    }
  }
  return clean;
}

}  // namespace viewstyle
