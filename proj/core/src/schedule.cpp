// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "viewstyle/composite.hpp"
#include "viewstyle/parallel.hpp"

namespace viewstyle {

namespace {

bool in_unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

void check_latent(const Latent& x) {
  if (x.channels() != latent::kChannels) {
    throw Error(ErrorCode::kShapeMismatch, "latents must have 8 channels");
  }
}

void write_masks(Latent& x, const ChannelMasks& masks) {
  const float m_rgb = masks.rgb ? 1.0f : 0.0f;
  const float m_depth = masks.depth ? 1.0f : 0.0f;
  for (int v = 0; v < x.height(); ++v) {
    for (int u = 0; u < x.width(); ++u) {
      x.at(u, v, latent::kMaskRgb) = m_rgb;
      x.at(u, v, latent::kMaskDepth) = m_depth;
    }
  }
}

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void StyleStrength::validate() const {
  if (!in_unit_interval(t_rgb_max) || !in_unit_interval(t_depth_max) || !in_unit_interval(t_noise)) {
    throw Error(ErrorCode::kInvalidArgument, "style strengths must lie in [0, 1]");
  }
  if (t_rgb_max > 0.0 && t_depth_max > 0.0 && t_noise > lower()) {
    throw Error(ErrorCode::kInvalidArgument, "t_noise must not exceed the smaller positive maximum");
  }
}

ChannelMasks channel_masks(double t, const StyleStrength& strengths) {
  return ChannelMasks{t <= strengths.t_rgb_max, t <= strengths.t_depth_max, t};
}

void gated_update(Latent& x, const Latent& proposed, const ChannelMasks& masks) {
  if (!x.same_shape(proposed)) throw Error(ErrorCode::kShapeMismatch, "latent and proposal differ in shape");
  check_latent(x);
  if (!masks.rgb && !masks.depth) return;
  for (int v = 0; v < x.height(); ++v) {
    for (int u = 0; u < x.width(); ++u) {
      if (masks.rgb) {
        for (int c = latent::kRed; c <= latent::kBlue; ++c) x.at(u, v, c) = proposed.at(u, v, c);
      }
      if (masks.depth) x.at(u, v, latent::kDisparity) = proposed.at(u, v, latent::kDisparity);
    }
  }
}

NoiseSchedule::NoiseSchedule(double offset, double floor) : offset_(offset), floor_(floor) {
  if (!(offset >= 0.0) || !(floor > 0.0 && floor < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad noise schedule parameters");
  }
  const double c = std::cos(offset_ / (1.0 + offset_) * std::numbers::pi / 2.0);
  norm_ = c * c;
}

double NoiseSchedule::alpha_bar(double t) const {
  const double c = std::cos((std::clamp(t, 0.0, 1.0) + offset_) / (1.0 + offset_) * std::numbers::pi / 2.0);
  return std::clamp(c * c / norm_, floor_, 1.0);
}

TimestepGrid TimestepGrid::uniform(int steps) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "grid needs at least one step");
  TimestepGrid grid;
  for (int k = steps; k >= 0; --k) grid.timesteps.push_back(static_cast<double>(k) / steps);
  return grid;
}

void TimestepGrid::validate() const {
  if (timesteps.size() < 2) throw Error(ErrorCode::kInvalidArgument, "grid needs at least two timesteps");
  for (std::size_t i = 0; i < timesteps.size(); ++i) {
    if (!in_unit_interval(timesteps[i])) throw Error(ErrorCode::kInvalidArgument, "grid timesteps must lie in [0, 1]");
    if (i > 0 && !(timesteps[i] < timesteps[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "grid must be strictly decreasing");
    }
  }
}

Latent ddim_step(const Latent& x, const Latent& noise, double t_from, double t_to, const NoiseSchedule& schedule) {
  if (!x.same_shape(noise)) throw Error(ErrorCode::kShapeMismatch, "latent and noise differ in shape");
  const double a_from = schedule.alpha_bar(t_from);
  const double a_to = schedule.alpha_bar(t_to);
  const double sqrt_a_from = std::sqrt(a_from);
  const double sqrt_b_from = std::sqrt(1.0 - a_from);
  const double sqrt_a_to = std::sqrt(a_to);
  const double sqrt_b_to = std::sqrt(1.0 - a_to);
  Latent out(x.width(), x.height(), x.channels());
  const auto in = x.values();
  const auto eps = noise.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double clean = (static_cast<double>(in[i]) - sqrt_b_from * eps[i]) / sqrt_a_from;
    dst[i] = static_cast<float>(sqrt_a_to * clean + sqrt_b_to * eps[i]);
  }
  return out;
}

namespace {

// ddim_step followed by gated_update, in place and only on gated channels.
void gated_ddim_step(Latent& x, const Latent& noise, double t_from, double t_to, const NoiseSchedule& schedule,
                     const ChannelMasks& masks) {
  if (!x.same_shape(noise)) throw Error(ErrorCode::kShapeMismatch, "latent and noise differ in shape");
  if (!masks.rgb && !masks.depth) return;
  const double a_from = schedule.alpha_bar(t_from);
  const double a_to = schedule.alpha_bar(t_to);
  const double sqrt_a_from = std::sqrt(a_from);
  const double sqrt_b_from = std::sqrt(1.0 - a_from);
  const double sqrt_a_to = std::sqrt(a_to);
  const double sqrt_b_to = std::sqrt(1.0 - a_to);
  const int c_begin = masks.rgb ? latent::kRed : latent::kDisparity;
  const int c_end = masks.depth ? latent::kDisparity : latent::kBlue;
  auto dst = x.values();
  const auto eps = noise.values();
  const std::size_t stride = static_cast<std::size_t>(x.channels());
  parallel_for(0, x.height(), [&](std::ptrdiff_t row) {
    const std::size_t base = static_cast<std::size_t>(row) * static_cast<std::size_t>(x.width()) * stride;
    for (int u = 0; u < x.width(); ++u) {
      const std::size_t px = base + static_cast<std::size_t>(u) * stride;
      for (int c = c_begin; c <= c_end; ++c) {
        const std::size_t i = px + static_cast<std::size_t>(c);
        const double clean = (static_cast<double>(dst[i]) - sqrt_b_from * eps[i]) / sqrt_a_from;
        dst[i] = static_cast<float>(sqrt_a_to * clean + sqrt_b_to * eps[i]);
      }
    }
  });
}

}  // namespace

Latent noise_from_clean(const Latent& x, const Latent& clean, double t, const NoiseSchedule& schedule) {
  if (!x.same_shape(clean)) throw Error(ErrorCode::kShapeMismatch, "latent and clean prediction differ in shape");
  const double a = schedule.alpha_bar(t);
  const double sqrt_b = std::sqrt(1.0 - a);
  Latent out(x.width(), x.height(), x.channels(), 0.0f);
  if (!(sqrt_b > 1e-12)) return out;
  const double sqrt_a = std::sqrt(a);
  const double inv_sqrt_b = 1.0 / sqrt_b;
  const auto in = x.values();
  const auto x0 = clean.values();
  auto dst = out.values();
  const std::size_t row = static_cast<std::size_t>(x.width()) * static_cast<std::size_t>(x.channels());
  parallel_for(0, x.height(), [&](std::ptrdiff_t v) {
    const std::size_t begin = static_cast<std::size_t>(v) * row;
    for (std::size_t i = begin; i < begin + row; ++i) {
      dst[i] = static_cast<float>((static_cast<double>(in[i]) - sqrt_a * x0[i]) * inv_sqrt_b);
    }
  });
  return out;
}

namespace {

constexpr double kInv53 = 1.0 / 9007199254740992.0;

std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t frame, std::uint64_t step, std::uint64_t index) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ frame);
  h = splitmix(h ^ step);
  return splitmix(h ^ index);
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t frame, std::uint64_t step, std::uint64_t index) {
  return static_cast<double>(counter_hash(seed, frame, step, index) >> 11) * kInv53;
}

double counter_normal(std::uint64_t seed, std::uint64_t frame, std::uint64_t step, std::uint64_t index) {
  const std::uint64_t h = counter_hash(seed, frame, step, index);
  const std::uint64_t h2 = splitmix(h);
  const double u1 = (static_cast<double>(h >> 11) + 0.5) * kInv53;
  const double u2 = static_cast<double>(h2 >> 11) * kInv53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void LatentCache::put(int frame, double t, const Latent& latent) {
  std::unique_lock lock(mutex_);
  const auto key = std::make_pair(frame, t);
  if (entries_.contains(key)) throw Error(ErrorCode::kCacheConflict, "latent already cached for this frame/timestep");
  entries_.emplace(key, std::make_shared<const Latent>(latent));
}

std::shared_ptr<const Latent> LatentCache::get(int frame, double t) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(std::make_pair(frame, t));
  return it == entries_.end() ? nullptr : it->second;
}

std::shared_ptr<const Latent> LatentCache::nearest(int frame, double t) const {
  std::shared_lock lock(mutex_);
  std::shared_ptr<const Latent> best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (auto it = entries_.lower_bound({frame, -std::numeric_limits<double>::infinity()});
       it != entries_.end() && it->first.first == frame; ++it) {
    const double gap = std::abs(it->first.second - t);
    if (gap < best_gap) {
      best_gap = gap;
      best = it->second;
    }
  }
  return best;
}

std::size_t LatentCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::size_t LatentCache::count(int frame) const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [key, value] : entries_) n += key.first == frame ? 1 : 0;
  return n;
}

void LatentCache::evict(int frame) {
  std::unique_lock lock(mutex_);
  std::erase_if(entries_, [frame](const auto& entry) { return entry.first.first == frame; });
}

std::vector<double> inversion_timesteps(const StyleStrength& strengths, const TimestepGrid& grid) {
  strengths.validate();
  grid.validate();
  const double lo = strengths.t_noise;
  const double hi = strengths.upper();
  std::vector<double> steps;
  if (!(hi > lo)) return steps;
  steps.push_back(lo);
  for (auto it = grid.timesteps.rbegin(); it != grid.timesteps.rend(); ++it) {
    if (*it > lo && *it < hi) steps.push_back(*it);
  }
  if (steps.size() < 2) {
    throw Error(ErrorCode::kGridTooCoarse, "fewer than two inversion steps between t_noise and the maximum");
  }
  const double inner = strengths.lower();
  if (inner > lo && inner < hi) steps.push_back(inner);
  steps.push_back(hi);
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

std::vector<double> denoise_timesteps(const StyleStrength& strengths, const TimestepGrid& grid) {
  strengths.validate();
  grid.validate();
  const double hi = strengths.upper();
  std::vector<double> steps{hi, 0.0};
  for (const double t : grid.timesteps) {
    if (t > 0.0 && t < hi) steps.push_back(t);
  }
  const double inner = strengths.lower();
  if (inner > 0.0 && inner < hi) steps.push_back(inner);
  std::sort(steps.begin(), steps.end(), std::greater<>());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  return steps;
}

InversionResult partial_invert(const Latent& clean, Denoiser& denoiser, const StyleStrength& strengths,
                               const TimestepGrid& grid, const NoiseSchedule& schedule,
                               const Conditioning& conditioning, std::uint64_t seed) {
  check_latent(clean);
  InversionResult result;
  result.timesteps = inversion_timesteps(strengths, grid);
  result.latent = clean;
  Latent& x = result.latent;

  const double t_noise = strengths.t_noise;
  const ChannelMasks noise_masks = channel_masks(t_noise, strengths);
  if (t_noise > 0.0 && (noise_masks.rgb || noise_masks.depth)) {
    const double a = schedule.alpha_bar(t_noise);
    const double sqrt_a = std::sqrt(a);
    const double sqrt_b = std::sqrt(1.0 - a);
    Latent noisy = x;
    const auto frame = static_cast<std::uint64_t>(conditioning.frame);
    parallel_for(0, x.height(), [&](std::ptrdiff_t row) {
      const int v = static_cast<int>(row);
      for (int u = 0; u < x.width(); ++u) {
        const std::uint64_t pixel = static_cast<std::uint64_t>(v) * static_cast<std::uint64_t>(x.width()) +
                                    static_cast<std::uint64_t>(u);
        for (int c = latent::kRed; c <= latent::kDisparity; ++c) {
          const double n = counter_normal(seed, frame, 0, pixel * latent::kChannels + static_cast<std::uint64_t>(c));
          noisy.at(u, v, c) = static_cast<float>(sqrt_a * x.at(u, v, c) + sqrt_b * n);
        }
      }
    });
    gated_update(x, noisy, noise_masks);
  }
  result.intermediates.push_back(x);

  Conditioning inverse = conditioning;
  inverse.inverting = true;
  inverse.strengths = strengths;
  for (std::size_t k = 0; k + 1 < result.timesteps.size(); ++k) {
    const double s = result.timesteps[k];
    const double t = result.timesteps[k + 1];
    write_masks(x, channel_masks(s, strengths));
    const Latent eps = denoiser.predict_noise(x, s, inverse);
    gated_ddim_step(x, eps, s, t, schedule, channel_masks(t, strengths));
    result.intermediates.push_back(x);
  }
  return result;
}

Latent denoise(const Latent& noised, Denoiser& denoiser, const StyleStrength& strengths, const TimestepGrid& grid,
               const NoiseSchedule& schedule, const Conditioning& conditioning, LatentCache* cache) {
  check_latent(noised);
  const std::vector<double> steps = denoise_timesteps(strengths, grid);
  Latent x = noised;
  Conditioning forward = conditioning;
  forward.inverting = false;
  forward.strengths = strengths;
  for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
    const double t = steps[k];
    const double s = steps[k + 1];
    const ChannelMasks masks = channel_masks(t, strengths);
    write_masks(x, masks);
    if (cache != nullptr) cache->put(conditioning.frame, t, x);
    const Latent eps = denoiser.predict_noise(x, t, forward);
    gated_ddim_step(x, eps, t, s, schedule, masks);
  }
  if (cache != nullptr) cache->put(conditioning.frame, steps.back(), x);
  return x;
}

DepthMap rescale_stylized_depth(const DepthMap& stylized, const DepthMap& rendered, const ValidityMask& mask) {
  const double scale = median_scale(stylized, rendered, mask);
  DepthMap out = stylized;
  for (float& d : out.pixels()) {
    if (valid_depth(d)) d = static_cast<float>(static_cast<double>(d) * scale);
  }
  return out;
}

}  // namespace viewstyle
