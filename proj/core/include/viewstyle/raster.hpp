// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "viewstyle/error.hpp"

namespace viewstyle {

/// Row-major H×W raster of T. Pixel (u, v) is column u, row v.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative raster size");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int u, int v) const noexcept { return u >= 0 && v >= 0 && u < width_ && v < height_; }
  std::size_t index(int u, int v) const noexcept {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u);
  }

  T& operator()(int u, int v) noexcept { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const noexcept { return data_[index(u, v)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Rgb = Eigen::Vector3f;
using ColorImage = Grid<Rgb>;
using DepthMap = Grid<float>;
/// Boolean raster stored as bytes (0 / 1).
using ValidityMask = Grid<std::uint8_t>;
using NormalMap = Grid<Eigen::Vector3f>;

std::size_t count_true(const ValidityMask& mask);

/// H×W×C float raster, channel-interleaved. Used for latents and features.
class ChannelRaster {
 public:
  ChannelRaster() = default;
  ChannelRaster(int width, int height, int channels, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  float& at(int u, int v, int c) noexcept { return data_[offset(u, v) + static_cast<std::size_t>(c)]; }
  float at(int u, int v, int c) const noexcept { return data_[offset(u, v) + static_cast<std::size_t>(c)]; }

  std::span<float> pixel(int u, int v) noexcept {
    return std::span<float>(data_).subspan(offset(u, v), static_cast<std::size_t>(channels_));
  }
  std::span<const float> pixel(int u, int v) const noexcept {
    return std::span<const float>(data_).subspan(offset(u, v), static_cast<std::size_t>(channels_));
  }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  bool same_shape(const ChannelRaster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const ChannelRaster&, const ChannelRaster&) = default;

 private:
  std::size_t offset(int u, int v) const noexcept {
    return (static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u)) *
           static_cast<std::size_t>(channels_);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

ChannelRaster to_channels(const ColorImage& image);
ColorImage to_color(const ChannelRaster& raster);

}  // namespace viewstyle
