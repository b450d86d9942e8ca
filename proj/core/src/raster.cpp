// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/raster.hpp"

#include <algorithm>

namespace viewstyle {

std::size_t count_true(const ValidityMask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.pixels().begin(), mask.pixels().end(), [](std::uint8_t m) { return m != 0; }));
}

ChannelRaster::ChannelRaster(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 0) {
    throw Error(ErrorCode::kInvalidArgument, "negative raster size");
  }
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

ChannelRaster to_channels(const ColorImage& image) {
  ChannelRaster out(image.width(), image.height(), 3);
  for (int v = 0; v < image.height(); ++v) {
    for (int u = 0; u < image.width(); ++u) {
      const Rgb& c = image(u, v);
      for (int k = 0; k < 3; ++k) out.at(u, v, k) = c[k];
    }
  }
  return out;
}

ColorImage to_color(const ChannelRaster& raster) {
  if (raster.channels() < 3) {
    throw Error(ErrorCode::kShapeMismatch, "color conversion needs at least 3 channels");
  }
  ColorImage out(raster.width(), raster.height());
  for (int v = 0; v < raster.height(); ++v) {
    for (int u = 0; u < raster.width(); ++u) {
      out(u, v) = Rgb(raster.at(u, v, 0), raster.at(u, v, 1), raster.at(u, v, 2));
    }
  }
  return out;
}

}  // namespace viewstyle
