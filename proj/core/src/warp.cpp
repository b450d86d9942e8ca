// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/warp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "viewstyle/parallel.hpp"

namespace viewstyle {

namespace {

constexpr int kSubpixelBits = 8;
constexpr double kSubpixelScale = 1 << kSubpixelBits;
// Keeps edge-function products inside int64.
constexpr double kMaxScreenCoord = 1 << 21;
constexpr double kNearPlane = 1e-6;

struct Fixed2 {
  std::int64_t x = 0;
  std::int64_t y = 0;
};

struct TriangleSetup {
  bool active = false;
  std::array<Fixed2, 3> screen{};
  std::array<double, 3> z{};
  std::array<int, 3> order{};  // screen vertex -> mesh vertex slot
  std::int64_t area2 = 0;
  int min_u = 0, max_u = -1, min_v = 0, max_v = -1;
};

std::int64_t edge(const Fixed2& a, const Fixed2& b, std::int64_t px, std::int64_t py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

bool top_left(const Fixed2& a, const Fixed2& b) {
  const std::int64_t dx = b.x - a.x;
  const std::int64_t dy = b.y - a.y;
  return dy < 0 || (dy == 0 && dx > 0);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

TriangleSetup setup_triangle(const std::array<Eigen::Vector3d, 3>& cam, const Intrinsics& k) {
  TriangleSetup s;
  for (int i = 0; i < 3; ++i) {
    if (!(cam[static_cast<std::size_t>(i)].z() > kNearPlane)) return s;
  }
  std::array<Fixed2, 3> fixed{};
  for (std::size_t i = 0; i < 3; ++i) {
    const double x = k.fx * cam[i].x() / cam[i].z() + k.cx;
    const double y = k.fy * cam[i].y() / cam[i].z() + k.cy;
    if (!(std::abs(x) < kMaxScreenCoord && std::abs(y) < kMaxScreenCoord)) return s;
    fixed[i] = Fixed2{std::llround(x * kSubpixelScale), std::llround(y * kSubpixelScale)};
  }
  std::int64_t area2 = edge(fixed[0], fixed[1], fixed[2].x, fixed[2].y);
  if (area2 == 0) return s;
  s.order = {0, 1, 2};
  if (area2 < 0) {
    std::swap(fixed[1], fixed[2]);
    s.order = {0, 2, 1};
    area2 = -area2;
  }
  s.screen = fixed;
  for (std::size_t i = 0; i < 3; ++i) s.z[i] = cam[static_cast<std::size_t>(s.order[i])].z();
  s.area2 = area2;

  const std::int64_t scale = std::int64_t{1} << kSubpixelBits;
  const std::int64_t lo_x = std::min({fixed[0].x, fixed[1].x, fixed[2].x});
  const std::int64_t hi_x = std::max({fixed[0].x, fixed[1].x, fixed[2].x});
  const std::int64_t lo_y = std::min({fixed[0].y, fixed[1].y, fixed[2].y});
  const std::int64_t hi_y = std::max({fixed[0].y, fixed[1].y, fixed[2].y});
  // Pixel centers at integer coordinates: smallest u with u*scale >= lo_x.
  s.min_u = static_cast<int>(std::max<std::int64_t>(0, -floor_div(-lo_x, scale)));
  s.max_u = static_cast<int>(std::min<std::int64_t>(k.width - 1, floor_div(hi_x, scale)));
  s.min_v = static_cast<int>(std::max<std::int64_t>(0, -floor_div(-lo_y, scale)));
  s.max_v = static_cast<int>(std::min<std::int64_t>(k.height - 1, floor_div(hi_y, scale)));
  s.active = s.min_u <= s.max_u && s.min_v <= s.max_v;
  return s;
}

double interpolate(const std::array<double, 3>& w, double a, double b, double c) {
  return w[0] * a + w[1] * b + w[2] * c;
}

}  // namespace

WarpResult rasterize(const DepthMesh& mesh, const Camera& target) {
  const Intrinsics& k = target.intrinsics;
  k.validate();
  const int width = k.width;
  const int height = k.height;

  WarpResult out;
  out.rgb = ColorImage(width, height, Rgb::Zero());
  out.depth = DepthMap(width, height, 0.0f);
  out.validity = ValidityMask(width, height, 0);
  out.surface_normal = NormalMap(width, height, Eigen::Vector3f::Zero());
  out.fragments = Grid<Fragment>(width, height);

  const Eigen::Matrix3d rt = target.pose.rotation().transpose();
  const Eigen::Vector3d origin = target.pose.translation();
  std::vector<Eigen::Vector3d> cam(mesh.vertices.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(cam.size()), [&](std::ptrdiff_t i) {
    cam[static_cast<std::size_t>(i)] = rt * (mesh.vertices[static_cast<std::size_t>(i)].position - origin);
  });

  std::vector<TriangleSetup> setups(mesh.triangles.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(setups.size()), [&](std::ptrdiff_t t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    setups[static_cast<std::size_t>(t)] = setup_triangle(
        {cam[static_cast<std::size_t>(tri[0])], cam[static_cast<std::size_t>(tri[1])],
         cam[static_cast<std::size_t>(tri[2])]},
        k);
  });

  // Row bands: every band walks all triangles in index order, so the z-test
  // sees fragments in the same order whatever the band layout.
  std::vector<double> zbuffer(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                              std::numeric_limits<double>::infinity());
  const int bands = std::max(1, std::min<int>(height, static_cast<int>(thread_count()) * 4));
  const int rows_per_band = (height + bands - 1) / bands;
  const std::int64_t scale = std::int64_t{1} << kSubpixelBits;

  parallel_for(0, bands, [&](std::ptrdiff_t band) {
    const int row_lo = static_cast<int>(band) * rows_per_band;
    const int row_hi = std::min(height - 1, row_lo + rows_per_band - 1);
    if (row_lo > row_hi) return;
    for (std::size_t t = 0; t < setups.size(); ++t) {
      const TriangleSetup& s = setups[t];
      if (!s.active || s.max_v < row_lo || s.min_v > row_hi) continue;
      const auto& p = s.screen;
      const bool tl0 = top_left(p[1], p[2]);
      const bool tl1 = top_left(p[2], p[0]);
      const bool tl2 = top_left(p[0], p[1]);
      const double inv_area = 1.0 / static_cast<double>(s.area2);
      for (int v = std::max(row_lo, s.min_v); v <= std::min(row_hi, s.max_v); ++v) {
        const std::int64_t py = v * scale;
        for (int u = s.min_u; u <= s.max_u; ++u) {
          const std::int64_t px = u * scale;
          const std::int64_t e0 = edge(p[1], p[2], px, py);
          const std::int64_t e1 = edge(p[2], p[0], px, py);
          const std::int64_t e2 = edge(p[0], p[1], px, py);
          if (e0 < 0 || e1 < 0 || e2 < 0) continue;
          if ((e0 == 0 && !tl0) || (e1 == 0 && !tl1) || (e2 == 0 && !tl2)) continue;

          const std::array<double, 3> b{static_cast<double>(e0) * inv_area, static_cast<double>(e1) * inv_area,
                                        static_cast<double>(e2) * inv_area};
          const std::array<double, 3> q{b[0] / s.z[0], b[1] / s.z[1], b[2] / s.z[2]};
          const double sum = q[0] + q[1] + q[2];
          const std::array<double, 3> w{q[0] / sum, q[1] / sum, q[2] / sum};
          const double z = interpolate(w, s.z[0], s.z[1], s.z[2]);
          const std::size_t idx = out.depth.index(u, v);
          if (!(z < zbuffer[idx])) continue;
          zbuffer[idx] = z;
          Fragment& frag = out.fragments[idx];
          frag.triangle = static_cast<int>(t);
          for (std::size_t i = 0; i < 3; ++i) frag.weights[static_cast<std::size_t>(s.order[i])] = w[i];
        }
      }
    }
  });

  parallel_for(0, height, [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < width; ++u) {
      const std::size_t idx = out.depth.index(u, v);
      const Fragment& frag = out.fragments[idx];
      if (frag.triangle < 0) continue;
      const auto& tri = mesh.triangles[static_cast<std::size_t>(frag.triangle)];
      const MeshVertex& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
      const MeshVertex& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
      const MeshVertex& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
      Rgb color;
      for (int ch = 0; ch < 3; ++ch) {
        color[ch] = static_cast<float>(interpolate(frag.weights, a.color[ch], b.color[ch], c.color[ch]));
      }
      out.rgb[idx] = color;
      out.depth[idx] = static_cast<float>(zbuffer[idx]);
      out.validity[idx] = valid_depth(out.depth[idx]) ? 1 : 0;
      out.surface_normal[idx] = mesh.normals[static_cast<std::size_t>(frag.triangle)].cast<float>();
    }
  });
  return out;
}

FlowField compute_flow(const RgbdFrame& reference, const Camera& target, const DepthMap& zbuffer,
                       const FlowOptions& options) {
  const Intrinsics& tk = target.intrinsics;
  if (zbuffer.width() != tk.width || zbuffer.height() != tk.height) {
    throw Error(ErrorCode::kDimensionMismatch, "zbuffer does not match the target camera");
  }
  const Intrinsics& rk = reference.intrinsics;
  FlowField flow;
  flow.target_width = tk.width;
  flow.target_height = tk.height;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  flow.coords = Grid<Eigen::Vector2f>(rk.width, rk.height, Eigen::Vector2f(nan, nan));
  flow.occluded = ValidityMask(rk.width, rk.height, 1);

  parallel_for(0, rk.height, [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < rk.width; ++u) {
      const float d = reference.depth(u, v);
      if (!valid_depth(d)) continue;
      const Eigen::Vector3d world = reference.pose.transform_point(pixel_ray(rk, u, v) * static_cast<double>(d));
      const auto proj = project(target, world);
      if (!proj) continue;
      flow.coords(u, v) = Eigen::Vector2f(static_cast<float>(proj->u), static_cast<float>(proj->v));
      const double ru = std::round(proj->u);
      const double rv = std::round(proj->v);
      if (!(ru >= 0.0 && rv >= 0.0 && ru < tk.width && rv < tk.height)) continue;
      const float zb = zbuffer(static_cast<int>(ru), static_cast<int>(rv));
      bool hidden = false;
      if (valid_depth(zb)) {
        const double z = zb;
        hidden = proj->depth > z + std::max(options.abs_eps, options.rel_eps * z);
      }
      flow.occluded(u, v) = hidden ? 1 : 0;
    }
  });
  return flow;
}

MeshWarp warp_frame_with_mesh(const RgbdFrame& reference, const Camera& target, const WarpOptions& options) {
  MeshWarp out;
  out.mesh = build_mesh(reference, options.mesh);
  out.result = rasterize(out.mesh, target);
  out.result.flow = compute_flow(reference, target, out.result.depth, options.flow);
  return out;
}

WarpResult warp_frame(const RgbdFrame& reference, const Camera& target, const WarpOptions& options) {
  return std::move(warp_frame_with_mesh(reference, target, options).result);
}

ChannelRaster resample(const DepthMesh& mesh, const WarpResult& warp, const ChannelRaster& attributes) {
  const int channels = attributes.channels();
  ChannelRaster out(warp.fragments.width(), warp.fragments.height(), channels, 0.0f);
  parallel_for(0, out.height(), [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < out.width(); ++u) {
      const Fragment& frag = warp.fragments(u, v);
      if (frag.triangle < 0) continue;
      const auto& tri = mesh.triangles[static_cast<std::size_t>(frag.triangle)];
      const MeshVertex& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
      const MeshVertex& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
      const MeshVertex& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
      for (int ch = 0; ch < channels; ++ch) {
        out.at(u, v, ch) = static_cast<float>(interpolate(frag.weights, attributes.at(a.u, a.v, ch),
                                                          attributes.at(b.u, b.v, ch),
                                                          attributes.at(c.u, c.v, ch)));
      }
    }
  });
  return out;
}

}  // namespace viewstyle
