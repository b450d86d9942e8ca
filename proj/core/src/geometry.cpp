// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "viewstyle/parallel.hpp"

namespace viewstyle {

namespace {

constexpr double kMinTriangleArea = 1e-12;

Eigen::Vector3d camera_point(const Intrinsics& k, int u, int v, double depth) {
  return pixel_ray(k, u, v) * depth;
}

}  // namespace

std::optional<Projection> project(const Camera& camera, const Eigen::Vector3d& world_point) {
  const Eigen::Matrix3d rt = camera.pose.rotation().transpose();
  const Eigen::Vector3d p = rt * (world_point - camera.pose.translation());
  if (!(p.z() > 0.0)) return std::nullopt;
  const Intrinsics& k = camera.intrinsics;
  return Projection{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, p.z()};
}

PointSet backproject(const RgbdFrame& frame) {
  PointSet out;
  const Intrinsics& k = frame.intrinsics;
  out.points.reserve(frame.depth.size());
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const float d = frame.depth(u, v);
      if (!valid_depth(d)) continue;
      out.points.push_back(frame.pose.transform_point(camera_point(k, u, v, d)));
      out.colors.push_back(frame.rgb(u, v));
      out.pixels.push_back({u, v});
    }
  }
  return out;
}

void MeshOptions::validate() const {
  if (!(clip_cos_threshold >= 0.0 && clip_cos_threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "clip_cos_threshold must lie in [0, 1)");
  }
  if (clip_depth_jumps && !(depth_jump_ratio > 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "depth_jump_ratio must exceed 1");
  }
}

DepthMesh build_mesh(const RgbdFrame& frame, const MeshOptions& options) {
  options.validate();
  const Intrinsics& k = frame.intrinsics;
  const int w = k.width;
  const int h = k.height;
  DepthMesh mesh;

  Grid<int> vertex_id(w, h, -1);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const float d = frame.depth(u, v);
      if (!valid_depth(d)) continue;
      vertex_id(u, v) = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(
          MeshVertex{frame.pose.transform_point(camera_point(k, u, v, d)), frame.rgb(u, v), d, u, v});
    }
  }

  const Eigen::Vector3d look = look_at_vector(frame.pose);
  auto try_add = [&](int a, int b, int c) {
    if (a < 0 || b < 0 || c < 0) return;
    const MeshVertex& va = mesh.vertices[static_cast<std::size_t>(a)];
    const MeshVertex& vb = mesh.vertices[static_cast<std::size_t>(b)];
    const MeshVertex& vc = mesh.vertices[static_cast<std::size_t>(c)];
    const Eigen::Vector3d cross = (vb.position - va.position).cross(vc.position - va.position);
    const double norm = cross.norm();
    if (!(0.5 * norm > kMinTriangleArea)) return;
    const Eigen::Vector3d normal = cross / norm;
    if (std::abs(normal.dot(look)) < options.clip_cos_threshold) return;
    if (options.clip_depth_jumps) {
      const float lo = std::min({va.depth, vb.depth, vc.depth});
      const float hi = std::max({va.depth, vb.depth, vc.depth});
      if (static_cast<double>(hi) / static_cast<double>(lo) > options.depth_jump_ratio) return;
    }
    mesh.triangles.push_back({a, b, c});
    mesh.normals.push_back(normal);
  };

  for (int v = 0; v + 1 < h; ++v) {
    for (int u = 0; u + 1 < w; ++u) {
      const int i00 = vertex_id(u, v);
      const int i10 = vertex_id(u + 1, v);
      const int i01 = vertex_id(u, v + 1);
      const int i11 = vertex_id(u + 1, v + 1);
      try_add(i00, i10, i01);
      try_add(i10, i11, i01);
    }
  }
  return mesh;
}

std::size_t max_triangle_count(const RgbdFrame& frame) {
  std::size_t count = 0;
  for (int v = 0; v + 1 < frame.height(); ++v) {
    for (int u = 0; u + 1 < frame.width(); ++u) {
      const bool a = valid_depth(frame.depth(u, v));
      const bool b = valid_depth(frame.depth(u + 1, v));
      const bool c = valid_depth(frame.depth(u, v + 1));
      const bool d = valid_depth(frame.depth(u + 1, v + 1));
      count += (a && b && c) ? 1 : 0;
      count += (b && d && c) ? 1 : 0;
    }
  }
  return count;
}

NormalMap normals_from_depth(const RgbdFrame& frame) {
  const Intrinsics& k = frame.intrinsics;
  const int w = k.width;
  const int h = k.height;
  NormalMap normals(w, h, Eigen::Vector3f(0.0f, 0.0f, -1.0f));

  auto point = [&](int u, int v) -> std::optional<Eigen::Vector3d> {
    if (u < 0 || v < 0 || u >= w || v >= h) return std::nullopt;
    const float d = frame.depth(u, v);
    if (!valid_depth(d)) return std::nullopt;
    return camera_point(k, u, v, d);
  };
  // Central difference where both neighbours exist, one-sided otherwise.
  auto derivative = [&](const Eigen::Vector3d& center, std::optional<Eigen::Vector3d> prev,
                        std::optional<Eigen::Vector3d> next) -> std::optional<Eigen::Vector3d> {
    if (prev && next) return (*next - *prev) * 0.5;
    if (next) return *next - center;
    if (prev) return center - *prev;
    return std::nullopt;
  };

  parallel_for(0, h, [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < w; ++u) {
      const auto p = point(u, v);
      if (!p) continue;
      const auto du = derivative(*p, point(u - 1, v), point(u + 1, v));
      const auto dv = derivative(*p, point(u, v - 1), point(u, v + 1));
      if (!du || !dv) continue;
      Eigen::Vector3d n = du->cross(*dv);
      const double len = n.norm();
      if (!(len > 0.0) || !std::isfinite(len)) continue;
      n /= len;
      if (n.dot(*p) > 0.0) n = -n;
      normals(u, v) = n.cast<float>().normalized();
    }
  });
  return normals;
}

}  // namespace viewstyle
