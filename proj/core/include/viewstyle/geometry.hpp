// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "viewstyle/frame.hpp"

namespace viewstyle {

/// Camera-frame ray through pixel (u, v) with z = 1.
inline Eigen::Vector3d pixel_ray(const Intrinsics& k, double u, double v) {
  return {(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0};
}

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // camera-frame z
};

/// Projects a world point into a camera. Returns nullopt for points at or
/// behind the camera plane (z <= 0); the result may fall outside the raster.
std::optional<Projection> project(const Camera& camera, const Eigen::Vector3d& world_point);

struct PointSet {
  std::vector<Eigen::Vector3d> points;  // world frame
  std::vector<Rgb> colors;
  std::vector<std::array<int, 2>> pixels;
};

/// One world point per pixel with a usable depth, in raster order.
PointSet backproject(const RgbdFrame& frame);

struct MeshVertex {
  Eigen::Vector3d position;  // world frame, meters
  Rgb color;
  float depth = 0.0f;        // source-camera depth
  int u = 0;
  int v = 0;
};

struct DepthMesh {
  std::vector<MeshVertex> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Eigen::Vector3d> normals;  // unit, world frame, one per triangle
};

struct MeshOptions {
  /// Triangles with |cos(normal, source look-at)| below this are dropped.
  double clip_cos_threshold = 0.1;
  /// Triangles whose max/min vertex depth exceeds this are dropped.
  double depth_jump_ratio = 4.0;
  bool clip_depth_jumps = true;

  void validate() const;
};

/// Two triangles per 2x2 pixel quad, split (u,v)-(u+1,v)-(u,v+1) and
/// (u+1,v)-(u+1,v+1)-(u,v+1). Triangles with a depth-hole vertex are skipped.
DepthMesh build_mesh(const RgbdFrame& frame, const MeshOptions& options = {});

/// Number of triangles build_mesh would emit without any clipping, i.e.
/// 2 (W - 1)(H - 1) for a hole-free frame.
std::size_t max_triangle_count(const RgbdFrame& frame);

/// Camera-frame unit normals from central differences of backprojected points
/// (one-sided at the border), oriented so that n . view_ray <= 0. Pixels with
/// no usable gradient get (0, 0, -1).
NormalMap normals_from_depth(const RgbdFrame& frame);

}  // namespace viewstyle
