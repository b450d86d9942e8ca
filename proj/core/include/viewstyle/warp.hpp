// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include <Eigen/Core>

#include "viewstyle/geometry.hpp"

namespace viewstyle {

/// Winning triangle at a target pixel and its perspective-correct
/// barycentric weights, in the triangle's vertex order.
struct Fragment {
  int triangle = -1;
  std::array<double, 3> weights{0.0, 0.0, 0.0};
};

/// Per-reference-pixel mapping into the target raster.
struct FlowField {
  int target_width = 0;
  int target_height = 0;
  Grid<Eigen::Vector2f> coords;  // (u', v'); NaN where the reference depth is a hole
  ValidityMask occluded;         // 1 = hidden in the target or projected outside it
};

struct WarpResult {
  ColorImage rgb;
  DepthMap depth;               // target-camera z, 0 where invalid
  ValidityMask validity;
  NormalMap surface_normal;     // world-frame normal of the covering triangle
  Grid<Fragment> fragments;
  FlowField flow;               // filled by warp_frame / compute_flow
};

struct FlowOptions {
  double abs_eps = 1e-3;  // meters
  double rel_eps = 1e-2;
};

struct WarpOptions {
  MeshOptions mesh;
  FlowOptions flow;
};

/// Z-buffered rasterization of a mesh into a target camera. Coverage uses
/// pixel centers with a top-left fill rule on 1/256-pixel fixed-point vertex
/// positions. The strictly nearer fragment wins; exact ties keep the lower
/// triangle index. Results do not depend on the thread count.
WarpResult rasterize(const DepthMesh& mesh, const Camera& target);

/// Forward flow of every reference pixel into the target. A pixel is
/// occluded when it projects outside the raster, behind the camera, or
/// farther than zbuffer(round(u', v')) + max(abs_eps, rel_eps * zbuffer).
/// Target pixels without coverage never occlude.
FlowField compute_flow(const RgbdFrame& reference, const Camera& target, const DepthMap& zbuffer,
                       const FlowOptions& options = {});

/// build_mesh + rasterize + compute_flow.
WarpResult warp_frame(const RgbdFrame& reference, const Camera& target, const WarpOptions& options = {});

/// Interpolates a per-source-pixel attribute raster through the fragments of
/// a warp of `mesh`. Uncovered target pixels are 0.
ChannelRaster resample(const DepthMesh& mesh, const WarpResult& warp, const ChannelRaster& attributes);

/// Warp plus the mesh it was rendered from, for callers that need to push
/// extra attributes through the same geometry.
struct MeshWarp {
  DepthMesh mesh;
  WarpResult result;
};

MeshWarp warp_frame_with_mesh(const RgbdFrame& reference, const Camera& target,
                              const WarpOptions& options = {});

}  // namespace viewstyle
