// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "viewstyle/frame.hpp"

namespace viewstyle {

/// Camera at `eye` looking at `target`, image y pointing as close to world +y
/// as possible.
Pose look_at_pose(const Eigen::Vector3d& eye, const Eigen::Vector3d& target);

/// Ray-cast render of a textured cube standing inside a textured room. Every
/// pixel hits a surface, so the depth map has no holes.
RgbdFrame render_box_scene(const Camera& camera, int index = 0);

struct OrbitOptions {
  int frames = 20;
  int width = 512;
  int height = 512;
  double fov_degrees = 60.0;
  double radius = 2.6;
  double elevation = -0.7;  // camera height; negative is up
  double arc_degrees = 60.0;

  void validate() const;
};

/// Cameras on a horizontal arc around the cube, looking at its center.
Trajectory orbit_trajectory(const OrbitOptions& options);
std::vector<RgbdFrame> render_trajectory(const Trajectory& trajectory);

}  // namespace viewstyle
