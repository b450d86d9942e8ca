// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <cstdio>
#include <string>

#include "viewstyle/parallel.hpp"

namespace viewstyle {

namespace {

constexpr double kCubeHalf = 0.5;
constexpr double kRoomHalf = 4.0;

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int axis = 0;
  int sign = 1;
};

// Entry of a ray into the box [-half, half]^3 (outside rays only).
Hit enter_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, double half) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int axis = 0;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (std::abs(o[a]) > half) return {};
      continue;
    }
    double t0 = (-half - o[a]) / d[a];
    double t1 = (half - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      axis = a;
    }
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_near <= 0.0) return {};
  return Hit{t_near, axis, d[axis] > 0 ? -1 : 1};
}

// Exit of a ray from inside the box [-half, half]^3.
Hit exit_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, double half) {
  Hit hit;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) continue;
    const double t = ((d[a] > 0 ? half : -half) - o[a]) / d[a];
    if (t > 0.0 && t < hit.t) hit = Hit{t, a, d[a] > 0 ? 1 : -1};
  }
  return hit;
}

Rgb shade(const Eigen::Vector3d& p, int axis, int sign, bool cube) {
  static const Eigen::Vector3d kPalette[12] = {
      {0.85, 0.25, 0.20}, {0.20, 0.55, 0.85}, {0.90, 0.75, 0.20}, {0.30, 0.75, 0.35},
      {0.70, 0.30, 0.75}, {0.95, 0.55, 0.25}, {0.55, 0.55, 0.60}, {0.40, 0.30, 0.20},
      {0.60, 0.80, 0.75}, {0.80, 0.60, 0.65}, {0.35, 0.45, 0.30}, {0.75, 0.70, 0.55}};
  const int face = axis * 2 + (sign > 0 ? 1 : 0) + (cube ? 0 : 6);
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  const double cells = cube ? 4.0 : 1.5;
  const double s = p[a1] * cells;
  const double t = p[a2] * cells;
  const int checker = (static_cast<int>(std::floor(s)) + static_cast<int>(std::floor(t))) & 1;
  const double stripes = 0.5 + 0.5 * std::sin(3.0 * (p[a1] + 2.0 * p[a2]));
  const Eigen::Vector3d base = kPalette[face];
  const Eigen::Vector3d alt = kPalette[(face + 5) % 12];
  const Eigen::Vector3d c = (checker ? base : alt) * (0.65 + 0.35 * stripes);
  return c.cwiseMax(0.0).cwiseMin(1.0).cast<float>();
}

}  // namespace

Pose look_at_pose(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = Eigen::Vector3d::UnitY().cross(z);
  if (x.norm() < 1e-9) x = Eigen::Vector3d::UnitX();
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Pose(r, eye);
}

RgbdFrame render_box_scene(const Camera& camera, int index) {
  camera.intrinsics.validate();
  const Intrinsics& k = camera.intrinsics;
  RgbdFrame frame;
  frame.intrinsics = k;
  frame.pose = camera.pose;
  frame.index = index;
  frame.rgb = ColorImage(k.width, k.height);
  frame.depth = DepthMap(k.width, k.height, 0.0f);
  const Eigen::Matrix3d r = camera.pose.rotation();
  const Eigen::Vector3d o = camera.pose.translation();
  if (o.cwiseAbs().maxCoeff() >= kRoomHalf) throw Error(ErrorCode::kInvalidArgument, "camera outside the room");
  parallel_for(0, k.height, [&](std::ptrdiff_t row) {
    const int v = static_cast<int>(row);
    for (int u = 0; u < k.width; ++u) {
      const Eigen::Vector3d ray((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d d = r * ray;
      Hit hit = enter_box(o, d, kCubeHalf);
      bool cube = true;
      if (!std::isfinite(hit.t)) {
        hit = exit_box(o, d, kRoomHalf);
        cube = false;
      }
      const Eigen::Vector3d p = o + hit.t * d;
      frame.rgb(u, v) = shade(p, hit.axis, hit.sign, cube);
      frame.depth(u, v) = static_cast<float>(hit.t);  // camera-space z, since ray.z == 1
    }
  });
  return frame;
}

void OrbitOptions::validate() const {
  if (frames < 1 || width < 2 || height < 2 || !(fov_degrees > 0.0 && fov_degrees < 170.0) ||
      !(radius > kCubeHalf * std::sqrt(3.0)) || radius >= kRoomHalf) {
    throw Error(ErrorCode::kInvalidArgument, "bad orbit options");
  }
}

Trajectory orbit_trajectory(const OrbitOptions& options) {
  options.validate();
  const double focal = 0.5 * options.width / std::tan(options.fov_degrees * std::numbers::pi / 360.0);
  const Intrinsics intrinsics = Intrinsics::centered(options.width, options.height, focal);
  Trajectory trajectory;
  for (int i = 0; i < options.frames; ++i) {
    const double frac = options.frames > 1 ? static_cast<double>(i) / (options.frames - 1) : 0.0;
    const double angle = (frac - 0.5) * options.arc_degrees * std::numbers::pi / 180.0;
    const Eigen::Vector3d eye(options.radius * std::sin(angle), options.elevation, -options.radius * std::cos(angle));
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d", i);
    trajectory.frames.push_back(TrajectoryView{name, Camera{intrinsics, look_at_pose(eye, Eigen::Vector3d::Zero())}});
  }
  trajectory.metadata["scene"] = "textured-cube";
  return trajectory;
}

std::vector<RgbdFrame> render_trajectory(const Trajectory& trajectory) {
  std::vector<RgbdFrame> frames;
  for (std::size_t i = 0; i < trajectory.frames.size(); ++i) {
    frames.push_back(render_box_scene(trajectory.frames[i].camera, static_cast<int>(i)));
  }
  return frames;
}

}  // namespace viewstyle
