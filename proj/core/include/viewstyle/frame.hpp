// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "viewstyle/raster.hpp"

namespace viewstyle {

/// Pinhole intrinsics. Camera axes: x right, y down, z forward. Pixel centers
/// sit at integer coordinates, so pixel (u, v) backprojects to
/// ((u - cx) / fx * z, (v - cy) / fy * z, z).
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  void validate() const;
  bool operator==(const Intrinsics&) const = default;

  /// Square pixels, principal point at the raster center.
  static Intrinsics centered(int width, int height, double focal);
};

/// Rigid world_from_camera transform.
class Pose {
 public:
  Pose() : matrix_(Eigen::Matrix4d::Identity()) {}
  /// Throws kInvalidArgument unless the rotation block is orthonormal with
  /// det = +1 (to 1e-6) and the last row is (0, 0, 0, 1).
  explicit Pose(const Eigen::Matrix4d& world_from_camera);
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Pose identity() { return Pose(); }

  const Eigen::Matrix4d& matrix() const noexcept { return matrix_; }
  Eigen::Matrix3d rotation() const { return matrix_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return matrix_.topRightCorner<3, 1>(); }

  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;

  Eigen::Vector3d transform_point(const Eigen::Vector3d& p) const {
    return rotation() * p + translation();
  }

  bool operator==(const Pose&) const = default;

 private:
  Eigen::Matrix4d matrix_;
};

/// World-frame direction of the camera's +z axis (third column of R).
Eigen::Vector3d look_at_vector(const Pose& pose);

/// Geodesic angle in radians between two rotations.
double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

struct Camera {
  Intrinsics intrinsics;
  Pose pose;

  bool operator==(const Camera&) const = default;
};

/// A depth value is usable iff it is finite and strictly positive; anything
/// else marks a hole.
inline bool valid_depth(float d) noexcept { return d > 0.0f && d < std::numeric_limits<float>::infinity(); }

/// Registered color + depth raster with its camera.
struct RgbdFrame {
  ColorImage rgb;   // linear, [0, 1]
  DepthMap depth;   // meters; holes are 0
  Intrinsics intrinsics;
  Pose pose;
  int index = 0;

  int width() const noexcept { return intrinsics.width; }
  int height() const noexcept { return intrinsics.height; }
  Camera camera() const { return Camera{intrinsics, pose}; }

  /// Checks raster sizes against the intrinsics, rgb range, and that every
  /// depth is either a hole (0) or finite and positive.
  void validate() const;
};

struct DisparityRaster {
  Grid<float> disparity;  // 1 / meters
};

/// Elementwise reciprocal. Throws kNonPositiveDepth if any depth <= 0.
DisparityRaster depth_to_disparity(const DepthMap& depth);
DepthMap disparity_to_depth(const DisparityRaster& disparity);

struct TrajectoryView {
  std::string name;
  Camera camera;
};

struct Trajectory {
  std::vector<TrajectoryView> frames;
  std::map<std::string, std::string> metadata;

  void validate() const;
  std::size_t size() const noexcept { return frames.size(); }
};

}  // namespace viewstyle
