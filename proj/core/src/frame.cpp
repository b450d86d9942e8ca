// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/frame.hpp"

#include <algorithm>
#include <cmath>

namespace viewstyle {

namespace {

constexpr double kRotationTolerance = 1e-6;

}  // namespace

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive and finite");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "raster size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point outside the raster");
  }
}

Intrinsics Intrinsics::centered(int width, int height, double focal) {
  Intrinsics k{focal, focal, 0.5 * (width - 1), 0.5 * (height - 1), width, height};
  k.validate();
  return k;
}

Pose::Pose(const Eigen::Matrix4d& world_from_camera) : matrix_(world_from_camera) {
  if (!matrix_.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "pose contains non-finite values");
  }
  const Eigen::Matrix3d r = rotation();
  const double orthogonality = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (orthogonality >= kRotationTolerance || std::abs(r.determinant() - 1.0) >= kRotationTolerance) {
    throw Error(ErrorCode::kInvalidArgument, "pose rotation is not a proper rotation");
  }
  const Eigen::RowVector4d last = matrix_.row(3);
  if (last != Eigen::RowVector4d(0.0, 0.0, 0.0, 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pose last row must be (0, 0, 0, 1)");
  }
}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : Pose([&] {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
      }()) {}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation().transpose();
  Pose out;
  out.matrix_.topLeftCorner<3, 3>() = rt;
  out.matrix_.topRightCorner<3, 1>() = -rt * translation();
  return out;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.matrix_.topLeftCorner<3, 3>() = rotation() * rhs.rotation();
  out.matrix_.topRightCorner<3, 1>() = rotation() * rhs.translation() + translation();
  return out;
}

Eigen::Vector3d look_at_vector(const Pose& pose) { return pose.rotation().col(2).normalized(); }

double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d relative = a.transpose() * b;
  const double c = std::clamp((relative.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

void RgbdFrame::validate() const {
  intrinsics.validate();
  if (rgb.width() != intrinsics.width || rgb.height() != intrinsics.height) {
    throw Error(ErrorCode::kDimensionMismatch, "rgb raster does not match intrinsics");
  }
  if (depth.width() != intrinsics.width || depth.height() != intrinsics.height) {
    throw Error(ErrorCode::kDimensionMismatch, "depth raster does not match intrinsics");
  }
  for (const Rgb& c : rgb.pixels()) {
    if (!(c.minCoeff() >= 0.0f && c.maxCoeff() <= 1.0f)) {
      throw Error(ErrorCode::kInvalidArgument, "rgb values must lie in [0, 1]");
    }
  }
  for (const float d : depth.pixels()) {
    if (d != 0.0f && !valid_depth(d)) {
      throw Error(ErrorCode::kNonPositiveDepth, "depth must be finite and positive or a 0 hole");
    }
  }
  if (index < 0) throw Error(ErrorCode::kInvalidArgument, "frame index must be non-negative");
}

DisparityRaster depth_to_disparity(const DepthMap& depth) {
  DisparityRaster out{Grid<float>(depth.width(), depth.height())};
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const float d = depth[i];
    if (!(d > 0.0f)) {
      throw Error(ErrorCode::kNonPositiveDepth, "depth must be > 0 for disparity conversion");
    }
    out.disparity[i] = static_cast<float>(1.0 / static_cast<double>(d));
  }
  return out;
}

DepthMap disparity_to_depth(const DisparityRaster& disparity) {
  DepthMap out(disparity.disparity.width(), disparity.disparity.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float s = disparity.disparity[i];
    if (!(s > 0.0f)) {
      throw Error(ErrorCode::kNonPositiveDepth, "disparity must be > 0 for depth conversion");
    }
    out[i] = static_cast<float>(1.0 / static_cast<double>(s));
  }
  return out;
}

void Trajectory::validate() const {
  if (frames.empty()) throw Error(ErrorCode::kInvalidArgument, "trajectory has no frames");
  for (const TrajectoryView& view : frames) view.camera.intrinsics.validate();
}

}  // namespace viewstyle
