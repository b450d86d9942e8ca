// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>
#include <Eigen/Geometry>

#include "oracles.hpp"
#include "viewstyle/error.hpp"
#include "viewstyle/frame.hpp"
#include "viewstyle/geometry.hpp"

using namespace viewstyle;

TEST_CASE("pose validation and algebra") {
  Eigen::Matrix4d scaled = Eigen::Matrix4d::Identity();
  scaled(0, 0) = 2.0;
  CHECK_THROWS_AS(Pose{scaled}, Error);
  Eigen::Matrix4d mirror = Eigen::Matrix4d::Identity();
  mirror(2, 2) = -1.0;
  CHECK_THROWS_AS(Pose{mirror}, Error);
  Eigen::Matrix4d bad_row = Eigen::Matrix4d::Identity();
  bad_row(3, 0) = 0.5;
  CHECK_THROWS_AS(Pose{bad_row}, Error);

  std::mt19937_64 rng(3);
  const Pose p = oracle::random_pose(rng, 1.0, 2.0);
  const Pose q = p * p.inverse();
  CHECK((q.matrix() - Eigen::Matrix4d::Identity()).norm() < 1e-12);
  CHECK(look_at_vector(Pose()).isApprox(Eigen::Vector3d::UnitZ()));

  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitY()).toRotationMatrix();
  CHECK(rotation_angle_between(Eigen::Matrix3d::Identity(), r) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("intrinsics and frame validation") {
  const Intrinsics k = Intrinsics::centered(64, 48, 50.0);
  CHECK(k.cx == doctest::Approx(31.5));
  CHECK(k.cy == doctest::Approx(23.5));
  Intrinsics bad = k;
  bad.fx = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);

  RgbdFrame f = oracle::plane_frame(8, 8, 10.0, 2.0f);
  CHECK_NOTHROW(f.validate());
  f.depth(1, 1) = -1.0f;
  CHECK_THROWS_AS(f.validate(), Error);
  f.depth(1, 1) = 0.0f;  // hole
  CHECK_NOTHROW(f.validate());
  f.rgb(0, 0) = Eigen::Vector3f(1.5f, 0.0f, 0.0f);
  CHECK_THROWS_AS(f.validate(), Error);
}

TEST_CASE("disparity conversion") {
  DepthMap d(2, 1, 4.0f);
  const DisparityRaster disp = depth_to_disparity(d);
  CHECK(disp.disparity(0, 0) == 0.25f);
  CHECK(disparity_to_depth(disp).pixels()[1] == 4.0f);
  d(0, 0) = 0.0f;
  CHECK_THROWS_AS(depth_to_disparity(d), Error);
}

TEST_CASE("project inverts backproject") {
  std::mt19937_64 rng(11);
  const RgbdFrame f = oracle::smooth_frame(rng, 16, 12, 14.0);
  const PointSet points = backproject(f);
  REQUIRE(points.points.size() == f.depth.size());
  for (std::size_t i = 0; i < points.points.size(); i += 7) {
    const auto p = project(f.camera(), points.points[i]);
    REQUIRE(p.has_value());
    CHECK(p->u == doctest::Approx(points.pixels[i][0]).epsilon(1e-9));
    CHECK(p->v == doctest::Approx(points.pixels[i][1]).epsilon(1e-9));
    CHECK(p->depth == doctest::Approx(f.depth(points.pixels[i][0], points.pixels[i][1])).epsilon(1e-6));
  }
  // Behind the camera.
  const Eigen::Vector3d behind = f.pose.transform_point(Eigen::Vector3d(0, 0, -1));
  CHECK_FALSE(project(f.camera(), behind).has_value());
}

TEST_CASE("mesh triangulation and clipping") {
  RgbdFrame f = oracle::plane_frame(6, 5, 8.0, 3.0f);
  const DepthMesh full = build_mesh(f);
  CHECK(max_triangle_count(f) == 2u * 5u * 4u);
  CHECK(full.triangles.size() == max_triangle_count(f));
  for (const Eigen::Vector3d& n : full.normals) CHECK(std::abs(n.z()) == doctest::Approx(1.0));

  SUBCASE("holes remove every triangle using the vertex") {
    f.depth(2, 2) = 0.0f;
    // Of the four quads around the hole, the diagonal split leaves two of the
    // eight triangles without it.
    CHECK(build_mesh(f).triangles.size() == full.triangles.size() - 6);
  }
  SUBCASE("depth jumps are dropped unless disabled") {
    for (int v = 0; v < 5; ++v) {
      for (int u = 3; u < 6; ++u) f.depth(u, v) = 15.0f;
    }
    const DepthMesh clipped = build_mesh(f);
    CHECK(clipped.triangles.size() == full.triangles.size() - 2 * 4);
    MeshOptions keep;
    keep.clip_depth_jumps = false;
    keep.clip_cos_threshold = 0.0;
    CHECK(build_mesh(f, keep).triangles.size() == full.triangles.size());
  }
  SUBCASE("grazing triangles are dropped") {
    // Plane tilted almost parallel to the view direction.
    for (int v = 0; v < 5; ++v) {
      for (int u = 0; u < 6; ++u) f.depth(u, v) = 1.0f + 2.0f * static_cast<float>(u);
    }
    MeshOptions opts;
    opts.clip_depth_jumps = false;
    opts.clip_cos_threshold = 0.9;
    CHECK(build_mesh(f, opts).triangles.size() < full.triangles.size());
  }
  MeshOptions bad;
  bad.depth_jump_ratio = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("normals of a fronto-parallel plane face the camera") {
  const RgbdFrame f = oracle::plane_frame(7, 7, 9.0, 2.0f);
  const NormalMap n = normals_from_depth(f);
  for (const Eigen::Vector3f& x : n.pixels()) {
    CHECK(x.z() == doctest::Approx(-1.0).epsilon(1e-6));
  }
}
