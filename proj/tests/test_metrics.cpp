// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>
#include <Eigen/Geometry>

#include "oracles.hpp"
#include "viewstyle/error.hpp"
#include "viewstyle/metrics.hpp"

using namespace viewstyle;

namespace {

Camera camera_at(const Eigen::Vector3d& position, double yaw) {
  return Camera{Intrinsics::centered(32, 24, 30.0),
                Pose(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix(), position)};
}

}  // namespace

TEST_CASE("sequential rmse") {
  std::mt19937_64 rng(97);
  const RgbdFrame a = oracle::smooth_frame(rng, 24, 24, 24.0);
  CHECK(sequential_rmse(a, a) < 1e-6);
  RgbdFrame b = a;
  for (Rgb& c : b.rgb.pixels()) c = (c.array() + 0.1f).min(1.0f).matrix();
  const double rmse = sequential_rmse(a, b);
  CHECK(rmse > 0.05);
  CHECK(rmse <= 0.1 + 1e-6);

  // Frame j looks the other way: nothing is covered.
  RgbdFrame away = a;
  away.pose = a.pose * Pose(Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitY()).toRotationMatrix(),
                            Eigen::Vector3d::Zero());
  try {
    sequential_rmse(a, away);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyValidity);
  }
}

TEST_CASE("feature extractors") {
  ColorImage flat(5, 4, Rgb(0.2f, 0.4f, 0.6f));
  const ChannelRaster id = IdentityExtractor().extract(flat);
  CHECK(id.channels() == 3);
  CHECK(id.at(1, 1, 2) == 0.6f);

  const ChannelRaster g = GradientPatchExtractor().extract(flat);
  REQUIRE(g.channels() == 12);
  for (int c = 0; c < 3; ++c) {
    CHECK(g.at(2, 2, 4 * c) == flat(2, 2)[c]);
    for (int k = 1; k < 4; ++k) CHECK(g.at(2, 2, 4 * c + k) == doctest::Approx(0.0).epsilon(1e-7));
  }
  ColorImage ramp(5, 1);
  for (int u = 0; u < 5; ++u) ramp(u, 0) = Rgb::Constant(0.1f * u);
  const ChannelRaster gr = GradientPatchExtractor().extract(ramp);
  CHECK(gr.at(2, 0, 1) == doctest::Approx(0.1));

  const ChannelRaster n = normalize_channels(g);
  double norm = 0.0;
  for (float x : n.pixel(1, 1)) norm += x * x;
  CHECK(norm == doctest::Approx(1.0));
  CHECK(normalize_channels(ChannelRaster(2, 2, 3)).values()[0] == 0.0f);

  std::mt19937_64 rng(101);
  const RgbdFrame a = oracle::smooth_frame(rng, 20, 20, 20.0);
  CHECK(sequential_feature_distance(a, a, GradientPatchExtractor()) < 1e-3);
}

TEST_CASE("evaluation view interpolation") {
  const Camera a = camera_at({0, 0, 0}, 0.0);
  const Camera b = camera_at({2, 0, 0}, 0.6);
  const auto mid = interpolate_eval_views(a, b);
  REQUIRE(mid.has_value());
  CHECK(mid->pose.translation().isApprox(Eigen::Vector3d(1, 0, 0)));
  CHECK(rotation_angle_between(mid->pose.rotation(), a.pose.rotation()) == doctest::Approx(0.3));
  const auto swapped = interpolate_eval_views(b, a);
  CHECK((swapped->pose.matrix() - mid->pose.matrix()).norm() < 1e-12);

  CHECK_FALSE(interpolate_eval_views(a, camera_at({0, 0, 0}, 1.7)).has_value());
  CHECK(interpolate_eval_views(a, camera_at({0, 0, 0}, 1.5)).has_value());
  Camera other = b;
  other.intrinsics = Intrinsics::centered(16, 16, 10.0);
  CHECK_THROWS_AS(interpolate_eval_views(a, other), Error);

  Camera wide = b;
  wide.intrinsics.fx = 40.0;
  CHECK(interpolate_eval_views(a, wide)->intrinsics.fx == 35.0);
}

TEST_CASE("nearest view and evaluation selection") {
  std::vector<Pose> poses;
  for (int i = 0; i < 5; ++i) poses.push_back(camera_at({double(i), 0, 0}, 0.1 * i).pose);
  CHECK(nearest_view(camera_at({2.2, 0, 0}, 0).pose, poses) == 2);
  // Equal distance: the smaller rotation wins.
  CHECK(nearest_view(camera_at({1.5, 0, 0}, 0.2).pose, poses) == 2);
  CHECK_THROWS_AS(nearest_view(Pose(), {}), Error);

  std::vector<Camera> views;
  for (int i = 0; i < 31; ++i) views.push_back(camera_at({0.1 * i, 0, 0}, 0.01 * i));
  CHECK(select_eval_views(views).size() == 30);
  const std::vector<Camera> capped = select_eval_views(views, 7);
  REQUIRE(capped.size() == 7);
  CHECK(capped.front().pose.translation().x() == doctest::Approx(0.05));
  // A pair rotated past 90 degrees produces no midpoint.
  views.push_back(camera_at({3.1, 0, 0}, 2.5));
  CHECK(select_eval_views(views).size() == 30);
}
