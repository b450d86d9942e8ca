// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "viewstyle/composite.hpp"
#include "viewstyle/error.hpp"

using namespace viewstyle;

TEST_CASE("compositing score") {
  const CompositeWeights w;
  CHECK(compositing_score(std::numbers::pi / 2, 1.0, 1.0, 5, 4, w) == doctest::Approx(-1.98).epsilon(1e-15));
  CHECK(compositing_score(0.0, 0.0, 1.0, 3, 3, w) == 0.0);
  // The sine term is symmetric about pi / 2.
  CHECK(compositing_score(0.3, 2.0, 1.0, 3, 1, w) ==
        doctest::Approx(compositing_score(std::numbers::pi - 0.3, 2.0, 1.0, 3, 1, w)));
  CHECK_THROWS_AS(compositing_score(0.0, 1.0, 0.0, 1, 0, w), Error);
  CHECK_THROWS_AS(compositing_score(0.0, 1.0, 1.0, 0, 1, w), Error);
  try {
    compositing_score(0.0, 1.0, -1.0, 1, 0, w);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonPositiveDepth);
  }
}

TEST_CASE("median matches a sorting oracle") {
  std::mt19937_64 rng(41);
  for (int n = 1; n < 40; ++n) {
    std::vector<double> values(static_cast<std::size_t>(n));
    for (double& x : values) x = oracle::uniform(rng, -5.0, 5.0);
    CHECK(median(values) == oracle::sorted_median(values));
  }
  CHECK(median({1.0, 2.0, 3.0, 10.0}) == 2.5);
  CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("median scale over a mask") {
  DepthMap pred(3, 1, 1.0f);
  DepthMap ref(3, 1);
  ref(0, 0) = 2.0f;
  ref(1, 0) = 3.0f;
  ref(2, 0) = 100.0f;
  ValidityMask mask(3, 1, 1);
  CHECK(median_scale(pred, ref, mask) == 3.0);
  mask(2, 0) = 0;
  CHECK(median_scale(pred, ref, mask) == 2.5);
  CHECK_THROWS_AS(median_scale(pred, ref, ValidityMask(3, 1, 0)), Error);
  CHECK_THROWS_AS(median_scale(pred, DepthMap(2, 1, 1.0f), mask), Error);
}

TEST_CASE("boundary band") {
  ValidityMask region(9, 9, 0);
  for (int v = 2; v < 7; ++v) {
    for (int u = 2; u < 7; ++u) region(u, v) = 1;
  }
  const ValidityMask band = boundary_band(region, 1);
  CHECK(count_true(band) == 25 - 9);
  CHECK(band(4, 4) == 0);
  CHECK(band(2, 2) == 1);
  // The raster border is not "outside".
  CHECK(count_true(boundary_band(ValidityMask(5, 5, 1), 2)) == 0);
  CHECK_THROWS_AS(boundary_band(region, -1), Error);
}

namespace {

// Synthetic warp covering the left part of the raster with a known depth.
WarpResult fake_warp(int w, int h, int covered_columns, float depth, const Rgb& color) {
  WarpResult r;
  r.rgb = ColorImage(w, h, Rgb::Zero());
  r.depth = DepthMap(w, h, 0.0f);
  r.validity = ValidityMask(w, h, 0);
  r.surface_normal = NormalMap(w, h, Eigen::Vector3f(0, 0, -1));
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < covered_columns; ++u) {
      r.rgb(u, v) = color;
      r.depth(u, v) = depth;
      r.validity(u, v) = 1;
    }
  }
  return r;
}

}  // namespace

TEST_CASE("composite selection and provenance") {
  RgbdFrame target = oracle::plane_frame(10, 6, 8.0, 2.0f);
  target.index = 3;
  const WarpResult warp = fake_warp(10, 6, 5, 4.0f, Rgb(1.0f, 0.0f, 0.0f));
  // Normal opposite to the look-at: theta = pi, sin = 0.
  const CompositeReference ref{&warp, Eigen::Vector3d::UnitZ(), 1};

  SUBCASE("aligned depth and permissive threshold") {
    CompositeOptions opts;
    opts.threshold = -std::numeric_limits<double>::infinity();
    const CompositeFrame c = build_composite(std::span(&ref, 1), target, opts);
    REQUIRE(c.depth_scales.size() == 1);
    CHECK(c.depth_scales[0] == doctest::Approx(0.5));
    CHECK(count_true(c.source_mask) == 30u);
    for (std::size_t i = 0; i < c.source_mask.size(); ++i) {
      if (c.source_mask[i]) {
        CHECK(c.rgb[i] == warp.rgb[i]);
        CHECK(c.source_reference[i] == 0);
        CHECK(c.depth[i] == doctest::Approx(2.0f));
      } else {
        CHECK(c.rgb[i] == target.rgb[i]);
        CHECK(c.source_reference[i] == -1);
      }
    }
  }
  SUBCASE("default threshold rejects a frontal, same-depth surface") {
    // S = 0 - 3 * 1 + 0.02 * 2 < 0.
    const CompositeFrame c = build_composite(std::span(&ref, 1), target);
    CHECK(count_true(c.source_mask) == 0u);
    CHECK(c.rgb == target.rgb);
  }
  SUBCASE("target holes take the warped surface") {
    target.depth(1, 1) = 0.0f;
    const CompositeFrame c = build_composite(std::span(&ref, 1), target);
    CHECK(count_true(c.source_mask) == 1u);
    CHECK(c.source_mask(1, 1) == 1);
  }
  SUBCASE("references after the target are rejected") {
    const CompositeReference late{&warp, Eigen::Vector3d::UnitZ(), 7};
    CHECK_THROWS_AS(build_composite(std::span(&late, 1), target), Error);
  }
  SUBCASE("higher score wins between references") {
    const WarpResult other = fake_warp(10, 6, 10, 4.0f, Rgb(0.0f, 1.0f, 0.0f));
    // An older reference earns the age reward.
    const CompositeReference refs[] = {ref, CompositeReference{&other, Eigen::Vector3d::UnitZ(), 0}};
    CompositeOptions opts;
    opts.threshold = -10.0;
    const CompositeFrame c = build_composite(refs, target, opts);
    CHECK(count_true(c.source_mask) == 60u);
    for (std::size_t i = 0; i < c.source_reference.size(); ++i) CHECK(c.source_reference[i] == 1);
  }
}
