// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <doctest.h>

#include "oracles.hpp"
#include "viewstyle/error.hpp"
#include "viewstyle/losses.hpp"

using namespace viewstyle;

namespace {

DepthMap random_depth(std::mt19937_64& rng, int w, int h) {
  DepthMap d(w, h);
  for (float& x : d.pixels()) x = static_cast<float>(oracle::uniform(rng, 0.5, 5.0));
  return d;
}

// mean(d^2) - lambda mean(d)^2 with d = log(pred / gt), written out directly.
double depth_loss_loop(const DepthMap& pred, const DepthMap& gt, const ValidityMask& mask, double lambda) {
  double s = 0.0;
  double s2 = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const double d = std::log(static_cast<double>(pred[i])) - std::log(static_cast<double>(gt[i]));
    s += d;
    s2 += d * d;
    ++n;
  }
  return s2 / n - lambda * (s / n) * (s / n);
}

}  // namespace

TEST_CASE("scale-invariant depth loss") {
  std::mt19937_64 rng(83);
  const DepthMap pred = random_depth(rng, 12, 9);
  const DepthMap gt = random_depth(rng, 12, 9);
  ValidityMask mask(12, 9, 1);
  for (std::size_t i = 0; i < mask.size(); i += 5) mask[i] = 0;

  const double base = scale_invariant_depth_loss(pred, gt, mask);
  CHECK(base == doctest::Approx(depth_loss_loop(pred, gt, mask, 1.0)).epsilon(1e-12));
  CHECK(scale_invariant_depth_loss(pred, gt, mask, 0.5) ==
        doctest::Approx(depth_loss_loop(pred, gt, mask, 0.5)).epsilon(1e-12));
  for (float s : {0.25f, 2.0f, 8.0f}) {
    DepthMap scaled = pred;
    for (float& x : scaled.pixels()) x *= s;
    CHECK(std::abs(scale_invariant_depth_loss(scaled, gt, mask) - base) <= 1e-9 * std::abs(base));
  }
  CHECK(scale_invariant_depth_loss(pred, pred, mask) == doctest::Approx(0.0));

  CHECK_THROWS_AS(scale_invariant_depth_loss(pred, gt, ValidityMask(12, 9, 0)), Error);
  CHECK_THROWS_AS(scale_invariant_depth_loss(pred, DepthMap(3, 3, 1.0f), mask), Error);
  DepthMap holed = pred;
  holed[1] = 0.0f;
  try {
    scale_invariant_depth_loss(holed, gt, mask);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonPositiveDepth);
  }
}

TEST_CASE("normal regularizers match loop oracles") {
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 5; ++trial) {
    const NormalMap a = oracle::random_normals(rng, 9, 7);
    const NormalMap b = oracle::random_normals(rng, 9, 7);
    CHECK(std::abs(tvl1_normals(a) - oracle::tvl1_loop(a)) < 1e-9);
    CHECK(std::abs(normal_dot_loss(a, b) - oracle::normal_dot_loop(a, b, nullptr)) < 1e-9);
    ValidityMask mask(9, 7, 0);
    for (std::size_t i = 0; i < mask.size(); i += 3) mask[i] = 1;
    CHECK(std::abs(normal_dot_loss(a, b, mask) - oracle::normal_dot_loop(a, b, &mask)) < 1e-9);
  }
  const NormalMap flat(4, 4, Eigen::Vector3f(0, 0, -1));
  CHECK(tvl1_normals(flat) == 0.0);
  CHECK(normal_dot_loss(flat, flat) == -16.0);
  CHECK_THROWS_AS(normal_dot_loss(flat, NormalMap(3, 4)), Error);
}

TEST_CASE("total loss") {
  CHECK(total_loss(1.0, 1.0, 1.0, 1.0) == doctest::Approx(1.551).epsilon(1e-15));
  CHECK(total_loss(2.0, 0.0, 0.0, 0.0) == 2.0);
  LossWeights w;
  w.lambda_d = -1.0;
  CHECK_THROWS_AS(w.validate(), Error);
}
