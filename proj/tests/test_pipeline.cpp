// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <string>

#include <doctest.h>
#include <Eigen/Geometry>

#include "oracles.hpp"
#include "viewstyle/datagen.hpp"
#include "viewstyle/error.hpp"
#include "viewstyle/parallel.hpp"
#include "viewstyle/pipeline.hpp"
#include "viewstyle/stylizer.hpp"
#include "viewstyle/synthetic.hpp"

using namespace viewstyle;

namespace {

std::vector<RgbdFrame> small_orbit(int frames, int size) {
  OrbitOptions o;
  o.frames = frames;
  o.width = size;
  o.height = size;
  o.arc_degrees = 6.0 * frames;
  return render_trajectory(orbit_trajectory(o));
}

PipelineConfig small_config(int size) {
  PipelineConfig c;
  c.width = size;
  c.height = size;
  c.tokens = {8, 8};
  c.grid_steps = 20;
  c.seed = 7;
  return c;
}

class FailingDenoiser : public Denoiser {
 public:
  explicit FailingDenoiser(int fail_frame) : fail_frame_(fail_frame) {}
  Latent predict_noise(const Latent& x, double t, const Conditioning& c) override {
    if (c.frame == fail_frame_) throw Error(ErrorCode::kInvalidArgument, "denoiser gave up");
    return inner_.predict_noise(x, t, c);
  }

 private:
  int fail_frame_;
  MockStylizer inner_;
};

}  // namespace

TEST_CASE("latent encoding") {
  RgbdFrame f = oracle::plane_frame(6, 4, 5.0, 2.0f);
  f.depth(1, 1) = 0.0f;
  const Latent x = encode_latent(f);
  CHECK(x.channels() == latent::kChannels);
  CHECK(x.at(0, 0, latent::kDisparity) == 0.5f);
  CHECK(x.at(1, 1, latent::kDisparity) == 0.0f);
  const DecodedLatent d = decode_latent(x, f);
  CHECK(d.rgb == f.rgb);
  CHECK(d.depth == f.depth);

  Latent y = x;
  y.at(2, 2, latent::kRed) = 1.7f;
  y.at(2, 2, latent::kDisparity) = 0.25f;
  y.at(1, 1, latent::kDisparity) = 0.25f;
  const DecodedLatent e = decode_latent(y, f);
  CHECK(e.rgb(2, 2).x() == 1.0f);
  CHECK(e.depth(2, 2) == 4.0f);
  CHECK(e.depth(1, 1) == 0.0f);
}

TEST_CASE("token pooling and upsampling") {
  ChannelRaster x(8, 6, 2, 0.0f);
  for (int v = 0; v < 6; ++v) {
    for (int u = 0; u < 8; ++u) {
      x.at(u, v, 0) = 3.0f;
      x.at(u, v, 1) = static_cast<float>(u);
    }
  }
  const Eigen::MatrixXd t = pool_tokens(x, {4, 3}, 0, 2);
  REQUIRE(t.rows() == 12);
  CHECK((t.col(0).array() == 3.0).all());
  CHECK(t(0, 1) == 0.5);
  CHECK(t(3, 1) == 6.5);
  const ChannelRaster up = upsample_tokens(t, {4, 3}, 8, 6);
  CHECK(up.at(5, 3, 0) == doctest::Approx(3.0));
  // Linear along u between token centers, clamped at the edges.
  CHECK(up.at(0, 0, 1) == doctest::Approx(0.5));
  CHECK(up.at(3, 0, 1) == doctest::Approx(3.0));
}

TEST_CASE("mock stylizer strengths") {
  const RgbdFrame f = small_orbit(1, 32).front();
  MockStylizer mock;
  SUBCASE("zero strengths are the identity") {
    const RgbdFrame out = stylize_frame(f, mock, StyleStrength{0.0, 0.0, 0.0}, 20, 1);
    CHECK(out.rgb == f.rgb);
    CHECK(out.depth == f.depth);
  }
  SUBCASE("color-only strength keeps depth") {
    const RgbdFrame out = stylize_frame(f, mock, StyleStrength{0.5, 0.0, 0.05}, 20, 1);
    CHECK(out.depth == f.depth);
    CHECK_FALSE(out.rgb == f.rgb);
  }
  SUBCASE("depth-only strength keeps color") {
    const RgbdFrame out = stylize_frame(f, mock, StyleStrength{0.0, 0.5, 0.05}, 20, 1);
    CHECK(out.rgb == f.rgb);
    CHECK_FALSE(out.depth == f.depth);
  }
  SUBCASE("deterministic") {
    MockStylizer other;
    const StyleStrength s;
    CHECK(stylize_frame(f, mock, s, 20, 4).rgb == stylize_frame(f, other, s, 20, 4).rgb);
  }
}

TEST_CASE("pipeline basics") {
  const std::vector<RgbdFrame> inputs = small_orbit(4, 48);
  PipelineConfig config = small_config(48);

  SUBCASE("single frame equals the plain stylizer output") {
    const PipelineResult r = run_pipeline(std::span(inputs).first(1), config);
    MockStylizer mock(config.stylizer);
    const RgbdFrame direct = stylize_frame(inputs[0], mock, config.strengths, config.grid_steps, config.seed);
    CHECK(r.frames.at(0).rgb == direct.rgb);
    CHECK(r.frames.at(0).depth == direct.depth);
    CHECK(std::isnan(r.reports[0].seq_rmse));
  }
  SUBCASE("zero strengths reproduce the inputs") {
    config.strengths = StyleStrength{0.0, 0.0, 0.0};
    const PipelineResult r = run_pipeline(inputs, config);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      CHECK(r.frames[k].rgb == inputs[k].rgb);
      CHECK(r.frames[k].depth == inputs[k].depth);
    }
  }
  SUBCASE("references follow the policy") {
    const PipelineResult r = run_pipeline(inputs, config);
    CHECK(r.reports[1].references == std::vector<int>{0});
    CHECK(r.reports[3].references == std::vector<int>{0, 2});
    CHECK(r.manifest()["frames"].size() == 4);
    CHECK(r.manifest()["output_hash"] == r.output_hash);
    CHECK(r.output_hash == frames_hash(r.frames));
  }
  SUBCASE("causality: later inputs do not change earlier outputs") {
    const PipelineResult a = run_pipeline(inputs, config);
    std::vector<RgbdFrame> changed = inputs;
    for (Rgb& c : changed[3].rgb.pixels()) c = Rgb::Constant(0.5f);
    const PipelineResult b = run_pipeline(changed, config);
    for (int k = 0; k < 3; ++k) CHECK(a.frames[k].rgb == b.frames[k].rgb);
    CHECK_FALSE(a.frames[3].rgb == b.frames[3].rgb);
  }
  SUBCASE("thread count does not change the outputs") {
    set_thread_count(1);
    const PipelineResult a = run_pipeline(inputs, config);
    set_thread_count(3);
    const PipelineResult b = run_pipeline(inputs, config);
    set_thread_count(0);
    CHECK(a.output_hash == b.output_hash);
  }
  SUBCASE("failures name the frame and keep earlier outputs") {
    FailingDenoiser failing(2);
    std::vector<int> delivered;
    try {
      run_pipeline(inputs, config, failing, [&](const RgbdFrame&, const FrameReport& r) { delivered.push_back(r.index); });
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kFrameFailed);
      CHECK(std::string(e.what()).find("frame 2") != std::string::npos);
    }
    CHECK(delivered == std::vector<int>{0, 1});
  }
  SUBCASE("resolution mismatch") {
    config.width = 64;
    CHECK_THROWS_AS(run_pipeline(inputs, config), Error);
  }
}

TEST_CASE("pipeline configuration documents") {
  PipelineConfig c = small_config(64);
  c.trajectory = "/somewhere/t.json";
  c.strengths.t_rgb_max = 0.7;
  c.attention.lambda_inject = 0.2;
  c.composite.weights.lambda2 = 2.5;
  c.references.first = false;
  const PipelineConfig back = config_from_json(config_to_json(c));
  CHECK(back.strengths.t_rgb_max == 0.7);
  CHECK(back.attention.lambda_inject == 0.2);
  CHECK(back.composite.weights.lambda2 == 2.5);
  CHECK_FALSE(back.references.first);
  CHECK(back.tokens == c.tokens);
  CHECK(config_hash(back) == config_hash(c));

  PipelineConfig moved = c;
  moved.trajectory = "/elsewhere/t.json";
  moved.output = "/tmp/out";
  CHECK(config_hash(moved) == config_hash(c));
  moved.seed = 8;
  CHECK(config_hash(moved) != config_hash(c));

  CHECK(config_from_json(nlohmann::json::object()).width == 512);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"seed", "seven"}}), Error);

  ReferencePolicy policy;
  CHECK(policy.references(0).empty());
  CHECK(policy.references(1) == std::vector<int>{0});
  policy.first = false;
  CHECK(policy.references(5) == std::vector<int>{4});
}

TEST_CASE("training pairs") {
  const std::vector<RgbdFrame> inputs = small_orbit(2, 48);
  MockStylizer mock;
  const RgbdFrame stylized = stylize_frame(inputs[0], mock, StyleStrength{}, 20, 3);

  SUBCASE("zero offset reproduces the stylized image") {
    const TrainingPair p = make_training_pair(inputs[0], stylized, Pose(), WarpOptions{}, 3);
    for (std::size_t i = 0; i < p.mask.size(); ++i) {
      if (p.mask[i]) CHECK(p.composite[i] == stylized.rgb[i]);
    }
    // Only pixels next to clipped silhouettes are lost.
    CHECK(count_true(p.mask) > p.mask.size() * 9 / 10);

    // Without depth jumps the whole interior survives.
    std::mt19937_64 rng(7);
    const RgbdFrame smooth = oracle::smooth_frame(rng, 40, 36, 36.0);
    MockStylizer fresh;
    const RgbdFrame styled = stylize_frame(smooth, fresh, StyleStrength{}, 20, 3);
    const TrainingPair q = make_training_pair(smooth, styled, Pose(), WarpOptions{}, 3);
    for (int v = 2; v < 34; ++v) {
      for (int u = 2; u < 38; ++u) {
        REQUIRE(q.mask(u, v) == 1);
        CHECK(q.composite(u, v) == styled.rgb(u, v));
      }
    }
  }
  SUBCASE("mask equals validity, composite pixels come from the round trip") {
    const Pose offset = random_camera_offset(5, 0, 0, 0.3, 10.0 * std::numbers::pi / 180);
    const TrainingPair p = make_training_pair(inputs[0], stylized, offset, WarpOptions{}, 3);
    CHECK(p.mask == p.validity);
    CHECK(count_true(p.mask) > 0);
    CHECK(count_true(p.mask) < p.mask.size());
    for (std::size_t i = 0; i < p.mask.size(); ++i) {
      CHECK(p.composite[i] == (p.mask[i] ? p.warped[i] : inputs[0].rgb[i]));
    }
  }
  SUBCASE("random offsets respect their bounds") {
    for (int view = 0; view < 200; ++view) {
      const Pose o = random_camera_offset(9, 1, view, 0.5, 0.2);
      CHECK(o.translation().norm() <= 0.5 + 1e-12);
      CHECK(rotation_angle_between(o.rotation(), Eigen::Matrix3d::Identity()) <= 0.2 + 1e-9);
    }
    CHECK(random_camera_offset(9, 1, 2, 0.5, 0.2) == random_camera_offset(9, 1, 2, 0.5, 0.2));
  }
}

TEST_CASE("training pair synthesis") {
  const std::vector<RgbdFrame> inputs = small_orbit(3, 40);
  DatagenOptions options;
  options.views_per_input = 2;
  options.grid_steps = 20;
  options.seed = 4;
  set_thread_count(1);
  const DatagenResult a = synthesize_controlnet_pairs(inputs, options);
  set_thread_count(3);
  const DatagenResult b = synthesize_controlnet_pairs(inputs, options);
  set_thread_count(0);
  REQUIRE(a.pairs.size() == 6);
  REQUIRE(b.pairs.size() == 6);
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].input == static_cast<int>(i / 2));
    CHECK(a.pairs[i].composite == b.pairs[i].composite);
    CHECK(a.pairs[i].mask == a.pairs[i].validity);
  }
  options.min_validity = 1.0;
  const DatagenResult none = synthesize_controlnet_pairs(inputs, options);
  CHECK(none.pairs.empty());
  CHECK(none.skipped.size() == 6);
  options.views_per_input = 0;
  CHECK_THROWS_AS(synthesize_controlnet_pairs(inputs, options), Error);
}

TEST_CASE("synthetic scene") {
  OrbitOptions o;
  o.frames = 3;
  o.width = 40;
  o.height = 30;
  const Trajectory t = orbit_trajectory(o);
  REQUIRE(t.size() == 3);
  CHECK(t.frames[1].name == "frame_0001");
  CHECK(t.metadata.at("scene") == "textured-cube");
  const RgbdFrame f = render_box_scene(t.frames[0].camera, 0);
  CHECK_NOTHROW(f.validate());
  for (float d : f.depth.pixels()) CHECK(valid_depth(d));
  // The camera looks at the cube center.
  const Eigen::Vector3d dir = look_at_vector(t.frames[0].camera.pose);
  CHECK(dir.dot(-t.frames[0].camera.pose.translation().normalized()) == doctest::Approx(1.0));
  o.frames = 0;
  CHECK_THROWS_AS(o.validate(), Error);
}
