// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include <doctest.h>

#include "oracles.hpp"
#include "viewstyle/error.hpp"
#include "viewstyle/schedule.hpp"

using namespace viewstyle;

namespace {

Latent random_latent(std::mt19937_64& rng, int w, int h) {
  Latent x(w, h, latent::kChannels);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      for (int c = 0; c <= latent::kDisparity; ++c) x.at(u, v, c) = static_cast<float>(oracle::uniform(rng, 0.1, 0.9));
    }
  }
  return x;
}

// Predicts a fixed clean sample and reports the implied noise.
class CleanPredictor : public Denoiser {
 public:
  CleanPredictor(Latent clean, NoiseSchedule schedule) : clean_(std::move(clean)), schedule_(schedule) {}
  Latent predict_noise(const Latent& x, double t, const Conditioning&) override {
    calls.push_back({t, x});
    return noise_from_clean(x, clean_, t, schedule_);
  }
  std::vector<std::pair<double, Latent>> calls;

 private:
  Latent clean_;
  NoiseSchedule schedule_;
};

bool group_equal(const Latent& a, const Latent& b, int first, int last) {
  for (int v = 0; v < a.height(); ++v) {
    for (int u = 0; u < a.width(); ++u) {
      for (int c = first; c <= last; ++c) {
        if (a.at(u, v, c) != b.at(u, v, c)) return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("cosine schedule") {
  const NoiseSchedule s;
  CHECK(s.alpha_bar(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.alpha_bar(1.0) == 1e-4);
  double prev = 2.0;
  for (int k = 0; k <= 100; ++k) {
    const double a = s.alpha_bar(k / 100.0);
    CHECK(a < prev);
    prev = a;
  }
  const double f = [](double t) {
    const double c = std::cos((t + 0.008) / 1.008 * std::numbers::pi / 2);
    return c * c;
  }(0.5);
  const double f0 = std::pow(std::cos(0.008 / 1.008 * std::numbers::pi / 2), 2);
  CHECK(s.alpha_bar(0.5) == doctest::Approx(f / f0).epsilon(1e-14));
  CHECK_THROWS_AS(NoiseSchedule(0.008, 0.0), Error);
}

TEST_CASE("timestep grids") {
  const TimestepGrid g = TimestepGrid::uniform(50);
  REQUIRE(g.timesteps.size() == 51);
  CHECK(g.timesteps.front() == 1.0);
  CHECK(g.timesteps.back() == 0.0);
  TimestepGrid bad{{0.5, 0.6}};
  CHECK_THROWS_AS(bad.validate(), Error);

  const StyleStrength s{0.5, 0.3, 0.05};
  const std::vector<double> inv = inversion_timesteps(s, g);
  CHECK(inv.front() == 0.05);
  CHECK(inv.back() == 0.5);
  CHECK(std::find(inv.begin(), inv.end(), 0.3) != inv.end());
  CHECK(std::is_sorted(inv.begin(), inv.end()));
  const std::vector<double> den = denoise_timesteps(s, g);
  CHECK(den.front() == 0.5);
  CHECK(den.back() == 0.0);
  CHECK(std::is_sorted(den.rbegin(), den.rend()));

  CHECK(inversion_timesteps(StyleStrength{0.0, 0.0, 0.0}, g).empty());
  CHECK_THROWS_AS(inversion_timesteps(StyleStrength{0.5, 0.5, 0.05}, TimestepGrid::uniform(1)), Error);
  try {
    inversion_timesteps(StyleStrength{0.5, 0.5, 0.05}, TimestepGrid::uniform(1));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGridTooCoarse);
  }
  CHECK_THROWS_AS(StyleStrength({0.5, 0.3, 0.4}).validate(), Error);
  CHECK_NOTHROW(StyleStrength({0.5, 0.0, 0.4}).validate());
}

TEST_CASE("ddim step closed form") {
  std::mt19937_64 rng(61);
  const NoiseSchedule s;
  const Latent x = random_latent(rng, 4, 3);
  const Latent eps = random_latent(rng, 4, 3);
  const Latent y = ddim_step(x, eps, 0.2, 0.6, s);
  const double af = s.alpha_bar(0.2);
  const double at = s.alpha_bar(0.6);
  for (std::size_t i = 0; i < x.values().size(); ++i) {
    const double x0 = (x.values()[i] - std::sqrt(1 - af) * eps.values()[i]) / std::sqrt(af);
    CHECK(y.values()[i] == doctest::Approx(std::sqrt(at) * x0 + std::sqrt(1 - at) * eps.values()[i]).epsilon(1e-6));
  }
  // Zero noise is a pure rescaling.
  const Latent z = ddim_step(x, Latent(4, 3, latent::kChannels), 0.2, 0.6, s);
  CHECK(z.values()[5] == doctest::Approx(x.values()[5] * std::sqrt(at / af)).epsilon(1e-6));
  // Moving back with the same noise returns the start.
  const Latent back = ddim_step(y, eps, 0.6, 0.2, s);
  for (std::size_t i = 0; i < x.values().size(); ++i) CHECK(back.values()[i] == doctest::Approx(x.values()[i]).epsilon(1e-5));

  // noise_from_clean recovers the noise used to corrupt a clean sample.
  const double a = s.alpha_bar(0.4);
  Latent noisy(4, 3, latent::kChannels);
  for (std::size_t i = 0; i < noisy.values().size(); ++i) {
    noisy.values()[i] = static_cast<float>(std::sqrt(a) * x.values()[i] + std::sqrt(1 - a) * eps.values()[i]);
  }
  const Latent e = noise_from_clean(noisy, x, 0.4, s);
  for (std::size_t i = 0; i < e.values().size(); ++i) CHECK(e.values()[i] == doctest::Approx(eps.values()[i]).epsilon(1e-4));
  CHECK_THROWS_AS(ddim_step(x, Latent(2, 2, 8), 0.1, 0.2, s), Error);
}

TEST_CASE("channel masks and gated updates") {
  const StyleStrength s{0.6, 0.3, 0.05};
  CHECK(channel_masks(0.3, s).depth);
  CHECK_FALSE(channel_masks(0.31, s).depth);
  CHECK(channel_masks(0.31, s).rgb);
  CHECK_FALSE(channel_masks(0.61, s).rgb);

  std::mt19937_64 rng(67);
  Latent x = random_latent(rng, 3, 3);
  const Latent original = x;
  const Latent proposal = random_latent(rng, 3, 3);
  gated_update(x, proposal, ChannelMasks{true, false, 0.4});
  CHECK(group_equal(x, proposal, 0, 2));
  CHECK(group_equal(x, original, 3, 7));
  gated_update(x, proposal, ChannelMasks{false, true, 0.1});
  CHECK(group_equal(x, proposal, 0, 3));
  CHECK_THROWS_AS(gated_update(x, Latent(2, 3, 8), ChannelMasks{}), Error);
}

TEST_CASE("counter-based normals") {
  CHECK(counter_normal(1, 2, 3, 4) == counter_normal(1, 2, 3, 4));
  CHECK(counter_normal(1, 2, 3, 4) != counter_normal(1, 2, 3, 5));
  CHECK(counter_normal(1, 2, 3, 4) != counter_normal(2, 2, 3, 4));
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = counter_normal(9, 0, 0, static_cast<std::uint64_t>(i));
    sum += z;
    sq += z * z;
    const double u = counter_uniform(9, 0, 0, static_cast<std::uint64_t>(i));
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("latent cache") {
  LatentCache cache;
  const Latent a(2, 2, 8, 1.0f);
  cache.put(0, 0.5, a);
  cache.put(0, 0.25, Latent(2, 2, 8, 2.0f));
  cache.put(1, 0.5, a);
  try {
    cache.put(0, 0.5, a);
    FAIL("expected a conflict");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCacheConflict);
  }
  CHECK(cache.size() == 3);
  CHECK(cache.get(0, 0.25)->values()[0] == 2.0f);
  CHECK(cache.get(2, 0.25) == nullptr);
  CHECK(cache.nearest(0, 0.3)->values()[0] == 2.0f);
  CHECK(cache.nearest(3, 0.3) == nullptr);
  const auto held = cache.get(0, 0.5);
  cache.evict(0);
  CHECK(cache.count(0) == 0);
  CHECK(cache.count(1) == 1);
  CHECK(held->values()[0] == 1.0f);

  // Concurrent readers while a writer adds other frames.
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&cache, t] {
      for (int i = 0; i < 200; ++i) {
        if (t == 0) {
          cache.put(10 + i, 0.0, Latent(1, 1, 8));
        } else {
          CHECK(cache.get(1, 0.5) != nullptr);
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(cache.size() == 201);
}

TEST_CASE("zero strengths pass through bit-identically") {
  std::mt19937_64 rng(71);
  const Latent x = random_latent(rng, 6, 5);
  const NoiseSchedule s;
  CleanPredictor model(random_latent(rng, 6, 5), s);
  const StyleStrength zero{0.0, 0.0, 0.0};
  const InversionResult inv = partial_invert(x, model, zero, TimestepGrid::uniform(50), s, Conditioning{}, 3);
  CHECK(inv.latent == x);
  LatentCache cache;
  const Latent out = denoise(inv.latent, model, zero, TimestepGrid::uniform(50), s, Conditioning{}, &cache);
  CHECK(group_equal(out, x, 0, 3));
  CHECK(model.calls.empty());
  CHECK(cache.size() == 1);
}

TEST_CASE("asymmetric strengths freeze the lower group") {
  std::mt19937_64 rng(73);
  const Latent x = random_latent(rng, 6, 5);
  const NoiseSchedule s;
  CleanPredictor model(random_latent(rng, 6, 5), s);
  const StyleStrength st{0.6, 0.3, 0.05};
  const TimestepGrid grid = TimestepGrid::uniform(50);
  const InversionResult inv = partial_invert(x, model, st, grid, s, Conditioning{}, 5);
  REQUIRE(inv.intermediates.size() == inv.timesteps.size());
  std::size_t frozen_at = 0;
  for (std::size_t k = 0; k < inv.timesteps.size(); ++k) {
    if (inv.timesteps[k] == 0.3) frozen_at = k;
  }
  REQUIRE(frozen_at > 0);
  for (std::size_t k = frozen_at; k < inv.intermediates.size(); ++k) {
    CHECK(group_equal(inv.intermediates[k], inv.intermediates[frozen_at], latent::kDisparity, latent::kDisparity));
  }
  CHECK_FALSE(group_equal(inv.intermediates.back(), inv.intermediates[frozen_at], 0, 2));

  model.calls.clear();
  denoise(inv.latent, model, st, grid, s, Conditioning{}, nullptr);
  int frozen_calls = 0;
  for (const auto& [t, latent] : model.calls) {
    if (t > 0.3) {
      ++frozen_calls;
      CHECK(group_equal(latent, inv.latent, latent::kDisparity, latent::kDisparity));
      CHECK(latent.at(0, 0, latent::kMaskDepth) == 0.0f);
      CHECK(latent.at(0, 0, latent::kMaskRgb) == 1.0f);
    }
  }
  CHECK(frozen_calls > 0);
}

TEST_CASE("inversion and denoising round trip") {
  std::mt19937_64 rng(79);
  const Latent x = random_latent(rng, 8, 8);
  const NoiseSchedule s;
  CleanPredictor model(x, s);
  const StyleStrength st{0.7, 0.4, 0.05};
  const TimestepGrid grid = TimestepGrid::uniform(50);
  const InversionResult inv = partial_invert(x, model, st, grid, s, Conditioning{}, 11);
  CHECK_FALSE(group_equal(inv.latent, x, 0, 3));
  const Latent out = denoise(inv.latent, model, st, grid, s, Conditioning{}, nullptr);
  double err = 0.0;
  for (int v = 0; v < 8; ++v) {
    for (int u = 0; u < 8; ++u) {
      for (int c = 0; c <= latent::kDisparity; ++c) err = std::max(err, std::abs(double(out.at(u, v, c)) - x.at(u, v, c)));
    }
  }
  CHECK(err < 1e-4);
}

TEST_CASE("depth rescaling") {
  DepthMap stylized(3, 1, 2.0f);
  stylized(2, 0) = 0.0f;
  const DepthMap rendered(3, 1, 3.0f);
  const DepthMap out = rescale_stylized_depth(stylized, rendered, ValidityMask(3, 1, 1));
  CHECK(out(0, 0) == 3.0f);
  CHECK(out(2, 0) == 0.0f);
}
