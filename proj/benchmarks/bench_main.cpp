// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <benchmark/benchmark.h>

#include "viewstyle/attention.hpp"
#include "viewstyle/composite.hpp"
#include "viewstyle/pipeline.hpp"
#include "viewstyle/stylizer.hpp"
#include "viewstyle/synthetic.hpp"
#include "viewstyle/warp.hpp"

namespace {

using namespace viewstyle;

// Two neighboring views of the synthetic orbit at the given resolution.
std::vector<RgbdFrame> orbit_pair(int size) {
  OrbitOptions o;
  o.frames = 2;
  o.width = size;
  o.height = size;
  o.arc_degrees = 6.0;
  return render_trajectory(orbit_trajectory(o));
}

void BM_WarpFrame(benchmark::State& state) {
  const auto frames = orbit_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(warp_frame(frames[0], frames[1].camera()));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_WarpFrame)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_BuildHeatmap(benchmark::State& state) {
  const auto frames = orbit_pair(512);
  const WarpResult warp = warp_frame(frames[0], frames[1].camera());
  const int tokens = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_heatmap(warp.flow, HeatmapParams{}, {tokens, tokens}, {tokens, tokens}));
  }
}
BENCHMARK(BM_BuildHeatmap)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_BiasedAttention(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random = [&](Eigen::Index r, Eigen::Index c) {
    return Eigen::MatrixXd(Eigen::MatrixXd::NullaryExpr(r, c, [&] { return u(rng); }));
  };
  const Eigen::MatrixXd q = random(n, 64), k = random(n, 64), v = random(n, 64);
  const Eigen::MatrixXd rk = random(n, 64), rv = random(n, 64);
  const Eigen::MatrixXd L = (random(n, n).array().abs() * 0.5 + 0.5).matrix();
  const AttentionReference refs[] = {{rk, rv, L}, {rk, rv, L}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(biased_attention(q, k, v, refs, 0.5));
  }
}
BENCHMARK(BM_BiasedAttention)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_BuildComposite(benchmark::State& state) {
  const auto frames = orbit_pair(512);
  RgbdFrame target = frames[1];
  target.index = 1;
  const WarpResult warp = warp_frame(frames[0], target.camera());
  const CompositeReference ref{&warp, look_at_vector(frames[0].pose), 0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_composite(std::span(&ref, 1), target));
  }
}
BENCHMARK(BM_BuildComposite)->Unit(benchmark::kMillisecond);

void BM_StylizeFrame(benchmark::State& state) {
  const auto frames = orbit_pair(static_cast<int>(state.range(0)));
  MockStylizer mock;
  for (auto _ : state) {
    benchmark::DoNotOptimize(stylize_frame(frames[0], mock, StyleStrength{}, 50, 0));
  }
}
BENCHMARK(BM_StylizeFrame)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_PipelinePair(benchmark::State& state) {
  const auto frames = orbit_pair(static_cast<int>(state.range(0)));
  PipelineConfig config;
  config.width = config.height = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_pipeline(frames, config));
  }
}
BENCHMARK(BM_PipelinePair)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
