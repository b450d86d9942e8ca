// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

#include "viewstyle/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "viewstyle/hash.hpp"
#include "viewstyle/metrics.hpp"

namespace viewstyle {

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

double nan_to_null_mean(const std::vector<FrameReport>& reports) {
  double sum = 0.0;
  int n = 0;
  for (const FrameReport& r : reports) {
    if (std::isfinite(r.seq_rmse)) {
      sum += r.seq_rmse;
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
}

nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

// Depth rescaling against the rendered (input) depth over pixels valid in both.
double rescale_against_input(DepthMap& stylized, const DepthMap& input) {
  ValidityMask mask(input.width(), input.height(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = valid_depth(input[i]) && valid_depth(stylized[i]) ? 1 : 0;
  if (count_true(mask) == 0) return 1.0;
  const double scale = median_scale(stylized, input, mask);
  stylized = rescale_stylized_depth(stylized, input, mask);
  return scale;
}

struct FrameOutput {
  RgbdFrame frame;
  double depth_scale = 1.0;
};

FrameOutput stylize(const RgbdFrame& input, const Latent& source, Denoiser& denoiser, const StyleStrength& strengths,
                    int grid_steps, std::uint64_t seed, Conditioning conditioning, LatentCache& cache) {
  const TimestepGrid grid = TimestepGrid::uniform(grid_steps);
  const NoiseSchedule schedule;
  conditioning.frame = input.index;
  conditioning.source = &source;
  conditioning.strengths = strengths;
  conditioning.cache = &cache;
  const InversionResult inverted = partial_invert(source, denoiser, strengths, grid, schedule, conditioning, seed);
  const Latent out = denoise(inverted.latent, denoiser, strengths, grid, schedule, conditioning, &cache);
  DecodedLatent decoded = decode_latent(out, input);
  FrameOutput result;
  result.frame = input;
  result.frame.rgb = std::move(decoded.rgb);
  result.frame.depth = std::move(decoded.depth);
  result.depth_scale = rescale_against_input(result.frame.depth, input.depth);
  return result;
}

}  // namespace

std::vector<int> ReferencePolicy::references(int k) const {
  std::vector<int> refs;
  if (k <= 0) return refs;
  if (first) refs.push_back(0);
  if (previous && (refs.empty() || refs.back() != k - 1)) refs.push_back(k - 1);
  return refs;
}

void PipelineConfig::validate() const {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "resolution must be positive");
  if (propagate && !references.first && !references.previous) {
    throw Error(ErrorCode::kInvalidArgument, "reference policy selects no frame");
  }
  if (tokens.width <= 0 || tokens.height <= 0 || tokens.count() > kMaxDenseTokens || tokens.width > width ||
      tokens.height > height) {
    throw Error(ErrorCode::kInvalidArgument, "bad attention token grid");
  }
  if (grid_steps < 1) throw Error(ErrorCode::kInvalidArgument, "need at least one timestep");
  strengths.validate();
  attention.validate();
  warp.mesh.validate();
  heatmap_params().validate();
}

HeatmapParams PipelineConfig::heatmap_params() const {
  return HeatmapParams{attention.d_max, attention.l_min, KernelCombine::kSum, true};
}

nlohmann::json config_to_json(const PipelineConfig& c) {
  return {
      {"trajectory", c.trajectory.string()},
      {"inputs", c.inputs.string()},
      {"output", c.output.string()},
      {"resolution", {c.width, c.height}},
      {"seed", c.seed},
      {"propagate", c.propagate},
      {"strengths", {{"rgb", c.strengths.t_rgb_max}, {"depth", c.strengths.t_depth_max}, {"noise", c.strengths.t_noise}}},
      {"attention",
       {{"lambda_self", c.attention.lambda_self},
        {"l_min", c.attention.l_min},
        {"d_max", c.attention.d_max},
        {"lambda_inject", c.attention.lambda_inject},
        {"temperature", c.attention.temperature},
        {"skip_first_layers", c.attention.inject_layers.skip_first},
        {"skip_last_layers", c.attention.inject_layers.skip_last}}},
      {"composite",
       {{"lambda1", c.composite.weights.lambda1},
        {"lambda2", c.composite.weights.lambda2},
        {"lambda3", c.composite.weights.lambda3},
        {"threshold", c.composite.threshold},
        {"band_px", c.composite.band_px}}},
      {"mesh",
       {{"clip_cos_threshold", c.warp.mesh.clip_cos_threshold},
        {"depth_jump_ratio", c.warp.mesh.depth_jump_ratio},
        {"clip_depth_jumps", c.warp.mesh.clip_depth_jumps}}},
      {"flow", {{"abs_eps", c.warp.flow.abs_eps}, {"rel_eps", c.warp.flow.rel_eps}}},
      {"references", {{"first", c.references.first}, {"previous", c.references.previous}}},
      {"tokens", {c.tokens.width, c.tokens.height}},
      {"steps", c.grid_steps},
      {"stylizer",
       {{"hue_degrees", c.stylizer.hue_degrees},
        {"jitter", c.stylizer.jitter},
        {"depth_amplitude", c.stylizer.depth_amplitude},
        {"attention_gain", c.stylizer.attention_gain},
        {"seed", c.stylizer.seed}}},
  };
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    std::string path;
    if (j.contains("trajectory")) c.trajectory = j.at("trajectory").get<std::string>();
    if (j.contains("inputs")) c.inputs = j.at("inputs").get<std::string>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("resolution")) {
      c.width = j.at("resolution").at(0).get<int>();
      c.height = j.at("resolution").at(1).get<int>();
    }
    read_field(j, "seed", c.seed);
    read_field(j, "propagate", c.propagate);
    if (j.contains("strengths")) {
      const auto& s = j.at("strengths");
      read_field(s, "rgb", c.strengths.t_rgb_max);
      read_field(s, "depth", c.strengths.t_depth_max);
      read_field(s, "noise", c.strengths.t_noise);
    }
    if (j.contains("attention")) {
      const auto& a = j.at("attention");
      read_field(a, "lambda_self", c.attention.lambda_self);
      read_field(a, "l_min", c.attention.l_min);
      read_field(a, "d_max", c.attention.d_max);
      read_field(a, "lambda_inject", c.attention.lambda_inject);
      read_field(a, "temperature", c.attention.temperature);
      read_field(a, "skip_first_layers", c.attention.inject_layers.skip_first);
      read_field(a, "skip_last_layers", c.attention.inject_layers.skip_last);
    }
    if (j.contains("composite")) {
      const auto& s = j.at("composite");
      read_field(s, "lambda1", c.composite.weights.lambda1);
      read_field(s, "lambda2", c.composite.weights.lambda2);
      read_field(s, "lambda3", c.composite.weights.lambda3);
      read_field(s, "threshold", c.composite.threshold);
      read_field(s, "band_px", c.composite.band_px);
    }
    if (j.contains("mesh")) {
      const auto& m = j.at("mesh");
      read_field(m, "clip_cos_threshold", c.warp.mesh.clip_cos_threshold);
      read_field(m, "depth_jump_ratio", c.warp.mesh.depth_jump_ratio);
      read_field(m, "clip_depth_jumps", c.warp.mesh.clip_depth_jumps);
    }
    if (j.contains("flow")) {
      read_field(j.at("flow"), "abs_eps", c.warp.flow.abs_eps);
      read_field(j.at("flow"), "rel_eps", c.warp.flow.rel_eps);
    }
    if (j.contains("references")) {
      read_field(j.at("references"), "first", c.references.first);
      read_field(j.at("references"), "previous", c.references.previous);
    }
    if (j.contains("tokens")) {
      c.tokens.width = j.at("tokens").at(0).get<int>();
      c.tokens.height = j.at("tokens").at(1).get<int>();
    }
    read_field(j, "steps", c.grid_steps);
    if (j.contains("stylizer")) {
      const auto& s = j.at("stylizer");
      read_field(s, "hue_degrees", c.stylizer.hue_degrees);
      read_field(s, "jitter", c.stylizer.jitter);
      read_field(s, "depth_amplitude", c.stylizer.depth_amplitude);
      read_field(s, "attention_gain", c.stylizer.attention_gain);
      read_field(s, "seed", c.stylizer.seed);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed config: ") + e.what());
  }
  return c;
}

std::string config_hash(const PipelineConfig& config) {
  nlohmann::json j = config_to_json(config);
  j.erase("trajectory");
  j.erase("inputs");
  j.erase("output");
  return sha256_hex(j.dump());
}

nlohmann::json PipelineResult::manifest() const {
  nlohmann::json frames_json = nlohmann::json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const FrameReport& r = reports[i];
    frames_json.push_back({{"index", r.index},
                           {"references", r.references},
                           {"composite_pixels", r.composite_pixels},
                           {"depth_scale", number_or_null(r.depth_scale)},
                           {"seq_rmse", number_or_null(r.seq_rmse)},
                           {"hash", i < frames.size() ? frames_hash(std::span(&frames[i], 1)) : std::string()}});
  }
  return {{"seed", seed},
          {"config_hash", config_hash},
          {"output_hash", output_hash},
          {"mean_seq_rmse", number_or_null(mean_seq_rmse)},
          {"frames", frames_json}};
}

std::string frames_hash(std::span<const RgbdFrame> frames) {
  Sha256 h;
  for (const RgbdFrame& f : frames) {
    for (const Rgb& c : f.rgb.pixels()) h.update(c.data(), 3 * sizeof(float));
    h.update(f.depth.pixels().data(), f.depth.size() * sizeof(float));
  }
  return h.hex();
}

RgbdFrame stylize_frame(const RgbdFrame& input, Denoiser& denoiser, const StyleStrength& strengths, int grid_steps,
                        std::uint64_t seed) {
  LatentCache cache;
  const Latent source = encode_latent(input);
  return stylize(input, source, denoiser, strengths, grid_steps, seed, Conditioning{}, cache).frame;
}

PipelineResult run_pipeline(std::span<const RgbdFrame> inputs, const PipelineConfig& config, Denoiser& denoiser,
                            const FrameCallback& on_frame) {
  config.validate();
  if (inputs.empty()) throw Error(ErrorCode::kInvalidArgument, "pipeline needs at least one frame");

  PipelineResult result;
  result.seed = config.seed;
  result.config_hash = config_hash(config);
  LatentCache cache;
  std::vector<std::unique_ptr<Latent>> sources;

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const int index = static_cast<int>(k);
    try {
      RgbdFrame input = inputs[k];
      input.index = index;
      input.validate();
      if (input.width() != config.width || input.height() != config.height) {
        throw Error(ErrorCode::kDimensionMismatch, "frame resolution differs from the configured resolution");
      }
      sources.push_back(std::make_unique<Latent>(encode_latent(input)));

      FrameReport report;
      report.index = index;
      Conditioning conditioning;
      conditioning.attention = config.attention;
      conditioning.tokens = config.tokens;

      std::vector<WarpResult> warps;
      CompositeFrame composite;
      Latent composite_latent;
      if (config.propagate) report.references = config.references.references(index);
      if (!report.references.empty()) {
        warps.reserve(report.references.size());
        std::vector<CompositeReference> composite_refs;
        for (const int r : report.references) {
          const RgbdFrame& reference = result.frames[static_cast<std::size_t>(r)];
          warps.push_back(warp_frame(reference, input.camera(), config.warp));
          composite_refs.push_back(CompositeReference{&warps.back(), look_at_vector(reference.pose), r});
        }
        composite = build_composite(composite_refs, input, config.composite);
        composite_latent = encode_latent(composite.rgb, composite.depth);
        report.composite_pixels = count_true(composite.source_mask);
        conditioning.composite = &composite_latent;
        conditioning.composite_mask = &composite.source_mask;
        for (std::size_t i = 0; i < report.references.size(); ++i) {
          const int r = report.references[i];
          const AttentionHeatmap heatmap =
              build_heatmap(warps[i].flow, config.heatmap_params(), config.tokens, config.tokens);
          conditioning.references.push_back(
              ReferenceConditioning{r, sources[static_cast<std::size_t>(r)].get(), heatmap.dense->values});
        }
      }

      FrameOutput out = stylize(input, *sources.back(), denoiser, config.strengths, config.grid_steps, config.seed,
                                std::move(conditioning), cache);
      report.depth_scale = out.depth_scale;
      report.seq_rmse = std::numeric_limits<double>::quiet_NaN();
      if (index > 0) {
        try {
          report.seq_rmse = sequential_rmse(result.frames.back(), out.frame, config.warp);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kEmptyValidity) throw;
        }
      }
      // Only frames that a later frame can still reference keep their latents.
      for (int f = 0; f <= index; ++f) {
        const bool needed = (f == 0 && config.references.first) || (f == index && config.references.previous);
        if (!needed) cache.evict(f);
      }
      result.frames.push_back(std::move(out.frame));
      result.reports.push_back(std::move(report));
      if (on_frame) on_frame(result.frames.back(), result.reports.back());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kFrameFailed, "frame " + std::to_string(index) + ": " + e.what());
    }
  }
  result.output_hash = frames_hash(result.frames);
  result.mean_seq_rmse = nan_to_null_mean(result.reports);
  return result;
}

PipelineResult run_pipeline(std::span<const RgbdFrame> inputs, const PipelineConfig& config,
                            const FrameCallback& on_frame) {
  MockStylizer stylizer(config.stylizer);
  return run_pipeline(inputs, config, stylizer, on_frame);
}

}  // namespace viewstyle
