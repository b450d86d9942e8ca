// Copyright 2026 The viewstyle Authors
// SPDX-License-Identifier: Apache-2.0

// viewstyle command-line front end.
//
// Frame directories hold <name>.png + <name>.dpf per trajectory view. Every
// subcommand writes its artifacts under --out (default: current directory)
// and prints a one-line JSON summary to stdout.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "viewstyle/composite.hpp"
#include "viewstyle/datagen.hpp"
#include "viewstyle/error.hpp"
#include "viewstyle/geometry.hpp"
#include "viewstyle/io.hpp"
#include "viewstyle/losses.hpp"
#include "viewstyle/metrics.hpp"
#include "viewstyle/parallel.hpp"
#include "viewstyle/pipeline.hpp"
#include "viewstyle/synthetic.hpp"
#include "viewstyle/warp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace viewstyle;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  unsigned threads = 0;
  std::optional<double> strength_rgb;
  std::optional<double> strength_depth;
};

struct SceneFlags {
  std::string trajectory;
  std::string inputs;
};

// Raised for command-line mistakes detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

unsigned resolve_threads(unsigned flag) {
  if (const char* env = std::getenv("VIEWSTYLE_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long value = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0') throw UsageError("VIEWSTYLE_THREADS must be a non-negative integer");
    return static_cast<unsigned>(value);
  }
  return flag;
}

PipelineConfig load_config(const GlobalFlags& flags) {
  PipelineConfig config;
  if (!flags.config.empty()) config = config_from_json(read_json(flags.config));
  if (flags.seed) config.seed = *flags.seed;
  if (flags.strength_rgb) config.strengths.t_rgb_max = *flags.strength_rgb;
  if (flags.strength_depth) config.strengths.t_depth_max = *flags.strength_depth;
  // Keep the noise level below a lowered strength instead of rejecting it.
  if (config.strengths.t_rgb_max > 0.0 && config.strengths.t_depth_max > 0.0) {
    config.strengths.t_noise = std::min(config.strengths.t_noise, config.strengths.lower());
  }
  return config;
}

Trajectory load_trajectory(const std::string& path) {
  if (path.empty()) throw UsageError("--trajectory is required");
  return read_trajectory(path);
}

RgbdFrame load_frame(const fs::path& dir, const Trajectory& trajectory, int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= trajectory.size()) {
    throw Error(ErrorCode::kInvalidArgument, "frame index " + std::to_string(index) + " outside the trajectory");
  }
  return read_frame(dir, trajectory.frames[static_cast<std::size_t>(index)], index);
}

std::vector<RgbdFrame> load_frames(const fs::path& dir, const Trajectory& trajectory) {
  std::vector<RgbdFrame> frames;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    frames.push_back(read_frame(dir, trajectory.frames[i], static_cast<int>(i)));
  }
  return frames;
}

void write_mask(const fs::path& path, const ValidityMask& mask) {
  ColorImage image(mask.width(), mask.height(), Rgb::Zero());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0) image[i] = Rgb::Ones();
  }
  write_png(path, image);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void emit(const GlobalFlags& flags, const std::string& name, const json& document) {
  fs::create_directories(flags.out);
  write_json(fs::path(flags.out) / (name + ".json"), document);
  json summary = document;
  if (summary.is_object()) {
    // Large arrays go to the file only.
    for (const char* key : {"values", "frames", "pairs", "views"}) summary.erase(key);
  }
  std::cout << summary.dump() << "\n";
}

// --- subcommands ----------------------------------------------------------

void run_synth(const GlobalFlags& flags, const OrbitOptions& orbit) {
  const Trajectory trajectory = orbit_trajectory(orbit);
  const std::vector<RgbdFrame> frames = render_trajectory(trajectory);
  fs::create_directories(flags.out);
  write_trajectory(fs::path(flags.out) / "trajectory.json", trajectory);
  for (std::size_t i = 0; i < frames.size(); ++i) write_frame(flags.out, trajectory.frames[i].name, frames[i]);
  std::cout << json{{"frames", frames.size()}, {"width", orbit.width}, {"height", orbit.height}}.dump() << "\n";
}

void run_warp(const GlobalFlags& flags, const SceneFlags& scene, int from, int to) {
  const PipelineConfig config = load_config(flags);
  const Trajectory trajectory = load_trajectory(scene.trajectory);
  const RgbdFrame reference = load_frame(scene.inputs, trajectory, from);
  const Camera target = trajectory.frames.at(static_cast<std::size_t>(to)).camera;
  const WarpResult warp = warp_frame(reference, target, config.warp);

  fs::create_directories(flags.out);
  RgbdFrame out;
  out.rgb = warp.rgb;
  out.depth = warp.depth;
  out.intrinsics = target.intrinsics;
  out.pose = target.pose;
  write_frame(flags.out, "warp", out);
  write_mask(fs::path(flags.out) / "warp_validity.png", warp.validity);
  std::size_t occluded = 0;
  for (std::size_t i = 0; i < warp.flow.occluded.size(); ++i) occluded += warp.flow.occluded[i];
  emit(flags, "warp", {{"from", from},
                       {"to", to},
                       {"valid_pixels", count_true(warp.validity)},
                       {"occluded_reference_pixels", occluded}});
}

void run_composite(const GlobalFlags& flags, const SceneFlags& scene, const std::string& references_dir, int target,
                   std::vector<int> refs) {
  const PipelineConfig config = load_config(flags);
  const Trajectory trajectory = load_trajectory(scene.trajectory);
  const RgbdFrame input = load_frame(scene.inputs, trajectory, target);
  if (refs.empty()) refs = config.references.references(target);
  if (refs.empty()) throw UsageError("no reference frames for target " + std::to_string(target));

  const fs::path ref_dir = references_dir.empty() ? fs::path(scene.inputs) : fs::path(references_dir);
  std::vector<WarpResult> warps;
  std::vector<Eigen::Vector3d> look_at;
  warps.reserve(refs.size());
  for (int r : refs) {
    const RgbdFrame ref = load_frame(ref_dir, trajectory, r);
    warps.push_back(warp_frame(ref, input.camera(), config.warp));
    look_at.push_back(look_at_vector(ref.pose));
  }
  std::vector<CompositeReference> composite_refs;
  for (std::size_t i = 0; i < refs.size(); ++i) composite_refs.push_back({&warps[i], look_at[i], refs[i]});
  const CompositeFrame composite = build_composite(composite_refs, input, config.composite);

  fs::create_directories(flags.out);
  RgbdFrame out = input;
  out.rgb = composite.rgb;
  out.depth = composite.depth;
  write_frame(flags.out, "composite", out);
  write_mask(fs::path(flags.out) / "composite_mask.png", composite.source_mask);
  json scales = json::array();
  for (double s : composite.depth_scales) scales.push_back(number_or_null(s));
  emit(flags, "composite", {{"target", target},
                            {"references", refs},
                            {"composite_pixels", count_true(composite.source_mask)},
                            {"depth_scales", scales}});
}

void run_heatmap(const GlobalFlags& flags, const SceneFlags& scene, int from, int to, int tokens) {
  const PipelineConfig config = load_config(flags);
  const Trajectory trajectory = load_trajectory(scene.trajectory);
  const RgbdFrame reference = load_frame(scene.inputs, trajectory, from);
  const Camera target = trajectory.frames.at(static_cast<std::size_t>(to)).camera;
  const WarpResult warp = warp_frame(reference, target, config.warp);
  const TokenGrid grid{tokens, tokens};
  const AttentionHeatmap heatmap = build_heatmap(warp.flow, config.heatmap_params(), grid, grid);
  const Eigen::MatrixXd& values = heatmap.dense->values;

  json rows = json::array();
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < values.cols(); ++j) row.push_back(values(i, j));
    rows.push_back(std::move(row));
  }
  emit(flags, "heatmap", {{"from", from},
                          {"to", to},
                          {"tokens", {tokens, tokens}},
                          {"correspondences", heatmap.correspondences.size()},
                          {"mean", values.mean()},
                          {"max", values.maxCoeff()},
                          {"values", rows}});
}

void run_pipeline_cmd(const GlobalFlags& flags, const SceneFlags& scene, bool independent) {
  PipelineConfig config = load_config(flags);
  if (!scene.trajectory.empty()) config.trajectory = scene.trajectory;
  if (!scene.inputs.empty()) config.inputs = scene.inputs;
  if (flags.out != "." || config.output.empty()) config.output = flags.out;
  if (independent) config.propagate = false;
  if (config.trajectory.empty() || config.inputs.empty()) {
    throw UsageError("pipeline needs a trajectory and an input directory (flags or config)");
  }
  if (!fs::exists(config.trajectory)) throw Error(ErrorCode::kIoError, "missing " + config.trajectory.string());
  if (!fs::is_directory(config.inputs)) throw Error(ErrorCode::kIoError, "missing " + config.inputs.string());

  const Trajectory trajectory = read_trajectory(config.trajectory);
  const std::vector<RgbdFrame> inputs = load_frames(config.inputs, trajectory);
  if (!inputs.empty()) {
    config.width = inputs.front().width();
    config.height = inputs.front().height();
  }
  fs::create_directories(config.output);
  write_json(config.output / "config.json", config_to_json(config));

  const PipelineResult result = run_pipeline(inputs, config, [&](const RgbdFrame& frame, const FrameReport& report) {
    write_frame(config.output, trajectory.frames[static_cast<std::size_t>(report.index)].name, frame);
  });
  json manifest = result.manifest();
  GlobalFlags out_flags = flags;
  out_flags.out = config.output.string();
  emit(out_flags, "manifest", manifest);
}

void run_datagen(const GlobalFlags& flags, const SceneFlags& scene, int views, double min_validity) {
  const PipelineConfig config = load_config(flags);
  const Trajectory trajectory = load_trajectory(scene.trajectory);
  const std::vector<RgbdFrame> inputs = load_frames(scene.inputs, trajectory);

  DatagenOptions options;
  options.views_per_input = views;
  options.min_validity = min_validity;
  options.seed = config.seed;
  options.strengths = config.strengths;
  options.grid_steps = config.grid_steps;
  options.stylizer = config.stylizer;
  options.warp = config.warp;
  options.band_px = config.composite.band_px;
  const DatagenResult result = synthesize_controlnet_pairs(inputs, options);

  fs::create_directories(flags.out);
  json pairs = json::array();
  for (const TrainingPair& pair : result.pairs) {
    const RgbdFrame& input = inputs[static_cast<std::size_t>(pair.input)];
    const std::string stem = trajectory.frames[static_cast<std::size_t>(pair.input)].name + "_v" +
                             std::to_string(pair.view);
    RgbdFrame out = input;
    out.rgb = pair.stylized;
    out.depth = pair.stylized_depth;
    write_frame(flags.out, stem + "_stylized", out);
    out.rgb = pair.composite;
    out.depth = pair.composite_depth;
    write_frame(flags.out, stem + "_composite", out);
    write_mask(fs::path(flags.out) / (stem + "_mask.png"), pair.mask);
    const Eigen::Matrix4d& m = pair.offset.matrix();
    std::vector<double> offset;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) offset.push_back(m(r, c));
    }
    pairs.push_back({{"input", pair.input},
                     {"view", pair.view},
                     {"stem", stem},
                     {"offset", offset},
                     {"mask_pixels", count_true(pair.mask)},
                     {"depth_scale", pair.depth_scale}});
  }
  json skipped = json::array();
  for (const SkippedPair& s : result.skipped) {
    std::cerr << "skipped input " << s.input << " view " << s.view << ": validity " << s.validity << "\n";
    skipped.push_back({{"input", s.input}, {"view", s.view}, {"validity", s.validity}});
  }
  emit(flags, "datagen", {{"emitted", result.pairs.size()},
                          {"skipped_count", result.skipped.size()},
                          {"seed", config.seed},
                          {"skipped", skipped},
                          {"pairs", pairs}});
}

void run_metrics(const GlobalFlags& flags, const SceneFlags& scene, const std::string& features) {
  const PipelineConfig config = load_config(flags);
  const Trajectory trajectory = load_trajectory(scene.trajectory);
  const std::vector<RgbdFrame> frames = load_frames(scene.inputs, trajectory);
  std::unique_ptr<FeatureExtractor> extractor;
  if (features == "gradient") {
    extractor = std::make_unique<GradientPatchExtractor>();
  } else {
    extractor = std::make_unique<IdentityExtractor>();
  }

  json pairs = json::array();
  double rmse_sum = 0.0;
  double feature_sum = 0.0;
  int counted = 0;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    double rmse = std::nan("");
    double feature = std::nan("");
    try {
      rmse = sequential_rmse(frames[k - 1], frames[k], config.warp);
      feature = sequential_feature_distance(frames[k - 1], frames[k], *extractor, config.warp);
      rmse_sum += rmse;
      feature_sum += feature;
      ++counted;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyValidity) throw;
    }
    pairs.push_back({{"from", k - 1}, {"to", k}, {"seq_rmse", number_or_null(rmse)},
                     {"feature_distance", number_or_null(feature)}});
  }
  const double nan = std::nan("");
  emit(flags, "metrics", {{"pairs_evaluated", counted},
                          {"mean_seq_rmse", number_or_null(counted > 0 ? rmse_sum / counted : nan)},
                          {"mean_feature_distance", number_or_null(counted > 0 ? feature_sum / counted : nan)},
                          {"features", features},
                          {"frames", pairs}});
}

void run_losses(const GlobalFlags& flags, const SceneFlags& scene, const std::string& reference_dir) {
  const Trajectory trajectory = load_trajectory(scene.trajectory);
  if (reference_dir.empty()) throw UsageError("--reference is required");
  const std::vector<RgbdFrame> predicted = load_frames(scene.inputs, trajectory);
  const std::vector<RgbdFrame> reference = load_frames(reference_dir, trajectory);
  const LossWeights weights;

  json frames = json::array();
  double total_sum = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const RgbdFrame& p = predicted[k];
    const RgbdFrame& r = reference[k];
    double photometric = 0.0;
    for (std::size_t i = 0; i < p.rgb.size(); ++i) photometric += (p.rgb[i] - r.rgb[i]).cwiseAbs().sum();
    photometric /= static_cast<double>(3 * p.rgb.size());

    ValidityMask mask(p.width(), p.height(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      mask[i] = (valid_depth(p.depth[i]) && valid_depth(r.depth[i])) ? 1 : 0;
    }
    const NormalMap n = normals_from_depth(p);
    const NormalMap n_ref = normals_from_depth(r);
    const double tvl1 = tvl1_normals(n);
    const double normal = normal_dot_loss(n, n_ref, mask);
    const double depth = scale_invariant_depth_loss(p.depth, r.depth, mask);
    const double total = total_loss(photometric, tvl1, normal, depth, weights);
    total_sum += total;
    frames.push_back({{"frame", k}, {"photometric", photometric}, {"tvl1", tvl1}, {"normal", normal},
                      {"depth", depth}, {"total", total}});
  }
  emit(flags, "losses", {{"frames_evaluated", predicted.size()},
                         {"mean_total", predicted.empty() ? 0.0 : total_sum / static_cast<double>(predicted.size())},
                         {"frames", frames}});
}

void run_eval_views(const GlobalFlags& flags, const SceneFlags& scene, std::size_t cap) {
  const Trajectory trajectory = load_trajectory(scene.trajectory);
  std::vector<Camera> cameras;
  for (const TrajectoryView& view : trajectory.frames) cameras.push_back(view.camera);
  const std::vector<Camera> views = select_eval_views(cameras, cap);

  Trajectory out;
  out.metadata = trajectory.metadata;
  out.metadata["role"] = "evaluation";
  char name[32];
  for (std::size_t i = 0; i < views.size(); ++i) {
    std::snprintf(name, sizeof name, "eval_%04zu", i);
    out.frames.push_back({name, views[i]});
  }
  fs::create_directories(flags.out);
  write_trajectory(fs::path(flags.out) / "eval_views.json", out);
  std::cout << json{{"views", views.size()}, {"source_frames", trajectory.size()}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view consistent RGBD stylization tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "viewstyle 0.1.0");

  GlobalFlags flags;
  app.add_option("--config", flags.config, "Pipeline configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "Random seed");
  app.add_option("--out", flags.out, "Output directory");
  app.add_option("--threads", flags.threads, "Worker threads (0 = hardware); VIEWSTYLE_THREADS overrides");
  app.add_option("--strength-rgb", flags.strength_rgb, "Color style strength in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--strength-depth", flags.strength_depth, "Depth style strength in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));

  SceneFlags scene;
  auto add_scene = [&scene](CLI::App* cmd, const char* inputs_help) {
    cmd->add_option("--trajectory", scene.trajectory, "Trajectory JSON")->check(CLI::ExistingFile);
    cmd->add_option("--inputs", scene.inputs, inputs_help)->check(CLI::ExistingDirectory);
    cmd->fallthrough();
  };

  OrbitOptions orbit;
  int orbit_size = 512;
  CLI::App* synth = app.add_subcommand("synth", "Render the synthetic orbit scene");
  synth->add_option("--frames", orbit.frames, "Number of views")->check(CLI::PositiveNumber);
  synth->add_option("--size", orbit_size, "Square resolution")->check(CLI::PositiveNumber);
  synth->fallthrough();

  int from = 0;
  int to = 1;
  CLI::App* warp = app.add_subcommand("warp", "Forward-warp one frame into another camera");
  add_scene(warp, "Frame directory");
  warp->add_option("--from", from, "Reference frame index");
  warp->add_option("--to", to, "Target frame index");

  int target = 1;
  std::vector<int> refs;
  std::string references_dir;
  CLI::App* composite = app.add_subcommand("composite", "Composite warped references over a target frame");
  add_scene(composite, "Directory of unstylized frames");
  composite->add_option("--target", target, "Target frame index");
  composite->add_option("--refs", refs, "Reference frame indices (default: reference policy)")->delimiter(',');
  composite->add_option("--references", references_dir, "Directory of stylized reference frames")
      ->check(CLI::ExistingDirectory);

  int tokens = 32;
  CLI::App* heatmap = app.add_subcommand("heatmap", "Dense attention heatmap between two frames");
  add_scene(heatmap, "Frame directory");
  heatmap->add_option("--from", from, "Reference frame index");
  heatmap->add_option("--to", to, "Target frame index");
  heatmap->add_option("--tokens", tokens, "Tokens per side")->check(CLI::Range(1, 64));

  bool independent = false;
  CLI::App* pipeline = app.add_subcommand("pipeline", "Stylize a trajectory autoregressively");
  add_scene(pipeline, "Directory of unstylized frames");
  pipeline->add_flag("--independent", independent, "Stylize every frame without references");

  int views = 6;
  double min_validity = 0.2;
  CLI::App* datagen = app.add_subcommand("datagen", "Synthesize composite-conditioning training pairs");
  add_scene(datagen, "Directory of input frames");
  datagen->add_option("--views", views, "Random cameras per input")->check(CLI::PositiveNumber);
  datagen->add_option("--min-validity", min_validity, "Skip pairs with less coverage")->check(CLI::Range(0.0, 1.0));

  std::string features = "identity";
  CLI::App* metrics = app.add_subcommand("metrics", "Sequential consistency of consecutive frames");
  add_scene(metrics, "Directory of frames to evaluate");
  metrics->add_option("--features", features, "identity or gradient")
      ->check(CLI::IsMember({"identity", "gradient"}));

  std::string loss_reference;
  CLI::App* losses = app.add_subcommand("losses", "Regularization losses of frames against references");
  add_scene(losses, "Directory of predicted frames");
  losses->add_option("--reference", loss_reference, "Directory of reference frames")->check(CLI::ExistingDirectory);

  std::size_t cap = 100;
  CLI::App* eval_views = app.add_subcommand("eval-views", "Interpolated evaluation cameras");
  add_scene(eval_views, "unused");
  eval_views->add_option("--cap", cap, "Maximum number of views")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    set_thread_count(resolve_threads(flags.threads));
    if (*synth) {
      orbit.width = orbit_size;
      orbit.height = orbit_size;
      run_synth(flags, orbit);
    } else if (*warp) {
      run_warp(flags, scene, from, to);
    } else if (*composite) {
      run_composite(flags, scene, references_dir, target, refs);
    } else if (*heatmap) {
      run_heatmap(flags, scene, from, to, tokens);
    } else if (*pipeline) {
      run_pipeline_cmd(flags, scene, independent);
    } else if (*datagen) {
      run_datagen(flags, scene, views, min_validity);
    } else if (*metrics) {
      run_metrics(flags, scene, features);
    } else if (*losses) {
      run_losses(flags, scene, loss_reference);
    } else if (*eval_views) {
      run_eval_views(flags, scene, cap);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
