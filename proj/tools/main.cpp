#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adpipe/config.hpp"
#include "adpipe/diagnostics.hpp"
#include "adpipe/error.hpp"
#include "adpipe/io.hpp"
#include "adpipe/mask_analysis.hpp"
#include "adpipe/pipeline.hpp"
#include "adpipe/synth.hpp"

namespace {

using namespace adpipe;
namespace fs = std::filesystem;

// Exit codes: 0 success, 2 configuration error, 3 stage failure, 4 no
// viable seed candidate.
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;
constexpr int kExitNoCandidate = 4;

int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::NoCandidate ? kExitNoCandidate : kExitStage;
}

/// One --flag per configuration key, all funnelled through set_config_value
/// so the command line, environment, and config files share one parser.
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App& cmd) {
    static const std::pair<const char*, const char*> keys[] = {
        {"frames_dir", "Directory of input frames (numbered PPM sequence)"},
        {"masks_dir", "Directory of crowd masks (numbered PGM sequence)"},
        {"depths_dir", "Directory of depth maps (numbered DMAP sequence)"},
        {"asset", "Advertisement PPM file, or a directory of PPM frames"},
        {"output_dir", "Directory that receives augmented frames"},
        {"scale", "Depth-to-world multiplier (default 1000000)"},
        {"ransac_tolerance", "Plane inlier distance in world units (default 10000)"},
        {"ransac_iterations", "Plane hypothesis count (default 500)"},
        {"focal_mode", "fixed | estimate | auto (default auto)"},
        {"focal", "Focal length in pixels, required for focal_mode=fixed"},
        {"seed_stride", "Frames between seed candidates (default 25)"},
        {"binary_mask", "true: nonzero mask pixels are crowd (default true)"},
        {"crowd_labels", "Comma-separated label ids treated as crowd"},
        {"margin", "Placement boundary margin fraction (default 0.02)"},
        {"alpha", "Corner velocity blend weight (default 0.8)"},
        {"radius", "Corner feature-disk radius in pixels (default 50)"},
        {"max_suspended", "Frames to wait for reacquisition (default 90)"},
        {"shot_threshold", "Histogram distance that flags a cut (default 0.55)"},
        {"rng_seed", "Seed for all randomized stages (default 7)"},
    };
    for (const auto& [key, help] : keys) {
      std::string flag = "--";
      for (const char* p = key; *p; ++p) flag.push_back(*p == '_' ? '-' : *p);
      options.emplace_back(key, cmd.add_option(flag, values[key], help));
    }
  }

  void apply(PipelineConfig& cfg) const {
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) set_config_value(cfg, key, values.at(key));
  }
};

/// defaults < config file < environment < command-line flags.
PipelineConfig assemble_config(const std::string& config_path, const ConfigFlags& flags) {
  PipelineConfig cfg;
  if (!config_path.empty()) cfg = parse_config(config_path);
  apply_env_overrides(cfg);
  flags.apply(cfg);
  validate_config(cfg);
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
}

void emit_video_diagnostics(const PipelineConfig& cfg, const Diagnostics& diag) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec || cfg.output_dir.empty()) {
    std::cout << diag.serialize();
    return;
  }
  write_text((fs::path(cfg.output_dir) / "diagnostics.txt").string(), diag.serialize());
  write_text((fs::path(cfg.output_dir) / "timings.txt").string(),
             diag.serialize_timings());
}

struct ImageArgs {
  std::string frame, mask, depth, out, diagnostics;
};

int cmd_image(const PipelineConfig& cfg, const ImageArgs& args) {
  Diagnostics diag;
  echo_config(cfg, diag);
  const auto emit = [&] {
    if (args.diagnostics.empty())
      std::cout << diag.serialize();
    else
      write_text(args.diagnostics, diag.serialize());
  };
  try {
    const RasterImage frame = read_raster(args.frame);
    const RasterImage mask_gray = read_raster(args.mask);
    if (mask_gray.channels != 1)
      fail(ErrorKind::InvalidInput, "mask is not grayscale: '" + args.mask + "'");
    const BinaryMask mask = mask_from_gray(mask_gray, cfg.crowd_labels, cfg.binary_mask);
    const DepthMap depth = read_depth(args.depth);
    RasterImage asset;
    std::error_code ec;
    if (fs::is_directory(cfg.asset, ec)) {
      const std::vector<std::string> frames = list_numbered(cfg.asset, ".ppm");
      if (frames.empty())
        fail(ErrorKind::InvalidInput, "no asset frames in '" + cfg.asset + "'");
      asset = read_raster(frames.front());
    } else {
      asset = read_raster(cfg.asset);
    }
    const ImageResult result = run_image(cfg, frame, mask, depth, asset, diag);
    write_raster(result.augmented, args.out);
  } catch (const Error& e) {
    emit();
    std::cerr << "stage failure: " << e.what() << "\n";
    return exit_code_for(e);
  }
  emit();
  return 0;
}

int cmd_video(const PipelineConfig& cfg) {
  Diagnostics diag;
  try {
    run_video(cfg, diag);
  } catch (const Error& e) {
    emit_video_diagnostics(cfg, diag);
    std::cerr << "stage failure: " << e.what() << "\n";
    return exit_code_for(e);
  }
  emit_video_diagnostics(cfg, diag);
  return 0;
}

struct SynthArgs {
  std::string out;
  std::string scene = "stand";
  int frames = 1;
  std::uint64_t seed = 1;
  double pan_x = 0.0, pan_y = 0.0, pan_z = 0.0;
  double yaw = 0.0;
  std::vector<std::string> cuts;
  double depth_noise = 0.0;
  double mask_dropout = 0.0;
  double depth_scale = 1.0;
  double true_focal = 800.0;
};

int cmd_synth(const SynthArgs& args) {
  SceneSpec spec;
  if (args.scene == "stand") {
    spec = SceneSpec::stand(args.seed);
  } else if (args.scene == "fronto") {
    spec = SceneSpec::fronto(args.seed);
  } else if (args.scene == "wireframe") {
    spec = SceneSpec::wireframe(args.true_focal, args.seed);
  } else {
    std::cerr << "unknown scene '" << args.scene << "' (stand | fronto | wireframe)\n";
    return kExitConfig;
  }
  if (args.frames < 1) {
    std::cerr << "--frames must be at least 1\n";
    return kExitConfig;
  }
  spec.motion.translate_per_frame = {args.pan_x, args.pan_y, args.pan_z};
  spec.motion.yaw_deg_per_frame = args.yaw;
  spec.depth_noise = args.depth_noise;
  spec.mask_dropout = args.mask_dropout;
  spec.s = args.depth_scale;
  for (const std::string& cut : args.cuts) {
    const std::size_t colon = cut.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(cut);
      CutEvent ev;
      ev.frame = std::stoi(cut.substr(0, colon));
      ev.variant = std::stoi(cut.substr(colon + 1));
      spec.cuts.push_back(ev);
    } catch (const std::exception&) {
      std::cerr << "bad --cut '" << cut << "', expected FRAME:VARIANT\n";
      return kExitConfig;
    }
  }
  std::sort(spec.cuts.begin(), spec.cuts.end(),
            [](const CutEvent& a, const CutEvent& b) { return a.frame < b.frame; });

  try {
    const fs::path root(args.out);
    fs::create_directories(root / "frames");
    fs::create_directories(root / "masks");
    fs::create_directories(root / "depths");
    Diagnostics truth_log;
    for (int k = 0; k < args.frames; ++k) {
      const FrameBundle bundle = render_scene(spec, k);
      char name[32];
      std::snprintf(name, sizeof name, "frame_%06d.ppm", k);
      write_raster(bundle.frame, (root / "frames" / name).string());
      std::snprintf(name, sizeof name, "mask_%06d.pgm", k);
      write_raster(mask_to_gray(bundle.mask), (root / "masks" / name).string());
      std::snprintf(name, sizeof name, "depth_%06d.dmap", k);
      write_depth(bundle.depth, (root / "depths" / name).string());

      DiagRecord& r = truth_log.add("truth");
      r.add("index", k).add("variant", bundle.truth.variant);
      for (int j = 0; j < 4; ++j) {
        r.add("ref" + std::to_string(j) + "u", bundle.truth.ref_corners[j].u);
        r.add("ref" + std::to_string(j) + "v", bundle.truth.ref_corners[j].v);
      }
      for (int j = 0; j < 4; ++j) {
        r.add("quad" + std::to_string(j) + "u", bundle.truth.quad_corners[j].u);
        r.add("quad" + std::to_string(j) + "v", bundle.truth.quad_corners[j].v);
      }
      r.add("b0u", bundle.truth.boundary.p0.u).add("b0v", bundle.truth.boundary.p0.v);
      r.add("b1u", bundle.truth.boundary.p1.u).add("b1v", bundle.truth.boundary.p1.v);
    }
    write_text((root / "truth.txt").string(), truth_log.serialize());
  } catch (const Error& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

int cmd_score(const PipelineConfig& cfg, const std::string& single_mask) {
  const auto load = [&](const std::string& path) {
    const RasterImage gray = read_raster(path);
    if (gray.channels != 1)
      fail(ErrorKind::InvalidInput, "mask is not grayscale: '" + path + "'");
    return mask_from_gray(gray, cfg.crowd_labels, cfg.binary_mask);
  };
  const auto print_report = [](int index, const SqsReport& rep) {
    std::printf("mask index=%d area=%lld sqs=%.9f s_cp=%.9f s_cl=%.9f s_sp=%.9f\n", index,
                rep.a, rep.sqs, rep.s_cp, rep.s_cl, rep.s_sp);
  };
  try {
    if (!single_mask.empty()) {
      print_report(0, sqs(load(single_mask)));
      return 0;
    }
    const std::vector<std::string> paths = list_numbered(cfg.masks_dir, ".pgm");
    if (paths.empty())
      fail(ErrorKind::InvalidInput, "no masks in '" + cfg.masks_dir + "'");
    std::vector<IndexedMask> masks;
    for (std::size_t i = 0; i < paths.size(); ++i)
      masks.push_back({static_cast<int>(i), load(paths[i])});
    for (const IndexedMask& m : masks)
      if (m.mask.area() > 0) print_report(m.frame_index, sqs(m.mask));
    const SeedChoice choice = select_seed_frame(masks);
    std::printf("seed index=%d sqs=%.9f\n", choice.frame_index, choice.report.sqs);
  } catch (const Error& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markerless planar advertisement insertion for crowd footage"};
  app.require_subcommand(1);

  std::string config_path;

  CLI::App* image = app.add_subcommand("image", "Augment a single frame");
  ImageArgs image_args;
  ConfigFlags image_flags;
  image->add_option("--config", config_path, "Config file (key=value)");
  image->add_option("--frame", image_args.frame, "Input frame (PPM)")->required();
  image->add_option("--mask", image_args.mask, "Crowd mask (PGM)")->required();
  image->add_option("--depth", image_args.depth, "Depth map (DMAP)")->required();
  image->add_option("--out", image_args.out, "Augmented output frame (PPM)")->required();
  image->add_option("--diagnostics", image_args.diagnostics,
                    "Diagnostics file (default: stdout)");
  image_flags.attach(*image);

  CLI::App* video = app.add_subcommand("video", "Augment a frame sequence");
  ConfigFlags video_flags;
  video->add_option("--config", config_path, "Config file (key=value)");
  video_flags.attach(*video);

  CLI::App* synth = app.add_subcommand("synth", "Render a synthetic test scene");
  SynthArgs synth_args;
  synth->add_option("--out", synth_args.out, "Output dataset directory")->required();
  synth->add_option("--scene", synth_args.scene, "stand | fronto | wireframe");
  synth->add_option("--frames", synth_args.frames, "Number of frames (default 1)");
  synth->add_option("--seed", synth_args.seed, "Texture seed (default 1)");
  synth->add_option("--pan-x", synth_args.pan_x, "Scene x translation per frame");
  synth->add_option("--pan-y", synth_args.pan_y, "Scene y translation per frame");
  synth->add_option("--pan-z", synth_args.pan_z, "Scene z translation per frame");
  synth->add_option("--yaw", synth_args.yaw, "Scene yaw in degrees per frame");
  synth->add_option("--cut", synth_args.cuts, "Texture cut as FRAME:VARIANT (repeatable)");
  synth->add_option("--depth-noise", synth_args.depth_noise, "Uniform depth noise bound");
  synth->add_option("--mask-dropout", synth_args.mask_dropout, "Mask pixel dropout rate");
  synth->add_option("--depth-scale", synth_args.depth_scale,
                    "Depth files hold z divided by this (default 1)");
  synth->add_option("--true-focal", synth_args.true_focal,
                    "Wireframe scene focal length (default 800)");

  CLI::App* score = app.add_subcommand("score", "Report segmentation quality scores");
  std::string score_mask;
  ConfigFlags score_flags;
  score->add_option("--config", config_path, "Config file (key=value)");
  score->add_option("--mask", score_mask, "Score one mask instead of --masks-dir");
  score_flags.attach(*score);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*image) {
      const PipelineConfig cfg = assemble_config(config_path, image_flags);
      return cmd_image(cfg, image_args);
    }
    if (*video) {
      const PipelineConfig cfg = assemble_config(config_path, video_flags);
      return cmd_video(cfg);
    }
    if (*synth) return cmd_synth(synth_args);
    if (*score) {
      const PipelineConfig cfg = assemble_config(config_path, score_flags);
      if (score_mask.empty() == cfg.masks_dir.empty()) {
        std::cerr << "score: pass exactly one of --mask or --masks-dir\n";
        return kExitConfig;
      }
      return cmd_score(cfg, score_mask);
    }
  } catch (const Error& e) {
    // Errors out of config assembly are configuration errors by definition.
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
