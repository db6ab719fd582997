#include "adpipe/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "adpipe/error.hpp"
#include "adpipe/imaging.hpp"
#include "adpipe/io.hpp"
#include "adpipe/mask_analysis.hpp"
#include "adpipe/tracking.hpp"

namespace adpipe {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

const char* mode_name(TrackMode m) {
  switch (m) {
    case TrackMode::Tracking: return "tracking";
    case TrackMode::Suspended: return "suspended";
    case TrackMode::Lost: return "lost";
  }
  return "?";
}

const char* event_name(TrackEvent e) {
  switch (e) {
    case TrackEvent::None: return "none";
    case TrackEvent::Suspended: return "suspended";
    case TrackEvent::Reacquired: return "reacquired";
    case TrackEvent::Lost: return "lost";
  }
  return "?";
}

/// Run one stage: time it, and on failure append an error record and rethrow
/// with the stage name prefixed so callers see which stage broke.
template <typename F>
auto run_stage(Diagnostics& diag, const char* name, F&& fn) -> decltype(fn()) {
  const auto start = Clock::now();
  try {
    auto result = fn();
    diag.time(name, ms_since(start));
    return result;
  } catch (const Error& e) {
    diag.time(name, ms_since(start));
    diag.add("error")
        .add("stage", name)
        .add("kind", to_string(e.kind()))
        .add("message", e.message());
    throw Error(e.kind(), std::string(name) + ": " + e.message());
  }
}

std::vector<Pixel> asset_rect_corners(double w, double h) {
  return {{0.0, 0.0}, {w, 0.0}, {w, h}, {0.0, h}};
}

}  // namespace

void echo_config(const PipelineConfig& cfg, Diagnostics& diag) {
  DiagRecord& r = diag.add("config");
  r.add("frames_dir", cfg.frames_dir);
  r.add("masks_dir", cfg.masks_dir);
  r.add("depths_dir", cfg.depths_dir);
  r.add("asset", cfg.asset);
  r.add("output_dir", cfg.output_dir);
  r.add("scale", cfg.scale);
  r.add("ransac_tolerance", cfg.ransac_tolerance);
  r.add("ransac_iterations", cfg.ransac_iterations);
  r.add("focal_mode", to_string(cfg.focal_mode));
  r.add("focal", cfg.focal);
  r.add("seed_stride", cfg.seed_stride);
  r.add("binary_mask", cfg.binary_mask ? "true" : "false");
  std::string labels;
  for (std::size_t i = 0; i < cfg.crowd_labels.size(); ++i) {
    if (i) labels += ",";
    labels += std::to_string(cfg.crowd_labels[i]);
  }
  r.add("crowd_labels", labels);
  r.add("margin", cfg.margin);
  r.add("alpha", cfg.alpha);
  r.add("radius", cfg.radius);
  r.add("max_suspended", cfg.max_suspended);
  r.add("shot_threshold", cfg.shot_threshold);
  r.add("rng_seed", cfg.rng_seed);
}

ImageResult run_image(const PipelineConfig& cfg, const RasterImage& frame,
                      const BinaryMask& mask, const DepthMap& depth,
                      const RasterImage& asset, Diagnostics& diag) {
  run_stage(diag, "inputs", [&] {
    validate_config(cfg);
    if (frame.channels != 3 || frame.width <= 0 || frame.height <= 0)
      fail(ErrorKind::InvalidInput, "frame must be a non-empty RGB raster");
    if (mask.width != frame.width || mask.height != frame.height)
      fail(ErrorKind::InvalidInput, "mask dimensions do not match the frame");
    if (depth.width != frame.width || depth.height != frame.height)
      fail(ErrorKind::InvalidInput, "depth dimensions do not match the frame");
    if (asset.channels != 3 || asset.width < 2 || asset.height < 2)
      fail(ErrorKind::InvalidInput, "asset must be an RGB raster at least 2x2");
    return 0;
  });

  ImageResult out;

  const BinaryMask component = run_stage(diag, "mask-analysis", [&] {
    const Labeling labeling = connected_components(mask);
    if (labeling.components.empty())
      fail(ErrorKind::EmptyMask, "mask has no foreground pixels");
    const ComponentInfo& top = labeling.components.front();
    BinaryMask comp = fill_holes(extract_component(labeling, top.label));
    diag.add("mask-analysis")
        .add("components", static_cast<long long>(labeling.components.size()))
        .add("largest_area", top.area)
        .add("filled_area", comp.area());
    return comp;
  });

  out.align = run_stage(diag, "alignment", [&] {
    AlignmentLine line = alignment_line(component);
    diag.add("alignment")
        .add("u0", line.segment.p0.u)
        .add("v0", line.segment.p0.v)
        .add("u1", line.segment.p1.u)
        .add("v1", line.segment.p1.v)
        .add("angle_deg", line.segment.angle_deg())
        .add("vertical", line.vertical ? "true" : "false");
    return line;
  });

  struct FocalOut {
    double f = 0.0;
    std::string method;
  };
  const FocalOut foc = run_stage(diag, "focal", [&] {
    FocalOut result;
    if (cfg.focal_mode == FocalMode::Fixed) {
      result = {cfg.focal, "fixed"};
    } else {
      const Pixel principal{frame.width / 2.0, frame.height / 2.0};
      try {
        const RasterImage gray = to_grayscale(frame);
        const BinaryMask edges = canny(gray);
        HoughParams hp;
        hp.seed = cfg.rng_seed;
        const std::vector<LineSegment2> segments = hough_segments(edges, hp);
        const std::vector<Pixel> vps = vanishing_points(segments);
        result = {estimate_focal(vps, principal), "estimate"};
      } catch (const Error&) {
        if (cfg.focal_mode == FocalMode::Estimate) throw;
        result = {1.2 * std::max(frame.width, frame.height), "heuristic"};
      }
    }
    diag.add("focal").add("f", result.f).add("method", result.method);
    return result;
  });
  out.focal = foc.f;
  out.focal_method = foc.method;
  out.camera = {foc.f, frame.width / 2.0, frame.height / 2.0, cfg.scale};

  PointCloud cloud;
  out.plane = run_stage(diag, "reconstruction", [&] {
    cloud = depth_to_cloud(depth, out.camera, component);
    PlaneFit fit =
        ransac_plane(cloud, cfg.ransac_tolerance, cfg.ransac_iterations, cfg.rng_seed);
    diag.add("reconstruction")
        .add("points", static_cast<long long>(cloud.size()))
        .add("inliers", static_cast<long long>(fit.inliers.size()))
        .add("inlier_ratio", fit.inlier_ratio)
        .add("nx", fit.plane.n.x)
        .add("ny", fit.plane.n.y)
        .add("nz", fit.plane.n.z)
        .add("d", fit.plane.d);
    return fit;
  });

  out.hull = run_stage(diag, "hull", [&] {
    PlaneHull hull = hull_on_plane(out.plane, cloud);
    diag.add("hull")
        .add("vertices", static_cast<long long>(hull.hull2d.size()))
        .add("area", polygon_area(hull.hull2d));
    return hull;
  });

  const Vec3 v_align = run_stage(diag, "alignment-plane", [&] {
    const PlaneEq align_plane = alignment_plane(out.align, out.camera);
    const Vec3 v = alignment_vector(align_plane, out.plane.plane);
    diag.add("alignment-plane").add("vx", v.x).add("vy", v.y).add("vz", v.z);
    return v;
  });

  out.placement = run_stage(diag, "placement", [&] {
    const double aspect = static_cast<double>(asset.width) / asset.height;
    Placement p = place_asset(out.plane, out.hull, v_align, aspect, cfg.margin);
    project_corners(p, out.camera);
    p.h = placement_homography(p, out.camera, asset.width, asset.height);
    DiagRecord& r = diag.add("placement");
    for (int i = 0; i < 4; ++i) {
      r.add("c" + std::to_string(i) + "u", p.corners2d[i].u);
      r.add("c" + std::to_string(i) + "v", p.corners2d[i].v);
    }
    return p;
  });

  // Which placement corner each asset raster corner maps to under the
  // orientation-resolving homography; tracking and per-frame warping reuse it.
  const std::vector<Pixel> rect = asset_rect_corners(asset.width, asset.height);
  for (int j = 0; j < 4; ++j) {
    const Pixel mapped = out.placement.h.apply(rect[j]);
    int best = -1;
    double best_dist = 1e18;
    for (int i = 0; i < 4; ++i) {
      const double du = mapped.u - out.placement.corners2d[i].u;
      const double dv = mapped.v - out.placement.corners2d[i].v;
      const double d = std::hypot(du, dv);
      if (d < best_dist) {
        best_dist = d;
        best = i;
      }
    }
    if (best < 0 || best_dist > 1e-3)
      fail(ErrorKind::InconsistentGeometry, "placement: corner correspondence broke down");
    out.corner_order[j] = best;
  }

  out.augmented = run_stage(diag, "compositing", [&] {
    RasterImage composed = warp_composite(asset, out.placement.h, frame);
    diag.add("compositing").add("asset_w", asset.width).add("asset_h", asset.height);
    return composed;
  });

  return out;
}

namespace {

/// Per-frame outcome gathered by the tracking passes; turned into frame
/// records and compositing work at the end of the run.
struct FrameNote {
  bool augmented = false;
  std::array<Pixel, 4> corners{};  // asset-corner order (0,0),(w,0),(w,h),(0,h)
  std::string mode = "uncovered";
  std::string event = "none";
};

std::array<Pixel, 4> ordered_corners(const std::array<Pixel, 4>& placement_corners,
                                     const std::array<int, 4>& order) {
  std::array<Pixel, 4> out{};
  for (int j = 0; j < 4; ++j) out[j] = placement_corners[order[j]];
  return out;
}

std::array<Pixel, 4> tracked_positions(const TrackState& state,
                                       const std::array<int, 4>& order) {
  std::array<Pixel, 4> raw{};
  for (int i = 0; i < 4; ++i) raw[i] = state.corners[i].position;
  return ordered_corners(raw, order);
}

}  // namespace

void run_video(const PipelineConfig& cfg, Diagnostics& diag) {
  echo_config(cfg, diag);

  run_stage(diag, "config", [&] {
    validate_config(cfg);
    return 0;
  });

  std::vector<std::string> frame_paths, mask_paths, depth_paths;
  std::vector<RasterImage> assets;
  run_stage(diag, "inputs", [&] {
    frame_paths = list_numbered(cfg.frames_dir, ".ppm");
    if (frame_paths.empty())
      fail(ErrorKind::InvalidInput, "no frames in '" + cfg.frames_dir + "'");
    mask_paths = list_numbered(cfg.masks_dir, ".pgm");
    depth_paths = list_numbered(cfg.depths_dir, ".dmap");
    if (cfg.asset.empty()) fail(ErrorKind::InvalidInput, "asset path not set");
    std::error_code ec;
    if (fs::is_directory(cfg.asset, ec)) {
      for (const std::string& p : list_numbered(cfg.asset, ".ppm"))
        assets.push_back(read_raster(p));
      if (assets.empty())
        fail(ErrorKind::InvalidInput, "no asset frames in '" + cfg.asset + "'");
    } else {
      assets.push_back(read_raster(cfg.asset));
    }
    for (const RasterImage& a : assets) {
      if (a.channels != 3 || a.width < 2 || a.height < 2)
        fail(ErrorKind::InvalidInput, "asset must be an RGB raster at least 2x2");
      if (!a.same_dims(assets.front()))
        fail(ErrorKind::InvalidInput, "asset frames must share dimensions");
    }
    if (cfg.output_dir.empty()) fail(ErrorKind::InvalidInput, "output_dir not set");
    fs::create_directories(cfg.output_dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create output dir '" + cfg.output_dir + "'");
    diag.add("inputs")
        .add("frames", static_cast<long long>(frame_paths.size()))
        .add("masks", static_cast<long long>(mask_paths.size()))
        .add("depths", static_cast<long long>(depth_paths.size()))
        .add("assets", static_cast<long long>(assets.size()));
    return 0;
  });

  const int n_frames = static_cast<int>(frame_paths.size());
  int width = 0, height = 0;

  auto read_frame = [&](int i) {
    RasterImage img = read_raster(frame_paths[i]);
    if (img.channels != 3)
      fail(ErrorKind::InvalidInput, "frame is not RGB: '" + frame_paths[i] + "'");
    if (width == 0) {
      width = img.width;
      height = img.height;
    } else if (img.width != width || img.height != height) {
      fail(ErrorKind::InvalidInput, "frame dimensions differ: '" + frame_paths[i] + "'");
    }
    return img;
  };
  auto read_mask_for = [&](int i) {
    if (i >= static_cast<int>(mask_paths.size()))
      fail(ErrorKind::InvalidInput, "mask missing for frame " + std::to_string(i));
    const RasterImage gray = read_raster(mask_paths[i]);
    if (gray.channels != 1)
      fail(ErrorKind::InvalidInput, "mask is not grayscale: '" + mask_paths[i] + "'");
    return mask_from_gray(gray, cfg.crowd_labels, cfg.binary_mask);
  };
  auto read_depth_for = [&](int i) {
    if (i >= static_cast<int>(depth_paths.size()))
      fail(ErrorKind::InvalidInput, "depth missing for frame " + std::to_string(i));
    return read_depth(depth_paths[i]);
  };

  const TrackingConfig tcfg = tracking_config(cfg);
  std::vector<FrameNote> notes(n_frames);
  int segment_start = 0;
  int search_from = 0;
  bool any_seed = false;
  std::optional<Error> last_seed_error;

  while (search_from < n_frames) {
    // Candidate masks on the sampling grid anchored at search_from.
    std::vector<IndexedMask> candidates;
    for (int i = search_from; i < n_frames; i += cfg.seed_stride)
      candidates.push_back({i, read_mask_for(i)});
    for (const IndexedMask& c : candidates) {
      DiagRecord& r = diag.add("candidate");
      r.add("index", c.frame_index).add("area", c.mask.area());
      if (c.mask.area() > 0) {
        const SqsReport rep = sqs(c.mask);
        r.add("sqs", rep.sqs).add("s_cp", rep.s_cp).add("s_cl", rep.s_cl).add("s_sp",
                                                                              rep.s_sp);
      }
    }
    SeedChoice choice;
    try {
      choice = select_seed_frame(candidates);
    } catch (const Error& e) {
      if (!any_seed) {
        diag.add("error")
            .add("stage", "seed-selection")
            .add("kind", to_string(ErrorKind::NoCandidate))
            .add("message", e.message());
        fail(ErrorKind::NoCandidate, std::string("seed-selection: ") + e.message());
      }
      diag.add("seed-exhausted").add("after", search_from);
      break;
    }
    const int seed = choice.frame_index;
    diag.add("seed").add("index", seed).add("sqs", choice.report.sqs);

    // Place the asset on the seed frame; on failure slide the grid past it.
    RasterImage seed_rgb;
    ImageResult img;
    TrackState forward;
    try {
      seed_rgb = read_frame(seed);
      img = run_image(cfg, seed_rgb, read_mask_for(seed), read_depth_for(seed),
                      assets[seed % assets.size()], diag);
      const RasterImage seed_gray = to_grayscale(seed_rgb);
      forward = init_track(seed_gray, img.placement.corners2d, tcfg);
    } catch (const Error& e) {
      diag.add("seed-failed")
          .add("index", seed)
          .add("kind", to_string(e.kind()))
          .add("message", e.message());
      last_seed_error = e;
      search_from = seed + 1;
      continue;
    }
    any_seed = true;
    notes[seed] = {true, ordered_corners(img.placement.corners2d, img.corner_order),
                   "seed", "none"};

    // Forward pass.
    int lost_at = -1;
    const auto fwd_start = Clock::now();
    RasterImage prev_rgb = seed_rgb;
    for (int k = seed + 1; k < n_frames; ++k) {
      RasterImage next_rgb = read_frame(k);
      const TrackEvent ev = track_step(forward, prev_rgb, next_rgb, tcfg);
      notes[k].event = event_name(ev);
      notes[k].mode = mode_name(forward.mode);
      if (forward.mode == TrackMode::Tracking) {
        notes[k].augmented = true;
        notes[k].corners = tracked_positions(forward, img.corner_order);
      }
      prev_rgb = std::move(next_rgb);
      if (forward.mode == TrackMode::Lost) {
        lost_at = k;
        break;
      }
    }
    diag.time("tracking-forward", ms_since(fwd_start));

    // Backward pass: a fresh tracker over the reversed prefix, so frames
    // before the seed are covered too.
    if (seed > segment_start) {
      const auto bwd_start = Clock::now();
      TrackState backward = init_track(to_grayscale(seed_rgb), img.placement.corners2d, tcfg);
      prev_rgb = seed_rgb;
      for (int k = seed - 1; k >= segment_start; --k) {
        RasterImage next_rgb = read_frame(k);
        const TrackEvent ev = track_step(backward, prev_rgb, next_rgb, tcfg);
        notes[k].event = event_name(ev);
        notes[k].mode = mode_name(backward.mode);
        if (backward.mode == TrackMode::Tracking) {
          notes[k].augmented = true;
          notes[k].corners = tracked_positions(backward, img.corner_order);
        }
        prev_rgb = std::move(next_rgb);
        if (backward.mode == TrackMode::Lost) break;
      }
      diag.time("tracking-backward", ms_since(bwd_start));
    }

    if (lost_at < 0) break;
    segment_start = lost_at;   // the next backward pass may still rescue it
    search_from = lost_at + 1;  // sampling resumes after the lost frame
  }

  if (!any_seed) {
    if (last_seed_error) throw *last_seed_error;
    fail(ErrorKind::NoCandidate, "seed-selection: no viable seed frame");
  }

  // Compositing + output pass, in frame order.
  const auto comp_start = Clock::now();
  const std::vector<Pixel> rect =
      asset_rect_corners(assets.front().width, assets.front().height);
  for (int k = 0; k < n_frames; ++k) {
    const RasterImage input = read_frame(k);
    RasterImage output;
    if (notes[k].augmented) {
      std::vector<Pixel> dst(notes[k].corners.begin(), notes[k].corners.end());
      try {
        const Homography h = homography_dlt(rect, dst);
        output = warp_composite(assets[k % assets.size()], h, input);
      } catch (const Error&) {
        notes[k].augmented = false;
        notes[k].event = "degenerate-homography";
        output = input;
      }
    } else {
      output = input;
    }
    char name[32];
    std::snprintf(name, sizeof name, "frame_%06d.ppm", k);
    write_raster(output, (fs::path(cfg.output_dir) / name).string());

    DiagRecord& r = diag.add("frame");
    r.add("index", k)
        .add("augmented", notes[k].augmented ? 1 : 0)
        .add("mode", notes[k].mode)
        .add("event", notes[k].event);
    if (notes[k].augmented) {
      for (int j = 0; j < 4; ++j) {
        r.add("c" + std::to_string(j) + "u", notes[k].corners[j].u);
        r.add("c" + std::to_string(j) + "v", notes[k].corners[j].v);
      }
    }
  }
  diag.time("compositing", ms_since(comp_start));
}

}  // namespace adpipe
