#pragma once

#include <array>
#include <string>

#include "adpipe/config.hpp"
#include "adpipe/diagnostics.hpp"
#include "adpipe/placement.hpp"
#include "adpipe/raster.hpp"
#include "adpipe/reconstruction.hpp"

namespace adpipe {

/// Everything run_image produced, including intermediates that video
/// processing builds on.
struct ImageResult {
  RasterImage augmented;
  double focal = 0.0;
  std::string focal_method;  // fixed | estimate | heuristic
  CameraIntrinsics camera;
  PlaneFit plane;
  PlaneHull hull;
  AlignmentLine align;
  Placement placement;
  /// corner_order[j] is the placement-corner index that the asset raster
  /// corner j maps to, for asset corners (0,0), (w,0), (w,h), (0,h).
  std::array<int, 4> corner_order{};
};

/// Append a `config` record echoing every configuration key.
void echo_config(const PipelineConfig& cfg, Diagnostics& diag);

/// Single-frame run: crowd-region analysis, alignment line, focal length,
/// depth back-projection, robust plane fit, hull, asset placement, and warp
/// compositing. Appends one record per stage to `diag`; a failing stage
/// appends an error record and rethrows with the stage name prefixed to the
/// message, so partial diagnostics survive the failure.
ImageResult run_image(const PipelineConfig& cfg, const RasterImage& frame,
                      const BinaryMask& mask, const DepthMap& depth,
                      const RasterImage& asset, Diagnostics& diag);

/// Full video run driven by the configured directories: seed-frame selection
/// over sampled candidates, run_image on the seed, corner tracking forward
/// and (via a fresh tracker) backward from the seed, per-frame warping, and
/// augmented frames written to the output directory as frame_NNNNNN.ppm.
/// Suspended stretches emit unmodified frames; a lost track restarts seed
/// sampling after the lost frame. Appends the run diagnostics to `diag` with
/// one `frame` record per input frame, in index order; on failure the records
/// gathered so far remain in `diag` and a typed error escapes with the stage
/// name prefixed.
void run_video(const PipelineConfig& cfg, Diagnostics& diag);

}  // namespace adpipe
