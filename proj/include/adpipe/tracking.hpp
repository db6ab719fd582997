#pragma once

#include <array>
#include <optional>
#include <vector>

#include "adpipe/geometry.hpp"
#include "adpipe/raster.hpp"

namespace adpipe {

/// Trackable point: position plus an 11x11 zero-mean, unit-norm gray patch
/// used for correlation matching. `group` is the corner (0..3) it serves.
struct Feature {
  Pixel position;
  std::array<double, 121> descriptor{};
  bool flat = false;  // patch had no texture; descriptor left zero
  int group = 0;
};

/// One quadrilateral corner with its constant-velocity Kalman filter
/// (state x, y, vx, vy; row-major 4x4 covariance).
struct CornerState {
  Pixel position;
  std::array<double, 4> kstate{};
  std::array<double, 16> kcov{};
  bool visible = true;
};

enum class TrackMode { Tracking, Suspended, Lost };
enum class TrackEvent { None, Suspended, Reacquired, Lost };

struct TrackingConfig {
  double alpha = 0.8;          // per-corner velocity blend weight
  double radius = 50.0;        // feature-disk radius around each corner, px
  int max_features = 25;       // per group
  int min_features = 3;        // required per group at init
  int redetect_below = 6;      // refill threshold during tracking
  double shot_threshold = 0.55;
  int max_suspended = 90;      // frames before a suspension becomes LOST
  double zncc_threshold = 0.85;
  int min_matches = 8;
  int min_groups = 3;
  double inlier_px = 3.0;
  int reacquire_features = 1200;  // whole-frame detection budget
  double process_pos_var = 1.0;   // Kalman process noise, px^2
  double process_vel_var = 4.0;
  double measurement_var = 4.0;  // position/velocity observation noise
};

struct TrackState {
  std::array<CornerState, 4> corners;
  std::array<std::vector<Feature>, 4> groups;
  TrackMode mode = TrackMode::Tracking;
  std::vector<Feature> saved_features;   // appearance snapshot at suspend
  std::array<Pixel, 4> saved_corners{};  // corner positions at suspend
  int frames_since_suspend = 0;
};

/// Strongest min-eigenvalue corners, deterministically ordered, greedily
/// spaced at least `min_dist` apart. Positions are pixel centres.
std::vector<Pixel> shi_tomasi(const RasterImage& gray, int max_count,
                              double quality = 0.01, double min_dist = 5.0);

/// Sample an 11x11 patch (clamped bilinear) and normalize it.
Feature make_feature(const RasterImage& gray, const Pixel& position, int group);

/// Normalized cross-correlation of two descriptors in [-1, 1]; 0 if either
/// patch is flat.
double zncc(const Feature& a, const Feature& b);

/// Seed the tracker: up to max_features strongest corners inside a
/// radius-`cfg.radius` disk around each quadrilateral corner.
TrackState init_track(const RasterImage& gray, const std::array<Pixel, 4>& corners,
                      const TrackingConfig& cfg = {});

/// Pyramidal Lucas-Kanade (3 levels, 21x21 window, 30 iterations or 0.01 px).
/// Per-point status is false on divergence, out-of-frame, or flat windows.
void lk_flow(const RasterImage& prev, const RasterImage& next,
             const std::vector<Pixel>& pts, std::vector<Pixel>* moved,
             std::vector<bool>* status);

/// v_corner_i = alpha * v_i + (1 - alpha) * mean(v_1..v_4).
std::array<Vec2, 4> corner_velocity(const std::array<Vec2, 4>& group_velocities,
                                    double alpha);

/// Constant-velocity predict (one frame), then an optional position update
/// and an optional velocity update.
CornerState kalman_step(const CornerState& c, const std::optional<Pixel>& measurement,
                        const std::optional<Vec2>& velocity_obs,
                        const TrackingConfig& cfg = {});

/// True iff the L1 distance between the frames' 8x8x8 normalized color
/// histograms exceeds the threshold.
bool detect_shot_change(const RasterImage& prev, const RasterImage& next,
                        double threshold = 0.55);

/// Match a saved feature snapshot against fresh detections (mutual-best
/// correlation), fit a homography, and map the saved corners through it.
std::optional<std::array<Pixel, 4>> reacquire(const std::vector<Feature>& saved,
                                              const std::array<Pixel, 4>& saved_corners,
                                              const RasterImage& frame_gray,
                                              const TrackingConfig& cfg = {});

/// Advance the tracker from `prev` to `next` (RGB frames). Handles shot
/// changes, suspension, re-acquisition, flow-based corner updates, Kalman
/// recovery of off-frame corners, and feature refill.
TrackEvent track_step(TrackState& state, const RasterImage& prev,
                      const RasterImage& next, const TrackingConfig& cfg = {});

}  // namespace adpipe
