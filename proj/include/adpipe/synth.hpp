#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "adpipe/geometry.hpp"
#include "adpipe/imaging.hpp"
#include "adpipe/raster.hpp"

namespace adpipe {

/// Scene motion, applied to the scene relative to a fixed camera: a yaw about
/// the vertical axis through the camera centre plus a translation, both per
/// frame. A positive x translation moves the scene right (camera pans left).
struct MotionScript {
  Vec3 translate_per_frame;
  double yaw_deg_per_frame = 0.0;
};

/// Palette/texture switch starting at `frame` (geometry continues smoothly).
struct CutEvent {
  int frame = 0;
  int variant = 1;  // 0 restores the base look
};

/// Fully specified synthetic stadium scene: a tilted textured stand quad
/// rising from a ground plane, observed by a pinhole camera with known
/// intrinsics. Every render is analytic, so masks, depths, and projected
/// ground truth are exact.
struct SceneSpec {
  enum class Kind { Stand, Wireframe };

  Kind kind = Kind::Stand;
  int width = 640;
  int height = 360;
  double f = 800.0;
  double cx = 320.0;
  double cy = 180.0;
  double s = 1.0;  // depth values are written as z / s
  std::uint64_t texture_seed = 1;

  // Stand geometry, camera-relative units. The stand's bottom edge sits on
  // the ground plane y = ground_y at depth stand_z; the face rises along a
  // direction raked back from vertical by rake_deg.
  double ground_y = 2.0;
  double stand_z = 20.0;
  double stand_half_width = 6.0;
  double stand_height = 7.0;
  double rake_deg = 30.0;

  // Wireframe geometry for focal-length estimation tests: a scaffold of
  // horizontal rails (yawed by wire_yaw_deg) and world-vertical posts, seen
  // by a camera pitched down by wire_pitch_deg. The two vanishing points
  // land far outside the frame in nearly orthogonal image directions, so
  // orientation clustering separates the families cleanly.
  double wire_yaw_deg = 25.0;
  double wire_pitch_deg = 14.0;

  MotionScript motion;
  std::vector<CutEvent> cuts;  // ascending frame order

  // Robustness knobs (default off).
  double depth_noise = 0.0;   // uniform +- depth_noise added to depth values
  double mask_dropout = 0.0;  // probability of dropping a mask pixel

  static SceneSpec stand(std::uint64_t seed = 1);
  /// Vertical (rake 0) stand: the crowd plane is fronto-parallel, so a pure
  /// x/y scene translation induces a pure image translation of the plane.
  static SceneSpec fronto(std::uint64_t seed = 1);
  static SceneSpec wireframe(double true_f, std::uint64_t seed = 1);
};

/// Exact per-frame ground truth. Quad corners are ordered bottom-left,
/// bottom-right, top-right, top-left; the reference rectangle is an inset
/// of the quad used as a tracking target.
struct SceneTruth {
  CameraIntrinsics camera;
  PlaneEq crowd_plane;  // world coordinates of this frame
  std::array<Point3, 4> quad_corners3d{};
  std::array<Pixel, 4> quad_corners{};
  std::array<Point3, 4> ref_corners3d{};
  std::array<Pixel, 4> ref_corners{};
  LineSegment2 boundary{};  // projection of the stand's bottom edge
  int variant = 0;
};

struct FrameBundle {
  RasterImage frame;  // RGB
  BinaryMask mask;
  DepthMap depth;
  SceneTruth truth;
};

FrameBundle render_scene(const SceneSpec& spec, int frame_index);

struct SequenceBundle {
  std::vector<FrameBundle> frames;
  /// Exact crowd-plane homography mapping frame k pixels to frame k+1 pixels.
  std::vector<Homography> step_homographies;
  /// Reference-rectangle corner projections per frame.
  std::vector<std::array<Pixel, 4>> corner_tracks;
};

SequenceBundle render_sequence(const SceneSpec& spec, int n_frames);

}  // namespace adpipe
