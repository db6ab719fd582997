#pragma once

#include <array>

#include "adpipe/geometry.hpp"
#include "adpipe/imaging.hpp"
#include "adpipe/raster.hpp"
#include "adpipe/reconstruction.hpp"

namespace adpipe {

/// Edge extraction settings for the alignment-line search.
struct AlignmentParams {
  double canny_low = 50.0;
  double canny_high = 150.0;
  double canny_sigma = 1.4;
  HoughParams hough;
};

/// Longest straight border of the crowd region, as a segment plus the fitted
/// line v = a*u + b (or a vertical line u = segment.p0.u).
struct AlignmentLine {
  LineSegment2 segment;
  double a = 0.0;
  double b = 0.0;
  bool vertical = false;
};

/// Asset footprint on the crowd plane. Corner order is bottom-left,
/// bottom-right, top-right, top-left in the rectangle's own frame (the
/// bottom edge runs along the alignment direction); which pair ends up
/// image-up is resolved when the homography is built.
struct Placement {
  std::array<Point3, 4> corners3d{};
  std::array<Pixel, 4> corners2d{};
  Homography h;
  Vec3 v_align;
};

/// Canny + Hough on the (largest-component) crowd mask; returns the longest
/// detected segment with its line coefficients.
AlignmentLine alignment_line(const BinaryMask& largest_component,
                             const AlignmentParams& params = {});

/// Plane through the camera centre containing every 3D point that projects
/// onto the 2D line: normal = r1 x r2 for the back-projected ray directions
/// of two distinct line points.
PlaneEq alignment_plane(const AlignmentLine& line, const CameraIntrinsics& k);

/// Direction of the crowd-plane / alignment-plane intersection.
Vec3 alignment_vector(const PlaneEq& align, const PlaneEq& crowd);

/// Maximal-area rectangle with the given width/height ratio, edges aligned
/// to v_align, all corners inside the hull shrunk by `margin` (fraction of
/// the hull scale). Closed-form feasible scale per centre over a 21x21 grid,
/// refined once; ties broken by distance to the hull centroid.
Placement place_asset(const PlaneFit& crowd, const PlaneHull& hull,
                      const Vec3& v_align, double aspect, double margin = 0.02);

/// Fill corners2d = project(corners3d).
void project_corners(Placement& p, const CameraIntrinsics& k);

/// DLT homography from asset pixel corners (0,0),(w,0),(w,h),(0,h) to the
/// placement corners, oriented upright: the asset's top row maps to the
/// corner pair whose projection sits higher in the image (smaller v), and
/// its left column to the lower-u end of the bottom pair.
Homography placement_homography(const Placement& p, const CameraIntrinsics& k,
                                double asset_w, double asset_h);

}  // namespace adpipe
