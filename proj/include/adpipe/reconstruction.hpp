#pragma once

#include <cstdint>
#include <vector>

#include "adpipe/geometry.hpp"
#include "adpipe/imaging.hpp"
#include "adpipe/raster.hpp"

namespace adpipe {

/// Back-projected samples with the pixel each one came from.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<Pixel> pixels;

  std::size_t size() const { return points.size(); }
};

/// Back-project every stride-th masked pixel with positive relative depth.
PointCloud depth_to_cloud(const DepthMap& d, const CameraIntrinsics& k, const BinaryMask& m,
                          int stride = 1);

struct PlaneFit {
  PlaneEq plane;
  std::vector<int> inliers;  // indices into the source cloud
  double inlier_ratio = 0.0;
  double tolerance = 0.0;
};

/// Robust dominant-plane estimate: best of `iterations` three-point
/// hypotheses by inlier count (ties by smaller RMS residual), followed by a
/// least-squares refit on the winning consensus set. Deterministic for a
/// fixed seed. The normal is oriented lexicographically positive.
PlaneFit ransac_plane(const PointCloud& c, double tolerance, int iterations,
                      std::uint64_t rng_seed);

/// Plane-anchored 2D frame plus the convex hull of projected inliers.
struct PlaneHull {
  Point3 origin;
  Vec3 basis_u;
  Vec3 basis_v;
  std::vector<Vec2> hull2d;  // convex, counter-clockwise

  Vec2 to_plane(const Point3& p) const {
    const Vec3 rel = p - origin;
    return {rel.dot(basis_u), rel.dot(basis_v)};
  }
  Point3 to_world(const Vec2& q) const { return origin + basis_u * q.x + basis_v * q.y; }
};

PlaneHull hull_on_plane(const PlaneFit& fit, const PointCloud& c);

/// Cluster segments by orientation (10 degree merge radius, up to the three
/// heaviest clusters by total length) and intersect each cluster's lines in
/// the least-squares sense. Returns one point per surviving cluster, ordered
/// by descending cluster weight.
std::vector<Pixel> vanishing_points(const std::vector<LineSegment2>& segments);

/// f = sqrt(-(v1-p).(v2-p)) for two vanishing points of orthogonal world
/// directions; with three or more, the median of the valid pairwise
/// estimates.
double estimate_focal(const std::vector<Pixel>& vps, const Pixel& principal);

}  // namespace adpipe
