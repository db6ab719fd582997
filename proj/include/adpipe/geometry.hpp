#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "adpipe/error.hpp"

namespace adpipe {

// Coordinate conventions used throughout:
//  - Image coordinates (u, v) are continuous, origin top-left, u rightward,
//    v downward. Raster sample (i, j) sits at the continuous point
//    (i + 0.5, j + 0.5), so a WxH image spans [0, W] x [0, H].
//  - The world frame is anchored to the image plane: world x/y align with
//    image u/v and the camera center sits at (cx, cy, 0) looking down +z.
//    Back-projection and projection below are exact inverses in this frame.

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  Vec2 perp() const { return {-y, x}; }
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec3 normalized() const;
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

using Point3 = Vec3;

struct Pixel {
  double u = 0.0;
  double v = 0.0;

  bool finite() const { return std::isfinite(u) && std::isfinite(v); }
};

struct CameraIntrinsics {
  double f = 1.0;   // focal length, px
  double cx = 0.0;  // principal point, px
  double cy = 0.0;
  double s = 1.0;  // scale applied to relative depth values

  bool valid() const {
    return f > 0.0 && s > 0.0 && std::isfinite(f) && std::isfinite(cx) && std::isfinite(cy) &&
           std::isfinite(s);
  }
};

/// Plane n.p + d = 0 with |n| = 1.
struct PlaneEq {
  Vec3 n;
  double d = 0.0;

  double signed_distance(const Vec3& p) const { return n.dot(p) + d; }
  static PlaneEq from_normal_point(const Vec3& normal, const Vec3& point);
};

/// 3x3 projective map, row-major. Normalized form fixes m[8] = 1 when that
/// entry is significant relative to the Frobenius norm, otherwise scales to
/// unit Frobenius norm.
struct Homography {
  std::array<double, 9> m = {1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return {}; }

  Pixel apply(const Pixel& p) const;
  Homography inverse() const;
  Homography normalized() const;
  double det() const;
};

Point3 back_project(const Pixel& p, double relative_depth, const CameraIntrinsics& k);

Pixel project(const Point3& p, const CameraIntrinsics& k);

/// Unit direction of the intersection line of two planes. Sign fixed by
/// lexicographic positivity (x, then y, then z).
Vec3 plane_intersection_direction(const PlaneEq& a, const PlaneEq& b);

/// Normalized DLT homography from >=4 correspondences src[i] -> dst[i].
Homography homography_dlt(const std::vector<Pixel>& src, const std::vector<Pixel>& dst);

/// True iff p lies inside or on the boundary of a convex CCW polygon.
bool point_in_convex_polygon(const Vec2& p, const std::vector<Vec2>& hull);

/// Convex hull (monotone chain), counter-clockwise, starting at the
/// lexicographically smallest vertex; collinear interior points dropped.
/// Degenerate inputs yield the distinct point(s) that remain.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

/// Sum of edge lengths of a closed polygon (returns 0 for <2 vertices).
double polygon_perimeter(const std::vector<Vec2>& poly);

/// Signed area of a simple polygon (positive when counter-clockwise).
double polygon_area(const std::vector<Vec2>& poly);

}  // namespace adpipe
