#include "adpipe/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace adpipe {

namespace {

constexpr double kParallelTol = 1e-9;

Eigen::Matrix3d to_eigen(const Homography& h) {
  Eigen::Matrix3d m;
  m << h.m[0], h.m[1], h.m[2], h.m[3], h.m[4], h.m[5], h.m[6], h.m[7], h.m[8];
  return m;
}

Homography from_eigen(const Eigen::Matrix3d& m) {
  Homography h;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h.m[r * 3 + c] = m(r, c);
  return h;
}

// Hartley normalization: centroid to origin, mean distance sqrt(2).
Eigen::Matrix3d conditioning_transform(const std::vector<Pixel>& pts) {
  double mu = 0.0, mv = 0.0;
  for (const Pixel& p : pts) {
    mu += p.u;
    mv += p.v;
  }
  mu /= static_cast<double>(pts.size());
  mv /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const Pixel& p : pts) mean_dist += std::hypot(p.u - mu, p.v - mv);
  mean_dist /= static_cast<double>(pts.size());
  const double scale = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t;
  t << scale, 0, -scale * mu, 0, scale, -scale * mv, 0, 0, 1;
  return t;
}

}  // namespace

Vec3 Vec3::normalized() const {
  const double n = norm();
  if (n <= 0.0) fail(ErrorKind::InvalidInput, "cannot normalize zero vector");
  return {x / n, y / n, z / n};
}

PlaneEq PlaneEq::from_normal_point(const Vec3& normal, const Vec3& point) {
  const Vec3 n = normal.normalized();
  return {n, -n.dot(point)};
}

Pixel Homography::apply(const Pixel& p) const {
  const double w = m[6] * p.u + m[7] * p.v + m[8];
  if (std::abs(w) < 1e-15) fail(ErrorKind::DegenerateInput, "point maps to infinity");
  return {(m[0] * p.u + m[1] * p.v + m[2]) / w, (m[3] * p.u + m[4] * p.v + m[5]) / w};
}

double Homography::det() const { return to_eigen(*this).determinant(); }

Homography Homography::inverse() const {
  const Eigen::Matrix3d e = to_eigen(*this);
  const double d = e.determinant();
  double frob = e.norm();
  if (frob <= 0.0 || std::abs(d) < 1e-12 * frob * frob * frob)
    fail(ErrorKind::DegenerateInput, "homography is singular");
  return from_eigen(Eigen::Matrix3d(e.inverse())).normalized();
}

Homography Homography::normalized() const {
  double frob = 0.0;
  for (double v : m) frob += v * v;
  frob = std::sqrt(frob);
  if (frob <= 0.0) fail(ErrorKind::DegenerateInput, "zero homography");
  Homography out = *this;
  // Scale criterion is relative to the Frobenius norm so renormalizing is a no-op.
  const double pivot = m[8];
  const double div = std::abs(pivot) > 1e-12 * frob ? pivot : frob;
  for (double& v : out.m) v /= div;
  return out;
}

Point3 back_project(const Pixel& p, double relative_depth, const CameraIntrinsics& k) {
  if (!p.finite() || !std::isfinite(relative_depth) || relative_depth < 0.0 || !k.valid())
    fail(ErrorKind::InvalidInput, "back_project requires finite pixel, depth >= 0, valid camera");
  const double z = k.s * relative_depth;
  return {k.cx + (p.u - k.cx) * z / k.f, k.cy + (p.v - k.cy) * z / k.f, z};
}

Pixel project(const Point3& p, const CameraIntrinsics& k) {
  if (!p.finite() || !k.valid()) fail(ErrorKind::InvalidInput, "project requires finite point");
  if (p.z <= 0.0) fail(ErrorKind::BehindCamera, "point has non-positive depth");
  return {k.cx + (p.x - k.cx) * k.f / p.z, k.cy + (p.y - k.cy) * k.f / p.z};
}

Vec3 plane_intersection_direction(const PlaneEq& a, const PlaneEq& b) {
  Vec3 v = a.n.cross(b.n);
  const double n = v.norm();
  if (n <= kParallelTol) fail(ErrorKind::NoIntersection, "planes are parallel");
  v = v * (1.0 / n);
  const double tol = 1e-12;
  bool flip = false;
  if (v.x < -tol) {
    flip = true;
  } else if (std::abs(v.x) <= tol) {
    if (v.y < -tol)
      flip = true;
    else if (std::abs(v.y) <= tol && v.z < 0.0)
      flip = true;
  }
  return flip ? -v : v;
}

Homography homography_dlt(const std::vector<Pixel>& src, const std::vector<Pixel>& dst) {
  if (src.size() != dst.size() || src.size() < 4)
    fail(ErrorKind::DegenerateInput, "homography_dlt needs >= 4 correspondences");
  const Eigen::Matrix3d ts = conditioning_transform(src);
  const Eigen::Matrix3d td = conditioning_transform(dst);

  const size_t n = src.size();
  Eigen::MatrixXd a(2 * n, 9);
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].u, src[i].v, 1.0);
    const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].u, dst[i].v, 1.0);
    const double x = s(0), y = s(1), xp = d(0), yp = d(1);
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, xp * x, xp * y, xp;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, yp * x, yp * y, yp;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A unique null direction needs the second-smallest singular value healthy.
  if (sv(0) <= 0.0 || sv(7) < 1e-10 * sv(0))
    fail(ErrorKind::DegenerateInput, "degenerate correspondence configuration");
  const Eigen::VectorXd h = svd.matrixV().col(8);

  Eigen::Matrix3d hm;
  hm << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d full = td.inverse() * hm * ts;
  const double frob = full.norm();
  if (std::abs(full.determinant()) < 1e-12 * frob * frob * frob)
    fail(ErrorKind::DegenerateInput, "estimated homography is singular");
  return from_eigen(full).normalized();
}

std::vector<Vec2> convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
               points.end());
  const std::size_t n = points.size();
  if (n < 3) return points;

  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {  // lower chain
    while (k >= 2 && (hull[k - 1] - hull[k - 2]).cross(points[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {  // upper chain
    while (k >= lower && (hull[k - 1] - hull[k - 2]).cross(points[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_perimeter(const std::vector<Vec2>& poly) {
  if (poly.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i)
    total += (poly[(i + 1) % poly.size()] - poly[i]).norm();
  return total;
}

double polygon_area(const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) twice += poly[i].cross(poly[(i + 1) % poly.size()]);
  return 0.5 * twice;
}

bool point_in_convex_polygon(const Vec2& p, const std::vector<Vec2>& hull) {
  if (hull.size() < 3) fail(ErrorKind::InvalidHull, "hull needs >= 3 vertices");
  for (size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    if ((b - a).cross(p - a) < -1e-9) return false;
  }
  return true;
}

}  // namespace adpipe
