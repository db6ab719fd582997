#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "adpipe/reconstruction.hpp"
#include "test_util.hpp"

using namespace adpipe;

namespace {

constexpr double kPi = 3.14159265358979323846;

const CameraIntrinsics kCam{1000.0, 960.0, 540.0, 2.0};

PointCloud cloud_from(const std::vector<Point3>& pts) {
  PointCloud c;
  c.points = pts;
  c.pixels.assign(pts.size(), Pixel{0, 0});
  return c;
}

// Points on a known plane through `anchor` spanned by two directions, plus
// uniform outliers, with optional in-plane-normal noise.
PointCloud plane_with_outliers(const Vec3& normal, const Vec3& anchor, int n_in, int n_out,
                               double noise, std::uint64_t seed) {
  const Vec3 n = normal.normalized();
  Vec3 seed_axis = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 u = (seed_axis - n * n.dot(seed_axis)).normalized();
  const Vec3 v = n.cross(u);
  std::mt19937_64 rng(seed);
  PointCloud c;
  for (int i = 0; i < n_in; ++i) {
    const double a = range_draw(rng, -50.0, 50.0);
    const double b = range_draw(rng, -50.0, 50.0);
    const double e = range_draw(rng, -noise, noise);
    c.points.push_back(anchor + u * a + v * b + n * e);
  }
  for (int i = 0; i < n_out; ++i) {
    c.points.push_back(anchor + Vec3{range_draw(rng, -60.0, 60.0), range_draw(rng, -60.0, 60.0),
                                     range_draw(rng, 15.0, 80.0)});
  }
  c.pixels.assign(c.points.size(), Pixel{0, 0});
  return c;
}

double angle_between_deg(const Vec3& a, const Vec3& b) {
  const double cosv = std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0);
  return std::acos(cosv) * 180.0 / kPi;
}

// Segment of a line through `apex` with direction angle phi (degrees),
// centred at apex + t*dir.
LineSegment2 pencil_segment(const Pixel& apex, double phi_deg, double t, double half_len) {
  const double c = std::cos(phi_deg * kPi / 180.0), s = std::sin(phi_deg * kPi / 180.0);
  const Pixel mid{apex.u + t * c, apex.v + t * s};
  return {{mid.u - half_len * c, mid.v - half_len * s},
          {mid.u + half_len * c, mid.v + half_len * s}};
}

// Vanishing point of world direction d for a camera with focal f and
// principal point p (direction flipped forward if needed).
Pixel vp_of_direction(Vec3 d, double f, const Pixel& p) {
  if (d.z < 0.0) d = -d;
  return {p.u + f * d.x / d.z, p.v + f * d.y / d.z};
}

}  // namespace

TEST_CASE("cloud building back-projects masked pixels only") {
  DepthMap d = DepthMap::create(8, 6, 3.0f);
  BinaryMask m = BinaryMask::create(8, 6, 1);
  PointCloud c = depth_to_cloud(d, kCam, m, 1);
  REQUIRE(c.size() == 48);
  for (const Point3& p : c.points) CHECK(p.z == doctest::Approx(6.0).epsilon(1e-12));

  // Single pixel: matches the direct back-projection of (1160.5, 540.5).
  BinaryMask one = BinaryMask::create(2000, 1100);
  one.at(1160, 540) = 1;
  DepthMap dbig = DepthMap::create(2000, 1100, 3.0f);
  PointCloud single = depth_to_cloud(dbig, kCam, one, 1);
  REQUIRE(single.size() == 1);
  const Point3 expect = back_project({1160.5, 540.5}, 3.0, kCam);
  CHECK(single.points[0].x == doctest::Approx(expect.x).epsilon(1e-12));
  CHECK(single.points[0].y == doctest::Approx(expect.y).epsilon(1e-12));
  CHECK(single.points[0].z == doctest::Approx(expect.z).epsilon(1e-12));
  CHECK(single.pixels[0].u == doctest::Approx(1160.5));
  CHECK(single.pixels[0].v == doctest::Approx(540.5));

  // Empty mask -> empty cloud; zero depth skipped; stride subsamples.
  BinaryMask none = BinaryMask::create(8, 6);
  CHECK(depth_to_cloud(d, kCam, none, 1).size() == 0);

  DepthMap dz = DepthMap::create(8, 6, 3.0f);
  dz.at(0, 0) = 0.0f;
  CHECK(depth_to_cloud(dz, kCam, m, 1).size() == 47);
  CHECK(depth_to_cloud(d, kCam, m, 2).size() == 12);

  DepthMap wrong = DepthMap::create(4, 4, 1.0f);
  CHECK_THROWS_AS(depth_to_cloud(wrong, kCam, m, 1), Error);
  CHECK_THROWS_AS(depth_to_cloud(d, kCam, m, 0), Error);
}

TEST_CASE("plane fit recovers an exact constant-depth plane") {
  std::vector<Point3> pts;
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 20; ++j) pts.push_back({i * 2.0, j * 3.0, 5.0});
  PointCloud c = cloud_from(pts);
  PlaneFit fit = ransac_plane(c, 0.01, 100, 42);
  CHECK(fit.plane.n.x == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(fit.plane.n.y == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(fit.plane.n.z == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.plane.d == doctest::Approx(-5.0).epsilon(1e-9));
  CHECK(fit.inlier_ratio == doctest::Approx(1.0));
  CHECK(fit.inliers.size() == 500);
  for (int i : fit.inliers)
    CHECK(std::abs(fit.plane.signed_distance(c.points[i])) <= fit.tolerance);
}

TEST_CASE("plane fit survives 30% outliers") {
  const Vec3 truth = Vec3{0.3, -0.5, 0.8}.normalized();
  PointCloud c = plane_with_outliers(truth, {10, 20, 30}, 700, 300, 0.05, 5);
  PlaneFit fit = ransac_plane(c, 0.2, 500, 99);
  CHECK(angle_between_deg(fit.plane.n, truth) < 1.0);
  CHECK(fit.inlier_ratio > 0.6);
  CHECK(fit.inlier_ratio < 0.85);
  for (int i : fit.inliers)
    CHECK(std::abs(fit.plane.signed_distance(c.points[i])) <= fit.tolerance);
}

TEST_CASE("plane fit is deterministic and monotone in tolerance") {
  const Vec3 truth = Vec3{0.1, 0.2, 1.0}.normalized();
  PointCloud c = plane_with_outliers(truth, {0, 0, 40}, 600, 250, 0.04, 17);

  PlaneFit a = ransac_plane(c, 0.15, 300, 1234);
  PlaneFit b = ransac_plane(c, 0.15, 300, 1234);
  CHECK(a.inliers == b.inliers);
  CHECK(a.plane.n.x == b.plane.n.x);
  CHECK(a.plane.n.y == b.plane.n.y);
  CHECK(a.plane.n.z == b.plane.n.z);
  CHECK(a.plane.d == b.plane.d);

  double prev_ratio = 0.0;
  for (double tol : {0.05, 0.15, 0.5, 2.0}) {
    PlaneFit fit = ransac_plane(c, tol, 300, 1234);
    CHECK(fit.inlier_ratio >= prev_ratio);
    prev_ratio = fit.inlier_ratio;
  }
}

TEST_CASE("plane fit rejects degenerate inputs") {
  PointCloud two = cloud_from({{0, 0, 0}, {1, 1, 1}});
  CHECK_THROWS_AS(ransac_plane(two, 1.0, 10, 1), Error);

  std::vector<Point3> line;
  for (int i = 0; i < 30; ++i) line.push_back({i * 1.0, i * 2.0, i * 3.0});
  CHECK_THROWS_AS(ransac_plane(cloud_from(line), 1e-6, 50, 1), Error);
  try {
    ransac_plane(cloud_from(line), 1e-6, 50, 1);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateInput);
  }
}

TEST_CASE("hull on plane keeps the square corners and contains every inlier") {
  std::vector<Point3> pts = {{0, 0, 3}, {10, 0, 3}, {10, 8, 3}, {0, 8, 3}};
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i)
    pts.push_back({range_draw(rng, 0.5, 9.5), range_draw(rng, 0.5, 7.5), 3.0});
  PointCloud c = cloud_from(pts);
  PlaneFit fit = ransac_plane(c, 0.01, 100, 3);
  REQUIRE(fit.inliers.size() == c.size());

  PlaneHull hull = hull_on_plane(fit, c);
  CHECK(hull.hull2d.size() == 4);

  // Orthonormal plane frame.
  CHECK(hull.basis_u.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hull.basis_v.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hull.basis_u.dot(hull.basis_v) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(hull.basis_u.dot(fit.plane.n) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(hull.basis_v.dot(fit.plane.n) == doctest::Approx(0.0).epsilon(1e-12));

  double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
  for (int i : fit.inliers) {
    const Vec2 q = hull.to_plane(c.points[i]);
    CHECK(point_in_convex_polygon(q, hull.hull2d));
    min_x = std::min(min_x, q.x);
    max_x = std::max(max_x, q.x);
    min_y = std::min(min_y, q.y);
    max_y = std::max(max_y, q.y);
  }
  CHECK(polygon_area(hull.hull2d) > 0.0);
  CHECK(polygon_area(hull.hull2d) <= (max_x - min_x) * (max_y - min_y) + 1e-9);

  // Round trip through the plane frame.
  for (const Vec2& q : hull.hull2d) {
    const Point3 w = hull.to_world(q);
    const Vec2 back = hull.to_plane(w);
    CHECK(back.x == doctest::Approx(q.x).epsilon(1e-12));
    CHECK(back.y == doctest::Approx(q.y).epsilon(1e-12));
    CHECK(std::abs(fit.plane.signed_distance(w)) < 1e-9);
  }
}

TEST_CASE("hull rejects collinear inliers") {
  std::vector<Point3> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({static_cast<double>(i), 0.0, 3.0});
  pts.push_back({3.0, 5.0, 3.0});  // lift plane fit out of degeneracy
  PointCloud c = cloud_from(pts);
  PlaneFit fit = ransac_plane(c, 0.01, 200, 7);
  fit.inliers.clear();
  for (int i = 0; i < 10; ++i) fit.inliers.push_back(i);  // the collinear subset
  CHECK_THROWS_AS(hull_on_plane(fit, c), Error);

  fit.inliers = {0, 1};
  CHECK_THROWS_AS(hull_on_plane(fit, c), Error);
}

TEST_CASE("two line pencils intersect at their apexes") {
  const Pixel apex_a{2000.0, 500.0};
  const Pixel apex_b{-800.0, 500.0};
  std::vector<LineSegment2> segs;
  for (double phi : {16.0, 18.0, 20.0, 22.0})
    segs.push_back(pencil_segment(apex_a, phi, -1700.0, 90.0));
  for (double phi : {135.0, 138.0, 141.0, 144.0})
    segs.push_back(pencil_segment(apex_b, phi, 1500.0, 80.0));

  std::vector<Pixel> vps = vanishing_points(segs);
  REQUIRE(vps.size() == 2);
  auto near = [](const Pixel& p, const Pixel& q) {
    return std::hypot(p.u - q.u, p.v - q.v) < 5.0;
  };
  const bool a_first = near(vps[0], apex_a);
  CHECK((a_first ? near(vps[1], apex_b) : (near(vps[0], apex_b) && near(vps[1], apex_a))));
}

TEST_CASE("parallel segments carry no vanishing structure") {
  std::vector<LineSegment2> segs;
  for (int i = 0; i < 6; ++i)
    segs.push_back({{100.0, 50.0 + 40.0 * i}, {500.0, 50.0 + 40.0 * i}});
  CHECK_THROWS_AS(vanishing_points(segs), Error);
  try {
    vanishing_points(segs);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientStructure);
  }

  std::vector<LineSegment2> few = {{{0, 0}, {10, 0}}, {{0, 5}, {10, 5}}, {{0, 9}, {9, 19}}};
  CHECK_THROWS_AS(vanishing_points(few), Error);
}

TEST_CASE("three pencils yield three vanishing points") {
  const Pixel pa{3000.0, 400.0};
  const Pixel pb{500.0, -2500.0};
  const Pixel pc{-2200.0, 2600.0};
  std::vector<LineSegment2> segs;
  for (double phi : {2.0, 5.0, 8.0}) segs.push_back(pencil_segment(pa, phi, -2500.0, 100.0));
  for (double phi : {84.0, 88.0, 92.0}) segs.push_back(pencil_segment(pb, phi, 2800.0, 100.0));
  for (double phi : {40.0, 44.0, 48.0}) segs.push_back(pencil_segment(pc, phi, 3200.0, 100.0));
  std::vector<Pixel> vps = vanishing_points(segs);
  CHECK(vps.size() == 3);
}

TEST_CASE("focal from two opposite vanishing points") {
  const Pixel p{960.0, 540.0};
  CHECK(estimate_focal({{960.0 + 800.0, 540.0}, {960.0 - 800.0, 540.0}}, p) ==
        doctest::Approx(800.0).epsilon(1e-12));
  CHECK(estimate_focal({{960.0 + 400.0, 540.0}, {960.0 - 1600.0, 540.0}}, p) ==
        doctest::Approx(800.0).epsilon(1e-12));
  // Swap invariance.
  CHECK(estimate_focal({{960.0 - 1600.0, 540.0}, {960.0 + 400.0, 540.0}}, p) ==
        doctest::Approx(800.0).epsilon(1e-12));

  CHECK_THROWS_AS(estimate_focal({{960.0 + 800.0, 540.0}, {960.0 + 800.0, 540.0}}, p), Error);
  try {
    estimate_focal({{960.0 + 800.0, 540.0}, {960.0 + 799.0, 540.0}}, p);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InconsistentGeometry);
  }
}

TEST_CASE("focal from three exact orthogonal-direction vanishing points") {
  const double f = 800.0;
  const Pixel p{960.0, 540.0};
  // Camera-frame axes of a rotated world: R = Rx(20) * Ry(30) columns.
  const double cx = std::cos(20.0 * kPi / 180.0), sx = std::sin(20.0 * kPi / 180.0);
  const double cy = std::cos(30.0 * kPi / 180.0), sy = std::sin(30.0 * kPi / 180.0);
  const Vec3 r0{cy, sx * sy, -cx * sy};
  const Vec3 r1{0.0, cx, sx};
  const Vec3 r2{sy, -sx * cy, cx * cy};
  std::vector<Pixel> vps = {vp_of_direction(r0, f, p), vp_of_direction(r1, f, p),
                            vp_of_direction(r2, f, p)};
  CHECK(estimate_focal(vps, p) == doctest::Approx(f).epsilon(1e-9));
}

TEST_CASE("projected line families recover the focal length") {
  // Two orthogonal horizontal world direction families seen by a camera with
  // known focal length; segments produced analytically by projection.
  for (double f : {400.0, 800.0, 1600.0}) {
    const Pixel pp{320.0, 180.0};
    const CameraIntrinsics cam{f, pp.u, pp.v, 1.0};
    const double phi = 25.0 * kPi / 180.0;
    const Vec3 d1{std::cos(phi), 0.0, std::sin(phi)};
    const Vec3 d2{std::sin(phi), 0.0, -std::cos(phi)};
    std::vector<LineSegment2> segs;
    std::mt19937_64 rng(11);
    for (int i = 0; i < 6; ++i) {
      // Lines on the ground plane y = +8, offset along the other direction.
      const Vec3 base{range_draw(rng, -6.0, 6.0), 8.0, range_draw(rng, 18.0, 30.0)};
      for (const Vec3& d : {d1, d2}) {
        const Vec3 dd = d.z < 0.0 ? -d : d;
        const Point3 a = base + Vec3{pp.u, pp.v, 0.0};
        const Point3 b = a + dd * 6.0;
        segs.push_back({project(a, cam), project(b, cam)});
      }
    }
    std::vector<Pixel> vps = vanishing_points(segs);
    REQUIRE(vps.size() >= 2);
    const double est = estimate_focal(vps, pp);
    CHECK(std::abs(est - f) / f < 0.02);
  }
}
