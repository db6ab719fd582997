#include "adpipe/reconstruction.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace adpipe {

namespace {

Vec3 lexicographically_positive(const Vec3& v) {
  constexpr double kTol = 1e-12;
  if (v.x < -kTol) return -v;
  if (std::abs(v.x) <= kTol) {
    if (v.y < -kTol) return -v;
    if (std::abs(v.y) <= kTol && v.z < 0.0) return -v;
  }
  return v;
}

/// Flip (n, d) together so the normal is lexicographically positive.
PlaneEq canonical_plane(const PlaneEq& p) {
  const Vec3 n = lexicographically_positive(p.n);
  return n.dot(p.n) < 0.0 ? PlaneEq{n, -p.d} : PlaneEq{n, p.d};
}

double axial_distance_deg(double a, double b) {
  double d = std::abs(a - b);
  d = std::fmod(d, 180.0);
  return std::min(d, 180.0 - d);
}

struct OrientationCluster {
  std::vector<int> members;
  double weight = 0.0;  // total segment length
  double cos2 = 0.0;    // doubled-angle circular mean accumulators
  double sin2 = 0.0;

  double mean_angle_deg() const {
    double a = 0.5 * std::atan2(sin2, cos2) * 180.0 / 3.14159265358979323846;
    if (a < 0.0) a += 180.0;
    return a;
  }
};

}  // namespace

PointCloud depth_to_cloud(const DepthMap& d, const CameraIntrinsics& k, const BinaryMask& m,
                          int stride) {
  if (d.width != m.width || d.height != m.height)
    fail(ErrorKind::InvalidInput, "depth map and mask dimensions differ");
  if (stride < 1) fail(ErrorKind::InvalidInput, "stride must be at least 1");
  if (!k.valid()) fail(ErrorKind::InvalidInput, "camera intrinsics are invalid");

  PointCloud cloud;
  for (int y = 0; y < d.height; y += stride) {
    for (int x = 0; x < d.width; x += stride) {
      if (!m.at(x, y)) continue;
      const double md = d.at(x, y);
      if (!(md > 0.0f)) continue;
      const Pixel px{x + 0.5, y + 0.5};
      cloud.points.push_back(back_project(px, md, k));
      cloud.pixels.push_back(px);
    }
  }
  return cloud;
}

PlaneFit ransac_plane(const PointCloud& c, double tolerance, int iterations,
                      std::uint64_t rng_seed) {
  const std::size_t n = c.size();
  if (n < 3) fail(ErrorKind::DegenerateInput, "plane fit needs at least 3 points");
  if (!(tolerance > 0.0) || iterations < 1)
    fail(ErrorKind::InvalidInput, "tolerance and iterations must be positive");

  std::mt19937_64 rng(rng_seed);
  auto draw_index = [&]() { return static_cast<std::size_t>(rng() % n); };

  bool have_best = false;
  PlaneEq best_plane;
  std::size_t best_count = 0;
  double best_sumsq = 0.0;

  for (int iter = 0; iter < iterations; ++iter) {
    std::size_t ia = draw_index(), ib = draw_index(), ic = draw_index();
    int guard = 0;
    while ((ib == ia || ic == ia || ic == ib) && guard++ < 100) {
      ib = draw_index();
      ic = draw_index();
    }
    if (ib == ia || ic == ia || ic == ib) continue;

    const Vec3 e1 = c.points[ib] - c.points[ia];
    const Vec3 e2 = c.points[ic] - c.points[ia];
    const Vec3 cross = e1.cross(e2);
    const double scale = e1.norm() * e2.norm();
    if (scale <= 0.0 || cross.norm() <= 1e-12 * scale) continue;  // collinear triple

    const Vec3 normal = cross.normalized();
    const double d = -normal.dot(c.points[ia]);
    std::size_t count = 0;
    double sumsq = 0.0;
    for (const Point3& p : c.points) {
      const double r = normal.dot(p) + d;
      if (std::abs(r) <= tolerance) {
        ++count;
        sumsq += r * r;
      }
    }
    if (!have_best || count > best_count || (count == best_count && sumsq < best_sumsq)) {
      have_best = true;
      best_plane = {normal, d};
      best_count = count;
      best_sumsq = sumsq;
    }
  }
  if (!have_best)
    fail(ErrorKind::DegenerateInput, "no plane hypothesis found (points may be collinear)");

  auto collect_inliers = [&](const PlaneEq& plane) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(plane.signed_distance(c.points[i])) <= tolerance)
        idx.push_back(static_cast<int>(i));
    return idx;
  };

  std::vector<int> inliers = collect_inliers(best_plane);
  PlaneEq plane = best_plane;

  // Least-squares refit on the consensus set: centroid plus the smallest
  // principal direction of the scatter matrix.
  if (inliers.size() >= 3) {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (int i : inliers) centroid += Eigen::Vector3d(c.points[i].x, c.points[i].y, c.points[i].z);
    centroid /= static_cast<double>(inliers.size());
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (int i : inliers) {
      const Eigen::Vector3d q =
          Eigen::Vector3d(c.points[i].x, c.points[i].y, c.points[i].z) - centroid;
      scatter += q * q.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
    const Eigen::Vector3d nvec = eig.eigenvectors().col(0);
    const Vec3 normal = Vec3{nvec.x(), nvec.y(), nvec.z()}.normalized();
    const PlaneEq refit{normal, -normal.dot({centroid.x(), centroid.y(), centroid.z()})};
    std::vector<int> refit_inliers = collect_inliers(refit);
    if (refit_inliers.size() >= 3) {
      plane = refit;
      inliers = std::move(refit_inliers);
    }
  }

  PlaneFit fit;
  fit.plane = canonical_plane(plane);
  fit.inliers = std::move(inliers);
  fit.inlier_ratio = static_cast<double>(fit.inliers.size()) / static_cast<double>(n);
  fit.tolerance = tolerance;
  return fit;
}

PlaneHull hull_on_plane(const PlaneFit& fit, const PointCloud& c) {
  if (fit.inliers.size() < 3) fail(ErrorKind::DegenerateInput, "hull needs at least 3 inliers");

  const Vec3 n = fit.plane.n;
  // Basis seed: the world axis least aligned with the normal.
  const double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
  Vec3 seed{1, 0, 0};
  if (ay <= ax && ay <= az)
    seed = {0, 1, 0};
  else if (az <= ax && az <= ay)
    seed = {0, 0, 1};
  const Vec3 u = (seed - n * n.dot(seed)).normalized();
  const Vec3 v = n.cross(u);

  // Origin: centroid of the inliers, dropped onto the plane.
  Vec3 centroid{0, 0, 0};
  for (int i : fit.inliers) centroid = centroid + c.points[i];
  centroid = centroid * (1.0 / static_cast<double>(fit.inliers.size()));
  const Point3 origin = centroid - n * fit.plane.signed_distance(centroid);

  PlaneHull hull;
  hull.origin = origin;
  hull.basis_u = u;
  hull.basis_v = v;

  std::vector<Vec2> projected;
  projected.reserve(fit.inliers.size());
  for (int i : fit.inliers) {
    const Vec3 rel = c.points[i] - origin;
    projected.push_back({rel.dot(u), rel.dot(v)});
  }
  hull.hull2d = convex_hull(std::move(projected));
  if (hull.hull2d.size() < 3)
    fail(ErrorKind::DegenerateInput, "inliers are collinear on the plane");
  return hull;
}

std::vector<Pixel> vanishing_points(const std::vector<LineSegment2>& segments) {
  if (segments.size() < 4)
    fail(ErrorKind::InsufficientStructure, "need at least 4 segments for vanishing points");

  // Longest segments first so cluster centers are anchored by reliable lines.
  std::vector<int> order(segments.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double la = segments[a].length(), lb = segments[b].length();
    return la != lb ? la > lb : a < b;
  });

  constexpr double kMergeDeg = 10.0;
  constexpr double kPi = 3.14159265358979323846;
  std::vector<OrientationCluster> clusters;
  for (int idx : order) {
    const double angle = segments[idx].angle_deg();
    const double len = segments[idx].length();
    if (!(len > 0.0)) fail(ErrorKind::InvalidInput, "zero-length segment");
    OrientationCluster* home = nullptr;
    for (auto& cl : clusters)
      if (axial_distance_deg(angle, cl.mean_angle_deg()) <= kMergeDeg) {
        home = &cl;
        break;
      }
    if (!home) {
      clusters.emplace_back();
      home = &clusters.back();
    }
    home->members.push_back(idx);
    home->weight += len;
    home->cos2 += len * std::cos(2.0 * angle * kPi / 180.0);
    home->sin2 += len * std::sin(2.0 * angle * kPi / 180.0);
  }

  clusters.erase(std::remove_if(clusters.begin(), clusters.end(),
                                [](const OrientationCluster& cl) { return cl.members.size() < 2; }),
                 clusters.end());
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const OrientationCluster& a, const OrientationCluster& b) {
                     return a.weight > b.weight;
                   });
  if (clusters.size() > 3) clusters.resize(3);

  // Per cluster: weighted least-squares meeting point of the member lines.
  std::vector<Pixel> vps;
  for (const auto& cl : clusters) {
    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    for (int idx : cl.members) {
      const LineSegment2& s = segments[idx];
      const double len = s.length();
      const Eigen::Vector2d dir((s.p1.u - s.p0.u) / len, (s.p1.v - s.p0.v) / len);
      const Eigen::Vector2d normal(-dir.y(), dir.x());
      const double offset = normal.x() * s.p0.u + normal.y() * s.p0.v;
      a += len * normal * normal.transpose();
      b += len * offset * normal;
    }
    const double det = a.determinant();
    if (std::abs(det) < 1e-12 * a.norm() * a.norm()) continue;  // parallel member lines
    const Eigen::Vector2d x = a.inverse() * b;
    vps.push_back({x.x(), x.y()});
  }
  if (vps.size() < 2)
    fail(ErrorKind::InsufficientStructure, "fewer than two orientation clusters intersect");
  return vps;
}

double estimate_focal(const std::vector<Pixel>& vps, const Pixel& principal) {
  if (vps.size() < 2) fail(ErrorKind::InvalidInput, "need at least two vanishing points");
  std::vector<double> estimates;
  for (std::size_t i = 0; i < vps.size(); ++i)
    for (std::size_t j = i + 1; j < vps.size(); ++j) {
      const double dot = (vps[i].u - principal.u) * (vps[j].u - principal.u) +
                         (vps[i].v - principal.v) * (vps[j].v - principal.v);
      if (dot < 0.0) estimates.push_back(std::sqrt(-dot));
    }
  if (estimates.empty())
    fail(ErrorKind::InconsistentGeometry,
         "vanishing points lie on the same side of the principal point");
  std::sort(estimates.begin(), estimates.end());
  const std::size_t mid = estimates.size() / 2;
  if (estimates.size() % 2 == 1) return estimates[mid];
  return 0.5 * (estimates[mid - 1] + estimates[mid]);
}

}  // namespace adpipe
