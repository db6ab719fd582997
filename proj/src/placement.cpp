#include "adpipe/placement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "adpipe/error.hpp"

namespace adpipe {

namespace {

// Inward half-plane form e.x <= c of a convex CCW polygon's edges, with
// unit e so offsets are metric.
struct HalfPlane {
  Vec2 e;
  double c = 0.0;
};

std::vector<HalfPlane> edge_half_planes(const std::vector<Vec2>& poly) {
  std::vector<HalfPlane> hp;
  hp.reserve(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    Vec2 dir = b - a;
    double len = dir.norm();
    if (len <= 0.0) continue;
    // Interior of a CCW polygon lies left of each edge; the outward normal
    // is the edge direction rotated -90 degrees.
    Vec2 out{dir.y / len, -dir.x / len};
    hp.push_back(HalfPlane{out, out.dot(a)});
  }
  return hp;
}

// Largest rectangle height h (width = aspect*h) centred at `c` with all
// corners satisfying the constraints; negative if the centre is infeasible.
double max_height_at(const Vec2& c, double aspect,
                     const std::vector<HalfPlane>& constraints) {
  double best = std::numeric_limits<double>::infinity();
  for (const HalfPlane& hp : constraints) {
    double slack = hp.c - hp.e.dot(c);
    if (slack < 0.0) return -1.0;
    double denom = aspect * std::fabs(hp.e.x) + std::fabs(hp.e.y);
    if (denom <= 0.0) continue;
    best = std::min(best, 2.0 * slack / denom);
  }
  return std::isfinite(best) ? best : -1.0;
}

// Hough quantization splits a long border with a fractional-degree slope
// into short runs, letting a shorter but bin-aligned border win. Re-fit each
// candidate against the edge pixels near its line and measure the border by
// its contiguous refined support instead.
struct BorderFit {
  LineSegment2 segment;
  double length = 0.0;
};

BorderFit refine_border(const std::vector<Pixel>& edge_pts, LineSegment2 seg,
                        double band, double max_gap) {
  BorderFit out;
  for (int iter = 0; iter < 3; ++iter) {
    Vec2 d{seg.p1.u - seg.p0.u, seg.p1.v - seg.p0.v};
    double len = d.norm();
    if (len <= 0.0) return out;
    d = d * (1.0 / len);
    const Vec2 n{-d.y, d.x};
    std::vector<std::pair<double, const Pixel*>> proj;
    for (const Pixel& p : edge_pts) {
      const Vec2 r{p.u - seg.p0.u, p.v - seg.p0.v};
      if (std::fabs(n.x * r.x + n.y * r.y) > band) continue;
      proj.emplace_back(d.x * r.x + d.y * r.y, &p);
    }
    if (proj.size() < 2) return out;
    std::sort(proj.begin(), proj.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::size_t best_lo = 0, best_hi = 0, lo = 0;
    for (std::size_t i = 1; i <= proj.size(); ++i) {
      if (i == proj.size() || proj[i].first - proj[i - 1].first > max_gap) {
        if (proj[i - 1].first - proj[lo].first >
            proj[best_hi].first - proj[best_lo].first) {
          best_lo = lo;
          best_hi = i - 1;
        }
        lo = i;
      }
    }
    const std::size_t m = best_hi - best_lo + 1;
    if (m < 2) return out;

    double su = 0.0, sv = 0.0;
    for (std::size_t k = best_lo; k <= best_hi; ++k) {
      su += proj[k].second->u;
      sv += proj[k].second->v;
    }
    const double mu = su / static_cast<double>(m);
    const double mv = sv / static_cast<double>(m);
    double suu = 0.0, suv = 0.0, svv = 0.0;
    for (std::size_t k = best_lo; k <= best_hi; ++k) {
      const double du = proj[k].second->u - mu;
      const double dv = proj[k].second->v - mv;
      suu += du * du;
      suv += du * dv;
      svv += dv * dv;
    }
    // Principal direction of the run's 2x2 scatter (total least squares).
    const double tr = suu + svv;
    const double det = suu * svv - suv * suv;
    const double lam = 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    Vec2 dir{lam - svv, suv};
    const Vec2 alt{suv, lam - suu};
    if (alt.norm() > dir.norm()) dir = alt;
    if (dir.norm() <= 1e-12) dir = d;  // isotropic cluster: keep the seed
    dir = dir * (1.0 / dir.norm());

    double tmin = 0.0, tmax = 0.0;
    for (std::size_t k = best_lo; k <= best_hi; ++k) {
      const double t = dir.x * (proj[k].second->u - mu) + dir.y * (proj[k].second->v - mv);
      tmin = std::min(tmin, t);
      tmax = std::max(tmax, t);
    }
    seg = LineSegment2{Pixel{mu + dir.x * tmin, mv + dir.y * tmin},
                       Pixel{mu + dir.x * tmax, mv + dir.y * tmax}};
    out = BorderFit{seg, tmax - tmin};
  }
  return out;
}

struct RectSearch {
  double h = -1.0;
  Vec2 center;
  double centroid_dist = std::numeric_limits<double>::infinity();
};

void search_grid(const Vec2& lo, const Vec2& hi, double aspect,
                 const std::vector<HalfPlane>& constraints, const Vec2& centroid,
                 RectSearch* best) {
  for (int iy = 0; iy <= 20; ++iy) {
    for (int ix = 0; ix <= 20; ++ix) {
      Vec2 c{lo.x + (hi.x - lo.x) * ix / 20.0, lo.y + (hi.y - lo.y) * iy / 20.0};
      double h = max_height_at(c, aspect, constraints);
      if (h <= 0.0) continue;
      double dist = (c - centroid).norm();
      double tie = 1e-12 * std::max(1.0, best->h);
      if (h > best->h + tie ||
          (std::fabs(h - best->h) <= tie && dist < best->centroid_dist)) {
        best->h = h;
        best->center = c;
        best->centroid_dist = dist;
      }
    }
  }
}

}  // namespace

AlignmentLine alignment_line(const BinaryMask& largest_component,
                             const AlignmentParams& params) {
  if (largest_component.width <= 0 || largest_component.height <= 0 ||
      largest_component.area() == 0)
    fail(ErrorKind::EmptyMask, "alignment line needs a non-empty mask");

  RasterImage gray = RasterImage::create(largest_component.width,
                                         largest_component.height, 1);
  for (std::size_t i = 0; i < largest_component.bits.size(); ++i)
    gray.samples[i] = largest_component.bits[i] ? 255 : 0;

  BinaryMask edges = canny(gray, params.canny_low, params.canny_high,
                           params.canny_sigma);
  std::vector<LineSegment2> segments = hough_segments(edges, params.hough);
  if (segments.empty())
    fail(ErrorKind::NoAlignment, "no straight border found in the crowd mask");

  std::vector<Pixel> edge_pts;
  for (int y = 0; y < edges.height; ++y)
    for (int x = 0; x < edges.width; ++x)
      if (edges.at(x, y)) edge_pts.push_back(Pixel{x + 0.5, y + 0.5});

  const double band = 1.75;
  const double gap = std::max(3.0, params.hough.max_gap);
  LineSegment2 best_seg = segments.front();
  double best_len = 0.0;
  const std::size_t n_cand = std::min<std::size_t>(segments.size(), 16);
  for (std::size_t i = 0; i < n_cand; ++i) {
    BorderFit fit = refine_border(edge_pts, segments[i], band, gap);
    if (fit.length > best_len + 1e-9) {
      best_len = fit.length;
      best_seg = fit.segment;
    }
  }

  AlignmentLine line;
  line.segment = best_seg;
  if (line.segment.is_vertical()) {
    line.vertical = true;
    line.a = 0.0;
    line.b = line.segment.p0.u;
  } else {
    line.a = line.segment.slope();
    line.b = line.segment.intercept();
  }
  return line;
}

PlaneEq alignment_plane(const AlignmentLine& line, const CameraIntrinsics& k) {
  if (!k.valid()) fail(ErrorKind::InvalidInput, "invalid camera intrinsics");
  const Pixel& p0 = line.segment.p0;
  const Pixel& p1 = line.segment.p1;
  if (!p0.finite() || !p1.finite() || line.segment.length() < 1e-9)
    fail(ErrorKind::InvalidInput, "degenerate alignment segment");

  Vec3 r1{(p0.u - k.cx) / k.f, (p0.v - k.cy) / k.f, 1.0};
  Vec3 r2{(p1.u - k.cx) / k.f, (p1.v - k.cy) / k.f, 1.0};
  Vec3 n = r1.cross(r2);
  double scale = r1.norm() * r2.norm();
  if (n.norm() <= 1e-12 * scale)
    fail(ErrorKind::InvalidInput, "alignment rays are parallel");
  n = n.normalized();
  Vec3 c{k.cx, k.cy, 0.0};
  return PlaneEq{n, -n.dot(c)};
}

Vec3 alignment_vector(const PlaneEq& align, const PlaneEq& crowd) {
  return plane_intersection_direction(align, crowd);
}

Placement place_asset(const PlaneFit& crowd, const PlaneHull& hull,
                      const Vec3& v_align, double aspect, double margin) {
  if (hull.hull2d.size() < 3)
    fail(ErrorKind::InvalidHull, "hull must have at least three vertices");
  if (!(aspect > 0.0) || !std::isfinite(aspect))
    fail(ErrorKind::InvalidInput, "aspect ratio must be positive");
  if (margin < 0.0 || margin >= 0.5)
    fail(ErrorKind::InvalidInput, "margin must lie in [0, 0.5)");
  double vn = v_align.norm();
  if (vn <= 0.0) fail(ErrorKind::InvalidInput, "alignment vector is zero");
  if (std::fabs(v_align.dot(crowd.plane.n)) / vn > 1e-5)
    fail(ErrorKind::InvalidInput, "alignment vector is not in the crowd plane");

  // Drop the alignment direction into hull coordinates and rotate so the
  // rectangle is axis-aligned there.
  Vec3 in_plane = v_align - crowd.plane.n * crowd.plane.n.dot(v_align);
  Vec3 u3 = in_plane.normalized();
  Vec2 u2{u3.dot(hull.basis_u), u3.dot(hull.basis_v)};
  double u2n = u2.norm();
  if (u2n <= 1e-12)
    fail(ErrorKind::InvalidInput, "alignment vector is normal to the hull frame");
  u2 = u2 * (1.0 / u2n);
  Vec2 v2 = u2.perp();

  std::vector<Vec2> poly;
  poly.reserve(hull.hull2d.size());
  for (const Vec2& p : hull.hull2d) poly.push_back(Vec2{p.dot(u2), p.dot(v2)});

  double hull_area = std::fabs(polygon_area(poly));
  if (hull_area <= 0.0) fail(ErrorKind::PlacementFailed, "hull encloses no area");

  std::vector<HalfPlane> constraints = edge_half_planes(poly);
  if (margin > 0.0) {
    double inset = margin * std::sqrt(hull_area);
    for (HalfPlane& hp : constraints) hp.c -= inset;
  }

  Vec2 lo{poly[0].x, poly[0].y};
  Vec2 hi = lo;
  Vec2 centroid;
  for (const Vec2& p : poly) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    centroid = centroid + p;
  }
  centroid = centroid * (1.0 / static_cast<double>(poly.size()));

  RectSearch best;
  search_grid(lo, hi, aspect, constraints, centroid, &best);
  if (best.h > 0.0) {
    Vec2 cell{(hi.x - lo.x) / 20.0, (hi.y - lo.y) / 20.0};
    Vec2 rlo{std::max(lo.x, best.center.x - cell.x),
             std::max(lo.y, best.center.y - cell.y)};
    Vec2 rhi{std::min(hi.x, best.center.x + cell.x),
             std::min(hi.y, best.center.y + cell.y)};
    search_grid(rlo, rhi, aspect, constraints, centroid, &best);
  }

  if (best.h <= 0.0 || aspect * best.h * best.h < 0.01 * hull_area)
    fail(ErrorKind::PlacementFailed, "no feasible asset rectangle in the hull");

  double hw = 0.5 * aspect * best.h;
  double hh = 0.5 * best.h;
  const Vec2 local[4] = {{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}};
  Placement placement;
  placement.v_align = u3;
  for (int i = 0; i < 4; ++i) {
    Vec2 q = best.center + local[i];
    Vec2 p2d = u2 * q.x + v2 * q.y;  // rotate back into hull coordinates
    placement.corners3d[i] = hull.to_world(p2d);
  }
  return placement;
}

void project_corners(Placement& p, const CameraIntrinsics& k) {
  for (int i = 0; i < 4; ++i) p.corners2d[i] = project(p.corners3d[i], k);
}

Homography placement_homography(const Placement& p, const CameraIntrinsics& k,
                                double asset_w, double asset_h) {
  if (!k.valid()) fail(ErrorKind::InvalidInput, "invalid camera intrinsics");
  if (!(asset_w > 0.0) || !(asset_h > 0.0))
    fail(ErrorKind::InvalidInput, "asset size must be positive");
  for (const Pixel& c : p.corners2d)
    if (!c.finite()) fail(ErrorKind::InvalidInput, "placement corners not projected");

  // The rectangle's own bottom pair is (0,1) and top pair (2,3), with 0-3
  // and 1-2 adjacent along the side edges. Pick the image-up pair as the
  // asset top, then the lower-u bottom corner as the asset's bottom-left.
  double v01 = 0.5 * (p.corners2d[0].v + p.corners2d[1].v);
  double v23 = 0.5 * (p.corners2d[2].v + p.corners2d[3].v);
  int bl, br, tr, tl;
  if (v01 >= v23) {
    bl = 0;
    br = 1;
  } else {
    bl = 3;
    br = 2;
  }
  if (p.corners2d[br].u < p.corners2d[bl].u) std::swap(bl, br);
  // Side-edge adjacency: 0<->3 and 1<->2.
  tl = (bl == 0) ? 3 : (bl == 3) ? 0 : (bl == 1) ? 2 : 1;
  tr = (br == 0) ? 3 : (br == 3) ? 0 : (br == 1) ? 2 : 1;

  std::vector<Pixel> src{{0.0, 0.0},
                         {asset_w, 0.0},
                         {asset_w, asset_h},
                         {0.0, asset_h}};
  std::vector<Pixel> dst{p.corners2d[tl], p.corners2d[tr], p.corners2d[br],
                         p.corners2d[bl]};
  return homography_dlt(src, dst).normalized();
}

}  // namespace adpipe
