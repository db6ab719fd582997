#include "adpipe/tracking.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "adpipe/error.hpp"
#include "adpipe/imaging.hpp"

namespace adpipe {
namespace {

constexpr int kPatchRadius = 5;    // 11x11 descriptor patch
constexpr int kLkWindow = 10;      // 21x21 flow window
constexpr int kLkLevels = 3;
constexpr int kLkIterations = 30;
constexpr double kLkEpsilon = 0.01;
constexpr double kMinDetectDist = 5.0;

bool in_frame(const Pixel& p, int width, int height) {
  return p.finite() && p.u >= 0.0 && p.u <= static_cast<double>(width) &&
         p.v >= 0.0 && p.v <= static_cast<double>(height);
}

// A flow window must fit inside the frame; points in the border band cannot
// be measured reliably and are reported as failures.
bool window_fits(const Pixel& p, int width, int height) {
  return p.finite() && p.u >= kLkWindow && p.u <= width - kLkWindow &&
         p.v >= kLkWindow && p.v <= height - kLkWindow;
}

// ---------------------------------------------------------------------------
// Double-precision raster with clamped bilinear sampling (pixel centres at
// integer + 0.5), used for flow pyramids.

struct DImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  static DImage create(int w, int h) {
    DImage img;
    img.width = w;
    img.height = h;
    img.values.assign(static_cast<std::size_t>(w) * h, 0.0);
    return img;
  }

  double at(int x, int y) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return values[static_cast<std::size_t>(y) * width + x];
  }

  double sample(double x, double y) const {
    double gx = std::clamp(x - 0.5, 0.0, static_cast<double>(width - 1));
    double gy = std::clamp(y - 0.5, 0.0, static_cast<double>(height - 1));
    int x0 = std::min(static_cast<int>(gx), width - 2 < 0 ? 0 : width - 2);
    int y0 = std::min(static_cast<int>(gy), height - 2 < 0 ? 0 : height - 2);
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    int x1 = std::min(x0 + 1, width - 1);
    int y1 = std::min(y0 + 1, height - 1);
    double fx = gx - x0;
    double fy = gy - y0;
    double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    double bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    return top * (1.0 - fy) + bot * fy;
  }
};

DImage from_gray(const RasterImage& gray) {
  DImage img = DImage::create(gray.width, gray.height);
  for (int y = 0; y < gray.height; ++y)
    for (int x = 0; x < gray.width; ++x)
      img.values[static_cast<std::size_t>(y) * gray.width + x] =
          static_cast<double>(gray.at(x, y, 0));
  return img;
}

DImage downsample2(const DImage& src) {
  int w = std::max(1, src.width / 2);
  int h = std::max(1, src.height / 2);
  DImage dst = DImage::create(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) +
                   src.at(2 * x, 2 * y + 1) + src.at(2 * x + 1, 2 * y + 1);
      dst.values[static_cast<std::size_t>(y) * w + x] = 0.25 * sum;
    }
  }
  return dst;
}

struct FlowLevel {
  DImage image;
  DImage grad_x;
  DImage grad_y;
};

void central_gradients(FlowLevel& level) {
  const DImage& img = level.image;
  level.grad_x = DImage::create(img.width, img.height);
  level.grad_y = DImage::create(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::size_t idx = static_cast<std::size_t>(y) * img.width + x;
      level.grad_x.values[idx] = 0.5 * (img.at(x + 1, y) - img.at(x - 1, y));
      level.grad_y.values[idx] = 0.5 * (img.at(x, y + 1) - img.at(x, y - 1));
    }
  }
}

std::vector<FlowLevel> build_pyramid(const RasterImage& gray, int levels,
                                     bool with_gradients) {
  std::vector<FlowLevel> pyr(static_cast<std::size_t>(levels));
  pyr[0].image = from_gray(gray);
  for (int l = 1; l < levels; ++l) pyr[l].image = downsample2(pyr[l - 1].image);
  if (with_gradients)
    for (int l = 0; l < levels; ++l) central_gradients(pyr[l]);
  return pyr;
}

RasterImage ensure_gray(const RasterImage& frame) {
  if (frame.channels == 1) return frame;
  if (frame.channels == 3) return to_grayscale(frame);
  fail(ErrorKind::InvalidInput, "frames must be grayscale or RGB");
}

// ---------------------------------------------------------------------------
// Corner detection support.

struct Candidate {
  int x;
  int y;
  double response;
};

std::vector<Candidate> corner_candidates(const RasterImage& gray, double quality) {
  std::vector<Candidate> out;
  const int w = gray.width;
  const int h = gray.height;
  if (w < 7 || h < 7) return out;

  std::vector<float> gx, gy;
  sobel_gradients(gray, gx, gy);

  std::vector<double> response(static_cast<std::size_t>(w) * h, 0.0);
  double max_response = 0.0;
  for (int y = 2; y < h - 2; ++y) {
    for (int x = 2; x < w - 2; ++x) {
      double sxx = 0.0, sxy = 0.0, syy = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          std::size_t idx = static_cast<std::size_t>(y + dy) * w + (x + dx);
          double ix = gx[idx];
          double iy = gy[idx];
          sxx += ix * ix;
          sxy += ix * iy;
          syy += iy * iy;
        }
      }
      double tr = sxx + syy;
      double disc = std::sqrt((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy);
      double lambda_min = 0.5 * (tr - disc);
      response[static_cast<std::size_t>(y) * w + x] = lambda_min;
      max_response = std::max(max_response, lambda_min);
    }
  }
  if (max_response <= 0.0) return out;

  const double threshold = quality * max_response;
  for (int y = 2; y < h - 2; ++y) {
    for (int x = 2; x < w - 2; ++x) {
      double r = response[static_cast<std::size_t>(y) * w + x];
      if (r < threshold || r <= 0.0) continue;
      // Local maximum; plateau ties are broken toward the earliest pixel in
      // raster order so exactly one survivor remains per plateau.
      bool keep = true;
      for (int dy = -1; dy <= 1 && keep; ++dy) {
        for (int dx = -1; dx <= 1 && keep; ++dx) {
          if (dx == 0 && dy == 0) continue;
          double rn = response[static_cast<std::size_t>(y + dy) * w + (x + dx)];
          bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (earlier ? rn >= r : rn > r) keep = false;
        }
      }
      if (keep) out.push_back(Candidate{x, y, r});
    }
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  return out;
}

std::vector<Pixel> space_candidates(const std::vector<Candidate>& sorted,
                                    int max_count, double min_dist,
                                    const std::vector<Pixel>& occupied) {
  std::vector<Pixel> kept = occupied;
  std::vector<Pixel> out;
  const double min_d2 = min_dist * min_dist;
  for (const Candidate& c : sorted) {
    if (static_cast<int>(out.size()) >= max_count) break;
    Pixel p{c.x + 0.5, c.y + 0.5};
    bool clear = true;
    for (const Pixel& q : kept) {
      double du = p.u - q.u;
      double dv = p.v - q.v;
      if (du * du + dv * dv < min_d2) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    kept.push_back(p);
    out.push_back(p);
  }
  return out;
}

// Detect corners inside a disk by cropping its bounding box (plus a margin
// that absorbs clamped-border gradient artifacts) and offsetting the results.
std::vector<Pixel> detect_in_disk(const RasterImage& gray, const Pixel& center,
                                  double radius, int max_count,
                                  const std::vector<Pixel>& occupied) {
  const int margin = 3;
  int x0 = std::max(0, static_cast<int>(std::floor(center.u - radius)) - margin);
  int y0 = std::max(0, static_cast<int>(std::floor(center.v - radius)) - margin);
  int x1 = std::min(gray.width, static_cast<int>(std::ceil(center.u + radius)) + margin);
  int y1 = std::min(gray.height, static_cast<int>(std::ceil(center.v + radius)) + margin);
  if (x1 - x0 < 7 || y1 - y0 < 7) return {};

  RasterImage crop = RasterImage::create(x1 - x0, y1 - y0, 1);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      crop.at(x - x0, y - y0, 0) = gray.at(x, y, 0);

  std::vector<Candidate> cands = corner_candidates(crop, 0.01);
  std::vector<Candidate> inside;
  inside.reserve(cands.size());
  const double r2 = radius * radius;
  for (const Candidate& c : cands) {
    Pixel p{c.x + x0 + 0.5, c.y + y0 + 0.5};
    double du = p.u - center.u;
    double dv = p.v - center.v;
    // Reject the frame's border band: flow windows there cannot be measured,
    // so such features would be dropped on the next step anyway.
    if (du * du + dv * dv <= r2 && window_fits(p, gray.width, gray.height))
      inside.push_back(Candidate{c.x + x0, c.y + y0, c.response});
  }
  return space_candidates(inside, max_count, kMinDetectDist, occupied);
}

void refill_group(TrackState& state, int gi, const RasterImage& gray,
                  const TrackingConfig& cfg) {
  std::vector<Feature>& group = state.groups[static_cast<std::size_t>(gi)];
  std::vector<Pixel> occupied;
  occupied.reserve(group.size());
  for (const Feature& f : group) occupied.push_back(f.position);
  int want = cfg.max_features - static_cast<int>(group.size());
  if (want <= 0) return;
  std::vector<Pixel> fresh = detect_in_disk(
      gray, state.corners[static_cast<std::size_t>(gi)].position, cfg.radius,
      want, occupied);
  for (const Pixel& p : fresh) group.push_back(make_feature(gray, p, gi));
}

void reset_corner_filter(CornerState& c) {
  c.kstate = {c.position.u, c.position.v, 0.0, 0.0};
  c.kcov = {};
  c.kcov[0] = 10.0;
  c.kcov[5] = 10.0;
  c.kcov[10] = 100.0;
  c.kcov[15] = 100.0;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Pixel> shi_tomasi(const RasterImage& gray, int max_count,
                              double quality, double min_dist) {
  if (gray.empty() || gray.channels != 1)
    fail(ErrorKind::InvalidInput, "corner detection needs a grayscale image");
  if (max_count <= 0 || !(quality > 0.0) || !(min_dist >= 0.0))
    fail(ErrorKind::InvalidInput, "invalid corner detection parameters");
  return space_candidates(corner_candidates(gray, quality), max_count, min_dist, {});
}

Feature make_feature(const RasterImage& gray, const Pixel& position, int group) {
  if (gray.empty() || gray.channels != 1)
    fail(ErrorKind::InvalidInput, "feature extraction needs a grayscale image");
  if (!position.finite())
    fail(ErrorKind::InvalidInput, "feature position must be finite");
  Feature f;
  f.position = position;
  f.group = group;
  double mean = 0.0;
  std::array<double, 121> raw{};
  int k = 0;
  for (int dy = -kPatchRadius; dy <= kPatchRadius; ++dy) {
    for (int dx = -kPatchRadius; dx <= kPatchRadius; ++dx) {
      raw[static_cast<std::size_t>(k)] =
          sample_bilinear(gray, position.u + dx, position.v + dy, 0);
      mean += raw[static_cast<std::size_t>(k)];
      ++k;
    }
  }
  mean /= 121.0;
  double norm2 = 0.0;
  for (double& v : raw) {
    v -= mean;
    norm2 += v * v;
  }
  double norm = std::sqrt(norm2);
  if (norm < 1e-6) {
    f.flat = true;
    return f;
  }
  for (int i = 0; i < 121; ++i)
    f.descriptor[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(i)] / norm;
  return f;
}

double zncc(const Feature& a, const Feature& b) {
  if (a.flat || b.flat) return 0.0;
  double dot = 0.0;
  for (int i = 0; i < 121; ++i)
    dot += a.descriptor[static_cast<std::size_t>(i)] *
           b.descriptor[static_cast<std::size_t>(i)];
  return dot;
}

TrackState init_track(const RasterImage& gray, const std::array<Pixel, 4>& corners,
                      const TrackingConfig& cfg) {
  RasterImage g = ensure_gray(gray);
  if (g.empty()) fail(ErrorKind::InvalidInput, "cannot initialize on an empty frame");
  if (!(cfg.radius > 0.0) || cfg.max_features < cfg.min_features ||
      cfg.min_features < 1)
    fail(ErrorKind::InvalidInput, "invalid tracker configuration");

  double sign = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Pixel& a = corners[static_cast<std::size_t>(i)];
    const Pixel& b = corners[static_cast<std::size_t>((i + 1) % 4)];
    const Pixel& c = corners[static_cast<std::size_t>((i + 2) % 4)];
    if (!a.finite()) fail(ErrorKind::InvalidInput, "corner positions must be finite");
    double z = (b.u - a.u) * (c.v - b.v) - (b.v - a.v) * (c.u - b.u);
    if (std::fabs(z) < 1e-9)
      fail(ErrorKind::InvalidInput, "corners must form a strictly convex quadrilateral");
    if (sign == 0.0)
      sign = z;
    else if (sign * z < 0.0)
      fail(ErrorKind::InvalidInput, "corners must form a convex quadrilateral");
  }

  TrackState state;
  state.mode = TrackMode::Tracking;
  for (int i = 0; i < 4; ++i) {
    CornerState& c = state.corners[static_cast<std::size_t>(i)];
    c.position = corners[static_cast<std::size_t>(i)];
    c.visible = in_frame(c.position, g.width, g.height);
    reset_corner_filter(c);

    std::vector<Pixel> pts =
        detect_in_disk(g, c.position, cfg.radius, cfg.max_features, {});
    if (static_cast<int>(pts.size()) < cfg.min_features)
      fail(ErrorKind::InsufficientTexture,
           "corner group " + std::to_string(i) + " has only " +
               std::to_string(pts.size()) + " trackable features");
    std::vector<Feature>& group = state.groups[static_cast<std::size_t>(i)];
    group.reserve(pts.size());
    for (const Pixel& p : pts) group.push_back(make_feature(g, p, i));
  }
  return state;
}

void lk_flow(const RasterImage& prev, const RasterImage& next,
             const std::vector<Pixel>& pts, std::vector<Pixel>* moved,
             std::vector<bool>* status) {
  if (moved == nullptr || status == nullptr)
    fail(ErrorKind::InvalidInput, "flow requires output vectors");
  RasterImage a = ensure_gray(prev);
  RasterImage b = ensure_gray(next);
  if (a.empty() || !a.same_dims(b))
    fail(ErrorKind::InvalidInput, "flow frames must share dimensions");

  std::vector<FlowLevel> pa = build_pyramid(a, kLkLevels, true);
  std::vector<FlowLevel> pb = build_pyramid(b, kLkLevels, false);

  moved->assign(pts.size(), Pixel{});
  status->assign(pts.size(), false);

  for (std::size_t pi = 0; pi < pts.size(); ++pi) {
    const Pixel& p = pts[pi];
    if (!window_fits(p, a.width, a.height)) {
      (*moved)[pi] = p;
      continue;
    }
    double gu = 0.0, gv = 0.0;  // accumulated displacement at current level
    bool ok = true;
    for (int level = kLkLevels - 1; level >= 0 && ok; --level) {
      const FlowLevel& la = pa[static_cast<std::size_t>(level)];
      const DImage& jb = pb[static_cast<std::size_t>(level)].image;
      const double scale = 1.0 / static_cast<double>(1 << level);
      const double cu = p.u * scale;
      const double cv = p.v * scale;

      double gxx = 0.0, gxy = 0.0, gyy = 0.0;
      std::array<double, 441> iv{}, ixv{}, iyv{};
      int k = 0;
      for (int dy = -kLkWindow; dy <= kLkWindow; ++dy) {
        for (int dx = -kLkWindow; dx <= kLkWindow; ++dx) {
          double sx = cu + dx;
          double sy = cv + dy;
          double ix = la.grad_x.sample(sx, sy);
          double iy = la.grad_y.sample(sx, sy);
          iv[static_cast<std::size_t>(k)] = la.image.sample(sx, sy);
          ixv[static_cast<std::size_t>(k)] = ix;
          iyv[static_cast<std::size_t>(k)] = iy;
          gxx += ix * ix;
          gxy += ix * iy;
          gyy += iy * iy;
          ++k;
        }
      }
      double tr = gxx + gyy;
      double disc = std::sqrt((gxx - gyy) * (gxx - gyy) + 4.0 * gxy * gxy);
      double lambda_min = 0.5 * (tr - disc) / 441.0;
      double det = gxx * gyy - gxy * gxy;
      if (lambda_min < 0.01 || det <= 1e-12 * std::max(1.0, tr * tr)) {
        ok = false;  // window has no usable texture
        break;
      }
      double inv_xx = gyy / det;
      double inv_xy = -gxy / det;
      double inv_yy = gxx / det;

      double nu_u = 0.0, nu_v = 0.0;
      double step = std::numeric_limits<double>::infinity();
      for (int it = 0; it < kLkIterations; ++it) {
        double bu = 0.0, bv = 0.0;
        k = 0;
        for (int dy = -kLkWindow; dy <= kLkWindow; ++dy) {
          for (int dx = -kLkWindow; dx <= kLkWindow; ++dx) {
            double delta = iv[static_cast<std::size_t>(k)] -
                           jb.sample(cu + dx + gu + nu_u, cv + dy + gv + nu_v);
            bu += ixv[static_cast<std::size_t>(k)] * delta;
            bv += iyv[static_cast<std::size_t>(k)] * delta;
            ++k;
          }
        }
        double su = inv_xx * bu + inv_xy * bv;
        double sv = inv_xy * bu + inv_yy * bv;
        nu_u += su;
        nu_v += sv;
        step = std::sqrt(su * su + sv * sv);
        if (!std::isfinite(step) || std::fabs(nu_u) > 50.0 || std::fabs(nu_v) > 50.0) {
          ok = false;  // diverged
          break;
        }
        if (step < kLkEpsilon) break;
      }
      if (!ok) break;
      if (level == 0 && step >= 0.5) ok = false;  // failed to settle
      gu += nu_u;
      gv += nu_v;
      if (level > 0) {
        gu *= 2.0;
        gv *= 2.0;
      }
    }
    Pixel q{p.u + gu, p.v + gv};
    (*moved)[pi] = q;
    (*status)[pi] = ok && window_fits(q, a.width, a.height);
  }
}

std::array<Vec2, 4> corner_velocity(const std::array<Vec2, 4>& group_velocities,
                                    double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0)
    fail(ErrorKind::InvalidInput, "blend weight must lie in (0, 1]");
  Vec2 mean{0.0, 0.0};
  for (const Vec2& v : group_velocities) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      fail(ErrorKind::InvalidInput, "group velocities must be finite");
    mean = mean + v;
  }
  mean = mean * 0.25;
  std::array<Vec2, 4> out;
  for (int i = 0; i < 4; ++i)
    out[static_cast<std::size_t>(i)] =
        group_velocities[static_cast<std::size_t>(i)] * alpha + mean * (1.0 - alpha);
  return out;
}

CornerState kalman_step(const CornerState& c, const std::optional<Pixel>& measurement,
                        const std::optional<Vec2>& velocity_obs,
                        const TrackingConfig& cfg) {
  if (measurement && !measurement->finite())
    fail(ErrorKind::InvalidInput, "position measurement must be finite");
  if (velocity_obs &&
      (!std::isfinite(velocity_obs->x) || !std::isfinite(velocity_obs->y)))
    fail(ErrorKind::InvalidInput, "velocity observation must be finite");
  if (!(cfg.process_pos_var > 0.0) || !(cfg.process_vel_var > 0.0) ||
      !(cfg.measurement_var > 0.0))
    fail(ErrorKind::InvalidInput, "noise variances must be positive");

  using Mat4 = Eigen::Matrix4d;
  using Vec4 = Eigen::Vector4d;
  Vec4 x;
  for (int i = 0; i < 4; ++i) x(i) = c.kstate[static_cast<std::size_t>(i)];
  Mat4 p;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      p(i, j) = c.kcov[static_cast<std::size_t>(i * 4 + j)];

  Mat4 f = Mat4::Identity();
  f(0, 2) = 1.0;
  f(1, 3) = 1.0;
  Mat4 q = Mat4::Zero();
  q(0, 0) = cfg.process_pos_var;
  q(1, 1) = cfg.process_pos_var;
  q(2, 2) = cfg.process_vel_var;
  q(3, 3) = cfg.process_vel_var;

  x = f * x;
  p = f * p * f.transpose() + q;

  auto update = [&](const Eigen::Matrix<double, 2, 4>& h, const Eigen::Vector2d& z) {
    Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * cfg.measurement_var;
    Eigen::Matrix2d s = h * p * h.transpose() + r;
    Eigen::Matrix<double, 4, 2> k = p * h.transpose() * s.inverse();
    x = x + k * (z - h * x);
    Mat4 ikh = Mat4::Identity() - k * h;
    p = ikh * p * ikh.transpose() + k * r * k.transpose();  // Joseph form
    p = 0.5 * (p + p.transpose());
  };

  if (measurement) {
    Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
    h(0, 0) = 1.0;
    h(1, 1) = 1.0;
    update(h, Eigen::Vector2d(measurement->u, measurement->v));
  }
  if (velocity_obs) {
    Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
    h(0, 2) = 1.0;
    h(1, 3) = 1.0;
    update(h, Eigen::Vector2d(velocity_obs->x, velocity_obs->y));
  }

  CornerState out = c;
  for (int i = 0; i < 4; ++i) out.kstate[static_cast<std::size_t>(i)] = x(i);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      out.kcov[static_cast<std::size_t>(i * 4 + j)] = p(i, j);
  out.position = Pixel{x(0), x(1)};
  return out;
}

bool detect_shot_change(const RasterImage& prev, const RasterImage& next,
                        double threshold) {
  if (prev.empty() || prev.channels != 3 || next.channels != 3 ||
      !prev.same_dims(next))
    fail(ErrorKind::InvalidInput, "shot detection needs matching RGB frames");
  if (!std::isfinite(threshold))
    fail(ErrorKind::InvalidInput, "shot threshold must be finite");
  std::vector<double> ha = color_histogram(prev, 8);
  std::vector<double> hb = color_histogram(next, 8);
  double l1 = 0.0;
  for (std::size_t i = 0; i < ha.size(); ++i) l1 += std::fabs(ha[i] - hb[i]);
  return l1 > threshold;
}

std::optional<std::array<Pixel, 4>> reacquire(const std::vector<Feature>& saved,
                                              const std::array<Pixel, 4>& saved_corners,
                                              const RasterImage& frame_gray,
                                              const TrackingConfig& cfg) {
  if (saved.empty()) return std::nullopt;
  RasterImage g = ensure_gray(frame_gray);
  if (g.empty()) return std::nullopt;

  std::vector<Pixel> detected =
      shi_tomasi(g, cfg.reacquire_features, 0.01, kMinDetectDist);
  if (detected.size() < static_cast<std::size_t>(cfg.min_matches)) return std::nullopt;
  std::vector<Feature> fresh;
  fresh.reserve(detected.size());
  for (const Pixel& p : detected) fresh.push_back(make_feature(g, p, 0));

  const std::size_t ns = saved.size();
  const std::size_t nf = fresh.size();
  std::vector<int> best_for_saved(ns, -1);
  std::vector<double> best_score_saved(ns, -2.0);
  std::vector<int> best_for_fresh(nf, -1);
  std::vector<double> best_score_fresh(nf, -2.0);
  for (std::size_t i = 0; i < ns; ++i) {
    if (saved[i].flat) continue;
    for (std::size_t j = 0; j < nf; ++j) {
      double score = zncc(saved[i], fresh[j]);
      if (score > best_score_saved[i]) {
        best_score_saved[i] = score;
        best_for_saved[i] = static_cast<int>(j);
      }
      if (score > best_score_fresh[j]) {
        best_score_fresh[j] = score;
        best_for_fresh[j] = static_cast<int>(i);
      }
    }
  }

  std::vector<Pixel> src, dst;
  std::vector<int> groups;
  for (std::size_t i = 0; i < ns; ++i) {
    int j = best_for_saved[i];
    if (j < 0 || best_score_saved[i] <= cfg.zncc_threshold) continue;
    if (best_for_fresh[static_cast<std::size_t>(j)] != static_cast<int>(i)) continue;
    src.push_back(saved[i].position);
    dst.push_back(fresh[static_cast<std::size_t>(j)].position);
    groups.push_back(saved[i].group);
  }

  auto spanned = [](const std::vector<int>& gs) {
    bool seen[4] = {false, false, false, false};
    int n = 0;
    for (int g : gs)
      if (g >= 0 && g < 4 && !seen[g]) {
        seen[g] = true;
        ++n;
      }
    return n;
  };
  if (static_cast<int>(src.size()) < cfg.min_matches || spanned(groups) < cfg.min_groups)
    return std::nullopt;

  Homography h;
  try {
    h = homography_dlt(src, dst);
  } catch (const Error&) {
    return std::nullopt;
  }

  std::vector<Pixel> in_src, in_dst;
  std::vector<int> in_groups;
  for (std::size_t i = 0; i < src.size(); ++i) {
    Pixel mapped = h.apply(src[i]);
    if (!mapped.finite()) continue;
    double du = mapped.u - dst[i].u;
    double dv = mapped.v - dst[i].v;
    if (du * du + dv * dv <= cfg.inlier_px * cfg.inlier_px) {
      in_src.push_back(src[i]);
      in_dst.push_back(dst[i]);
      in_groups.push_back(groups[i]);
    }
  }
  if (static_cast<int>(in_src.size()) < cfg.min_matches ||
      spanned(in_groups) < cfg.min_groups)
    return std::nullopt;
  if (in_src.size() < src.size()) {
    try {
      h = homography_dlt(in_src, in_dst);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  std::array<Pixel, 4> corners;
  for (int i = 0; i < 4; ++i) {
    corners[static_cast<std::size_t>(i)] =
        h.apply(saved_corners[static_cast<std::size_t>(i)]);
    if (!corners[static_cast<std::size_t>(i)].finite()) return std::nullopt;
  }
  return corners;
}

TrackEvent track_step(TrackState& state, const RasterImage& prev,
                      const RasterImage& next, const TrackingConfig& cfg) {
  if (state.mode == TrackMode::Lost) return TrackEvent::Lost;
  if (prev.empty() || prev.channels != 3 || next.channels != 3 ||
      !prev.same_dims(next))
    fail(ErrorKind::InvalidInput, "tracking needs matching RGB frames");

  RasterImage gray_next = to_grayscale(next);

  if (state.mode == TrackMode::Suspended) {
    std::optional<std::array<Pixel, 4>> found =
        reacquire(state.saved_features, state.saved_corners, gray_next, cfg);
    if (found) {
      for (int i = 0; i < 4; ++i) {
        CornerState& c = state.corners[static_cast<std::size_t>(i)];
        c.position = (*found)[static_cast<std::size_t>(i)];
        c.visible = in_frame(c.position, next.width, next.height);
        reset_corner_filter(c);
        state.groups[static_cast<std::size_t>(i)].clear();
        if (c.visible) refill_group(state, i, gray_next, cfg);
      }
      state.mode = TrackMode::Tracking;
      state.frames_since_suspend = 0;
      state.saved_features.clear();
      return TrackEvent::Reacquired;
    }
    ++state.frames_since_suspend;
    if (state.frames_since_suspend > cfg.max_suspended) {
      state.mode = TrackMode::Lost;
      return TrackEvent::Lost;
    }
    return TrackEvent::None;
  }

  // TRACKING mode.
  if (detect_shot_change(prev, next, cfg.shot_threshold)) {
    state.saved_features.clear();
    for (int i = 0; i < 4; ++i) {
      const std::vector<Feature>& group = state.groups[static_cast<std::size_t>(i)];
      state.saved_features.insert(state.saved_features.end(), group.begin(),
                                  group.end());
      state.saved_corners[static_cast<std::size_t>(i)] =
          state.corners[static_cast<std::size_t>(i)].position;
    }
    state.mode = TrackMode::Suspended;
    state.frames_since_suspend = 0;
    return TrackEvent::Suspended;
  }

  RasterImage gray_prev = to_grayscale(prev);

  std::vector<Pixel> pts;
  std::vector<std::pair<int, int>> owner;  // (group, index within group)
  for (int gi = 0; gi < 4; ++gi) {
    const std::vector<Feature>& group = state.groups[static_cast<std::size_t>(gi)];
    for (std::size_t fi = 0; fi < group.size(); ++fi) {
      pts.push_back(group[fi].position);
      owner.emplace_back(gi, static_cast<int>(fi));
    }
  }

  std::vector<Pixel> moved;
  std::vector<bool> status;
  if (!pts.empty()) lk_flow(gray_prev, gray_next, pts, &moved, &status);

  std::array<std::vector<Feature>, 4> survivors;
  std::array<std::vector<Pixel>, 4> group_src, group_dst;
  std::array<Vec2, 4> group_vel{};
  std::array<bool, 4> alive{};
  std::vector<Pixel> all_src, all_dst;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (!status[k]) continue;
    int gi = owner[k].first;
    Feature f = state.groups[static_cast<std::size_t>(gi)]
                            [static_cast<std::size_t>(owner[k].second)];
    Vec2 v{moved[k].u - pts[k].u, moved[k].v - pts[k].v};
    f.position = moved[k];
    survivors[static_cast<std::size_t>(gi)].push_back(std::move(f));
    group_src[static_cast<std::size_t>(gi)].push_back(pts[k]);
    group_dst[static_cast<std::size_t>(gi)].push_back(moved[k]);
    group_vel[static_cast<std::size_t>(gi)] =
        group_vel[static_cast<std::size_t>(gi)] + v;
    all_src.push_back(pts[k]);
    all_dst.push_back(moved[k]);
  }
  int alive_count = 0;
  Vec2 alive_sum{0.0, 0.0};
  for (int gi = 0; gi < 4; ++gi) {
    std::size_t n = survivors[static_cast<std::size_t>(gi)].size();
    if (n > 0) {
      group_vel[static_cast<std::size_t>(gi)] =
          group_vel[static_cast<std::size_t>(gi)] * (1.0 / static_cast<double>(n));
      alive[static_cast<std::size_t>(gi)] = true;
      alive_sum = alive_sum + group_vel[static_cast<std::size_t>(gi)];
      ++alive_count;
    }
    state.groups[static_cast<std::size_t>(gi)] =
        std::move(survivors[static_cast<std::size_t>(gi)]);
  }

  if (alive_count == 0) {
    // Nothing tracked this frame: coast every corner on its filter.
    for (int i = 0; i < 4; ++i) {
      CornerState& c = state.corners[static_cast<std::size_t>(i)];
      c = kalman_step(c, std::nullopt, std::nullopt, cfg);
      c.visible = in_frame(c.position, next.width, next.height);
      if (c.visible) refill_group(state, i, gray_next, cfg);
    }
    return TrackEvent::None;
  }

  Vec2 alive_mean = alive_sum * (1.0 / static_cast<double>(alive_count));
  for (int gi = 0; gi < 4; ++gi)
    if (!alive[static_cast<std::size_t>(gi)])
      group_vel[static_cast<std::size_t>(gi)] = alive_mean;

  std::array<Vec2, 4> blended = corner_velocity(group_vel, cfg.alpha);

  bool global_tried = false;
  bool global_ok = false;
  Homography global_h;
  auto global_homography = [&]() -> const Homography* {
    if (!global_tried) {
      global_tried = true;
      if (all_src.size() >= 4) {
        try {
          global_h = homography_dlt(all_src, all_dst);
          global_ok = true;
        } catch (const Error&) {
          global_ok = false;
        }
      }
    }
    return global_ok ? &global_h : nullptr;
  };

  for (int i = 0; i < 4; ++i) {
    CornerState& c = state.corners[static_cast<std::size_t>(i)];
    std::optional<Pixel> flowed;
    if (c.visible) {
      const std::vector<Pixel>& src = group_src[static_cast<std::size_t>(i)];
      const std::vector<Pixel>& dst = group_dst[static_cast<std::size_t>(i)];
      if (src.size() >= 4) {
        try {
          Homography h = homography_dlt(src, dst);
          Pixel mapped = h.apply(c.position);
          if (mapped.finite()) flowed = mapped;
        } catch (const Error&) {
        }
      }
      if (!flowed) {
        if (const Homography* h = global_homography()) {
          Pixel mapped = h->apply(c.position);
          if (mapped.finite()) flowed = mapped;
        }
      }
    }
    c = kalman_step(c, flowed, blended[static_cast<std::size_t>(i)], cfg);
    if (flowed) c.position = *flowed;
    c.visible = in_frame(c.position, next.width, next.height);
  }

  for (int gi = 0; gi < 4; ++gi) {
    if (static_cast<int>(state.groups[static_cast<std::size_t>(gi)].size()) <
            cfg.redetect_below &&
        state.corners[static_cast<std::size_t>(gi)].visible)
      refill_group(state, gi, gray_next, cfg);
  }
  return TrackEvent::None;
}

}  // namespace adpipe
