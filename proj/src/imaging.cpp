#include "adpipe/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <random>

namespace adpipe {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint8_t round_to_u8(double v) {
  const long r = std::lround(v);
  return static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
}

int clamp_index(int v, int lo, int hi) { return std::clamp(v, lo, hi); }

}  // namespace

double LineSegment2::length() const {
  return std::hypot(p1.u - p0.u, p1.v - p0.v);
}

double LineSegment2::angle_deg() const {
  double a = std::atan2(p1.v - p0.v, p1.u - p0.u) * 180.0 / kPi;
  if (a < 0.0) a += 180.0;
  if (a >= 180.0) a -= 180.0;
  return a;
}

bool LineSegment2::is_vertical(double tol) const {
  return std::abs(p1.u - p0.u) <= tol * std::max(1.0, length());
}

double LineSegment2::slope() const {
  if (is_vertical()) fail(ErrorKind::InvalidInput, "vertical segment has no finite slope");
  return (p1.v - p0.v) / (p1.u - p0.u);
}

double LineSegment2::intercept() const { return p0.v - slope() * p0.u; }

RasterImage to_grayscale(const RasterImage& img) {
  if (img.channels != 3) fail(ErrorKind::InvalidInput, "grayscale conversion expects 3 channels");
  RasterImage out = RasterImage::create(img.width, img.height, 1);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.samples[i * 3 + 0];
    const double g = img.samples[i * 3 + 1];
    const double b = img.samples[i * 3 + 2];
    out.samples[i] = round_to_u8(0.299 * r + 0.587 * g + 0.114 * b);
  }
  return out;
}

RasterImage gaussian_blur5(const RasterImage& gray, double sigma) {
  if (gray.channels != 1) fail(ErrorKind::InvalidInput, "smoothing expects a grayscale image");
  if (!(sigma > 0.0)) fail(ErrorKind::InvalidInput, "sigma must be positive");
  double kernel[5];
  double sum = 0.0;
  for (int k = -2; k <= 2; ++k) {
    kernel[k + 2] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    sum += kernel[k + 2];
  }
  for (double& k : kernel) k /= sum;

  const int w = gray.width, h = gray.height;
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  // Horizontal pass, clamped borders.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k) acc += kernel[k + 2] * gray.at(clamp_index(x + k, 0, w - 1), y);
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  RasterImage out = RasterImage::create(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -2; k <= 2; ++k)
        acc += kernel[k + 2] * tmp[static_cast<std::size_t>(clamp_index(y + k, 0, h - 1)) * w + x];
      out.at(x, y) = round_to_u8(acc);
    }
  }
  return out;
}

void sobel_gradients(const RasterImage& gray, std::vector<float>& gx, std::vector<float>& gy) {
  if (gray.channels != 1) fail(ErrorKind::InvalidInput, "gradients expect a grayscale image");
  const int w = gray.width, h = gray.height;
  gx.assign(static_cast<std::size_t>(w) * h, 0.0f);
  gy.assign(static_cast<std::size_t>(w) * h, 0.0f);
  auto px = [&](int x, int y) -> int { return gray.at(clamp_index(x, 0, w - 1), clamp_index(y, 0, h - 1)); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int a = px(x - 1, y - 1), b = px(x, y - 1), c = px(x + 1, y - 1);
      const int d = px(x - 1, y), f = px(x + 1, y);
      const int g = px(x - 1, y + 1), i = px(x, y + 1), j = px(x + 1, y + 1);
      gx[static_cast<std::size_t>(y) * w + x] = static_cast<float>((c + 2 * f + j) - (a + 2 * d + g));
      gy[static_cast<std::size_t>(y) * w + x] = static_cast<float>((g + 2 * i + j) - (a + 2 * b + c));
    }
  }
}

BinaryMask canny(const RasterImage& gray, double low, double high, double sigma) {
  if (gray.channels != 1) fail(ErrorKind::InvalidInput, "edge detection expects a grayscale image");
  if (!(low <= high)) fail(ErrorKind::InvalidInput, "low threshold must not exceed high threshold");
  const RasterImage smooth = gaussian_blur5(gray, sigma);
  std::vector<float> gx, gy;
  sobel_gradients(smooth, gx, gy);

  const int w = gray.width, h = gray.height;
  std::vector<double> mag(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < mag.size(); ++i)
    mag[i] = std::sqrt(static_cast<double>(gx[i]) * gx[i] + static_cast<double>(gy[i]) * gy[i]);

  // Non-maximum suppression along the quantized gradient axis. On a two-pixel
  // plateau the strict test against the "before" neighbour keeps exactly one.
  auto mag_at = [&](int x, int y) -> double {
    if (x < 0 || x >= w || y < 0 || y >= h) return 0.0;
    return mag[static_cast<std::size_t>(y) * w + x];
  };
  std::vector<std::uint8_t> kind(static_cast<std::size_t>(w) * h, 0);  // 0 none, 1 weak, 2 strong
  static const int kAxis[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (mag[i] < low) continue;
      double ang = std::atan2(static_cast<double>(gy[i]), static_cast<double>(gx[i]));
      if (ang < 0.0) ang += kPi;
      int sector = static_cast<int>(std::floor((ang + kPi / 8.0) / (kPi / 4.0))) % 4;
      const int dx = kAxis[sector][0], dy = kAxis[sector][1];
      const double before = mag_at(x - dx, y - dy);
      const double after = mag_at(x + dx, y + dy);
      if (mag[i] > before && mag[i] >= after) kind[i] = mag[i] >= high ? 2 : 1;
    }
  }

  // Hysteresis: weak pixels survive only if 8-connected to a strong pixel.
  BinaryMask out = BinaryMask::create(w, h);
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (kind[static_cast<std::size_t>(y) * w + x] == 2) {
        out.at(x, y) = 1;
        queue.emplace_back(x, y);
      }
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        if (kind[static_cast<std::size_t>(ny) * w + nx] != 0 && !out.at(nx, ny)) {
          out.at(nx, ny) = 1;
          queue.emplace_back(nx, ny);
        }
      }
  }
  return out;
}

std::vector<LineSegment2> hough_segments(const BinaryMask& edges, const HoughParams& params) {
  if (!(params.angle_res_deg > 0.0) || !(params.rho_res > 0.0) || params.min_votes < 1 ||
      !(params.min_len > 0.0) || params.max_gap < 0.0) {
    fail(ErrorKind::InvalidInput, "line extraction parameters out of range");
  }
  const int w = edges.width, h = edges.height;
  const int numangle = std::max(1, static_cast<int>(std::lround(180.0 / params.angle_res_deg)));
  const double irho = 1.0 / params.rho_res;
  const int numrho = static_cast<int>(std::lround(((w + h) * 2 + 1) / params.rho_res));
  const int rho_shift = (numrho - 1) / 2;

  std::vector<double> tcos(numangle), tsin(numangle);
  for (int n = 0; n < numangle; ++n) {
    const double ang = n * params.angle_res_deg * kPi / 180.0;
    tcos[n] = std::cos(ang) * irho;
    tsin[n] = std::sin(ang) * irho;
  }

  std::vector<std::uint8_t> mask = edges.bits;
  std::vector<std::pair<int, int>> points;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (edges.at(x, y)) points.emplace_back(x, y);

  std::vector<int> accum(static_cast<std::size_t>(numangle) * numrho, 0);
  std::mt19937_64 rng(params.seed);
  std::vector<LineSegment2> out;

  auto rho_bin = [&](int x, int y, int n) {
    const int r = static_cast<int>(std::lround(x * tcos[n] + y * tsin[n])) + rho_shift;
    return r;
  };

  while (!points.empty()) {
    const std::size_t idx = static_cast<std::size_t>(rng() % points.size());
    const auto [x0, y0] = points[idx];
    points[idx] = points.back();
    points.pop_back();
    if (!mask[static_cast<std::size_t>(y0) * w + x0]) continue;

    int max_val = params.min_votes - 1, max_n = -1;
    for (int n = 0; n < numangle; ++n) {
      const int r = rho_bin(x0, y0, n);
      if (r < 0 || r >= numrho) continue;
      const int val = ++accum[static_cast<std::size_t>(n) * numrho + r];
      if (val > max_val) {
        max_val = val;
        max_n = n;
      }
    }
    if (max_n < 0) continue;

    // Walk the supporting line in both directions, tolerating up to max_gap
    // consecutive misses, and remember the farthest hit each way.
    const double ang = max_n * params.angle_res_deg * kPi / 180.0;
    const double dirx = -std::sin(ang), diry = std::cos(ang);
    double sx, sy;
    if (std::abs(dirx) > std::abs(diry)) {
      sx = dirx > 0 ? 1.0 : -1.0;
      sy = diry / std::abs(dirx);
    } else {
      sy = diry > 0 ? 1.0 : -1.0;
      sx = dirx / std::abs(diry);
    }
    std::pair<int, int> line_end[2] = {{x0, y0}, {x0, y0}};
    for (int k = 0; k < 2; ++k) {
      const double ddx = k == 0 ? sx : -sx;
      const double ddy = k == 0 ? sy : -sy;
      double cx = x0, cy = y0;
      int gap = 0;
      for (;;) {
        const int ix = static_cast<int>(std::lround(cx));
        const int iy = static_cast<int>(std::lround(cy));
        if (ix < 0 || ix >= w || iy < 0 || iy >= h) break;
        if (mask[static_cast<std::size_t>(iy) * w + ix]) {
          gap = 0;
          line_end[k] = {ix, iy};
        } else if (++gap > params.max_gap) {
          break;
        }
        cx += ddx;
        cy += ddy;
      }
    }
    const double seg_len = std::hypot(static_cast<double>(line_end[1].first - line_end[0].first),
                                      static_cast<double>(line_end[1].second - line_end[0].second));
    const bool good_line = seg_len >= params.min_len;

    // Second pass: consume the walked pixels; un-vote them for accepted lines.
    for (int k = 0; k < 2; ++k) {
      const double ddx = k == 0 ? sx : -sx;
      const double ddy = k == 0 ? sy : -sy;
      double cx = x0, cy = y0;
      for (;;) {
        const int ix = static_cast<int>(std::lround(cx));
        const int iy = static_cast<int>(std::lround(cy));
        if (ix < 0 || ix >= w || iy < 0 || iy >= h) break;
        std::uint8_t& cell = mask[static_cast<std::size_t>(iy) * w + ix];
        if (cell) {
          if (good_line) {
            for (int n = 0; n < numangle; ++n) {
              const int r = rho_bin(ix, iy, n);
              if (r >= 0 && r < numrho) --accum[static_cast<std::size_t>(n) * numrho + r];
            }
          }
          cell = 0;
        }
        if (ix == line_end[k].first && iy == line_end[k].second) break;
        cx += ddx;
        cy += ddy;
      }
    }

    if (good_line) {
      Pixel a{line_end[0].first + 0.5, line_end[0].second + 0.5};
      Pixel b{line_end[1].first + 0.5, line_end[1].second + 0.5};
      if (b.v < a.v || (b.v == a.v && b.u < a.u)) std::swap(a, b);
      out.push_back({a, b});
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const LineSegment2& a, const LineSegment2& b) {
    const double la = a.length(), lb = b.length();
    if (la != lb) return la > lb;
    if (a.p0.v != b.p0.v) return a.p0.v < b.p0.v;
    return a.p0.u < b.p0.u;
  });
  return out;
}

std::vector<double> color_histogram(const RasterImage& rgb, int bins_per_channel) {
  if (rgb.channels != 3) fail(ErrorKind::InvalidInput, "histogram expects an RGB image");
  if (bins_per_channel < 2) fail(ErrorKind::InvalidInput, "need at least 2 bins per channel");
  const int b = bins_per_channel;
  std::vector<double> hist(static_cast<std::size_t>(b) * b * b, 0.0);
  const std::size_t n = static_cast<std::size_t>(rgb.width) * rgb.height;
  const double mass = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int br = rgb.samples[i * 3 + 0] * b / 256;
    const int bg = rgb.samples[i * 3 + 1] * b / 256;
    const int bb = rgb.samples[i * 3 + 2] * b / 256;
    hist[(static_cast<std::size_t>(br) * b + bg) * b + bb] += mass;
  }
  return hist;
}

double sample_bilinear(const RasterImage& img, double x, double y, int channel) {
  if (channel < 0 || channel >= img.channels) fail(ErrorKind::InvalidInput, "channel out of range");
  double gx = std::clamp(x - 0.5, 0.0, static_cast<double>(img.width - 1));
  double gy = std::clamp(y - 0.5, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(std::floor(gx));
  const int y0 = static_cast<int>(std::floor(gy));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = gx - x0, fy = gy - y0;
  const double v00 = img.at(x0, y0, channel), v10 = img.at(x1, y0, channel);
  const double v01 = img.at(x0, y1, channel), v11 = img.at(x1, y1, channel);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

RasterImage warp_composite(const RasterImage& asset, const Homography& h,
                           const RasterImage& target) {
  if (asset.channels != target.channels)
    fail(ErrorKind::InvalidInput, "asset and target must have matching channel counts");
  const Homography hin = h.inverse();
  RasterImage out = target;
  const double aw = asset.width, ah = asset.height;
  for (int y = 0; y < target.height; ++y) {
    for (int x = 0; x < target.width; ++x) {
      const double tu = x + 0.5, tv = y + 0.5;
      const double den = hin.m[6] * tu + hin.m[7] * tv + hin.m[8];
      if (std::abs(den) < 1e-12) continue;
      const double su = (hin.m[0] * tu + hin.m[1] * tv + hin.m[2]) / den;
      const double sv = (hin.m[3] * tu + hin.m[4] * tv + hin.m[5]) / den;
      if (su < 0.0 || su > aw || sv < 0.0 || sv > ah) continue;
      for (int c = 0; c < target.channels; ++c)
        out.at(x, y, c) = round_to_u8(sample_bilinear(asset, su, sv, c));
    }
  }
  return out;
}

}  // namespace adpipe
