#pragma once

#include <cstdint>
#include <vector>

#include "adpipe/geometry.hpp"
#include "adpipe/raster.hpp"

namespace adpipe {

/// Straight segment between two sub-pixel endpoints, canonicalized so that
/// p0 <= p1 lexicographically by (v, u).
struct LineSegment2 {
  Pixel p0;
  Pixel p1;

  double length() const;
  /// Orientation in degrees, in [0, 180).
  double angle_deg() const;
  bool is_vertical(double tol = 1e-6) const;
  /// Slope/intercept of v = a*u + b. Fails with invalid-input for (near-)vertical segments.
  double slope() const;
  double intercept() const;
};

/// Luma conversion: round(0.299 R + 0.587 G + 0.114 B).
RasterImage to_grayscale(const RasterImage& img);

/// 5x5 Gaussian smoothing with clamped borders.
RasterImage gaussian_blur5(const RasterImage& gray, double sigma);

/// Horizontal/vertical derivative images of a grayscale raster (3x3 Sobel,
/// clamped borders). Exposed for reuse by feature detection and flow.
void sobel_gradients(const RasterImage& gray, std::vector<float>& gx, std::vector<float>& gy);

/// Edge detection: Gaussian smoothing (sigma, 5x5), Sobel gradients,
/// four-direction non-maximum suppression, double-threshold hysteresis.
BinaryMask canny(const RasterImage& gray, double low = 50.0, double high = 150.0,
                 double sigma = 1.4);

struct HoughParams {
  double angle_res_deg = 1.0;
  double rho_res = 1.0;
  int min_votes = 50;
  double min_len = 30.0;
  double max_gap = 5.0;
  std::uint64_t seed = 7;
};

/// Probabilistic line-segment extraction from an edge mask. Deterministic for
/// a fixed seed. Result is sorted by descending length, ties broken by
/// (p0.v, p0.u); each segment has p0 <= p1 lexicographically by (v, u).
std::vector<LineSegment2> hough_segments(const BinaryMask& edges, const HoughParams& params);

/// Joint RGB histogram with bins_per_channel^3 bins, L1-normalized.
std::vector<double> color_histogram(const RasterImage& rgb, int bins_per_channel);

/// Clamped bilinear sample at continuous coordinates (pixel centers sit at
/// integer+0.5).
double sample_bilinear(const RasterImage& img, double x, double y, int channel = 0);

/// Paste `asset` into a copy of `target` through homography `h` (asset
/// coordinates -> target coordinates) using inverse mapping and bilinear
/// sampling. Target pixels whose pre-image falls outside the asset rectangle
/// are left untouched.
RasterImage warp_composite(const RasterImage& asset, const Homography& h,
                           const RasterImage& target);

}  // namespace adpipe
