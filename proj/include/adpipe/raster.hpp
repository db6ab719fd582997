#pragma once

#include <cstdint>
#include <vector>

#include "adpipe/error.hpp"

namespace adpipe {

/// Interleaved 8-bit raster, 1 (gray) or 3 (RGB) channels, row-major.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> samples;

  static RasterImage create(int w, int h, int c, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y, int c = 0) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool same_dims(const RasterImage& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool empty() const { return samples.empty(); }
};

/// Per-pixel membership mask, 1 = foreground.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  static BinaryMask create(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  long long area() const;
};

/// Relative depth per pixel, non-negative. Stored at full precision in
/// memory; the on-disk format quantizes to 32-bit floats.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  static DepthMap create(int w, int h, double fill = 0.0);

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

}  // namespace adpipe
