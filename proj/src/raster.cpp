#include "adpipe/raster.hpp"

#include <numeric>

namespace adpipe {

RasterImage RasterImage::create(int w, int h, int c, std::uint8_t fill) {
  if (w <= 0 || h <= 0 || (c != 1 && c != 3)) {
    fail(ErrorKind::InvalidInput, "raster dimensions must be positive with 1 or 3 channels");
  }
  RasterImage img;
  img.width = w;
  img.height = h;
  img.channels = c;
  img.samples.assign(static_cast<std::size_t>(w) * h * c, fill);
  return img;
}

BinaryMask BinaryMask::create(int w, int h, std::uint8_t fill) {
  if (w <= 0 || h <= 0) {
    fail(ErrorKind::InvalidInput, "mask dimensions must be positive");
  }
  BinaryMask m;
  m.width = w;
  m.height = h;
  m.bits.assign(static_cast<std::size_t>(w) * h, fill ? 1 : 0);
  return m;
}

long long BinaryMask::area() const {
  return std::accumulate(bits.begin(), bits.end(), 0LL,
                         [](long long acc, std::uint8_t b) { return acc + (b ? 1 : 0); });
}

DepthMap DepthMap::create(int w, int h, double fill) {
  if (w <= 0 || h <= 0) {
    fail(ErrorKind::InvalidInput, "depth map dimensions must be positive");
  }
  DepthMap d;
  d.width = w;
  d.height = h;
  d.values.assign(static_cast<std::size_t>(w) * h, fill);
  return d;
}

}  // namespace adpipe
