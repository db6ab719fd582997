#pragma once

#include <string>
#include <vector>

#include "adpipe/raster.hpp"

namespace adpipe {

/// Read a binary PPM (P6, RGB) or PGM (P5, gray) file. Only maxval 255 is
/// supported. Fails with a parse error on malformed headers and an io error
/// on unreadable files or truncated payloads.
RasterImage read_raster(const std::string& path);

/// Write a raster as binary PPM (3 channels) or PGM (1 channel).
void write_raster(const RasterImage& img, const std::string& path);

/// Interpret a grayscale raster as a mask. With `binary` set, any nonzero
/// sample is foreground; otherwise a sample is foreground when its value is
/// listed in `labels`.
BinaryMask mask_from_gray(const RasterImage& gray, const std::vector<int>& labels,
                          bool binary);

/// Mask as a gray raster (0 / 255), suitable for write_raster.
RasterImage mask_to_gray(const BinaryMask& mask);

/// Depth-map file: ASCII header "DMAP <width> <height>\n" followed by
/// width*height little-endian 32-bit floats, row-major. In-memory depth is
/// double precision; values are quantized to float on write.
DepthMap read_depth(const std::string& path);
void write_depth(const DepthMap& depth, const std::string& path);

/// Regular files in `dir` with the given extension (e.g. ".ppm"), sorted by
/// the numeric value of trailing digits in the stem, then by name, so frame
/// sequences order correctly with or without zero padding.
std::vector<std::string> list_numbered(const std::string& dir,
                                       const std::string& extension);

}  // namespace adpipe
