#include "adpipe/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "adpipe/error.hpp"

namespace adpipe {

namespace {

namespace fs = std::filesystem;

// Next header token, skipping whitespace and '#' comments that run to EOL.
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == EOF) fail(ErrorKind::ParseError, path + ": truncated header");
  while (ch != EOF && !std::isspace(ch)) {
    tok.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  return tok;
}

int parse_dim(const std::string& tok, const std::string& path, const char* what) {
  std::size_t pos = 0;
  long value = 0;
  try {
    value = std::stol(tok, &pos);
  } catch (const std::exception&) {
    fail(ErrorKind::ParseError, path + ": bad " + what + " '" + tok + "'");
  }
  if (pos != tok.size() || value <= 0 || value > 1 << 20)
    fail(ErrorKind::ParseError, path + ": bad " + what + " '" + tok + "'");
  return static_cast<int>(value);
}

std::uint32_t read_le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void write_le32(std::uint32_t v, unsigned char* p) {
  p[0] = static_cast<unsigned char>(v & 0xff);
  p[1] = static_cast<unsigned char>(v >> 8 & 0xff);
  p[2] = static_cast<unsigned char>(v >> 16 & 0xff);
  p[3] = static_cast<unsigned char>(v >> 24 & 0xff);
}

}  // namespace

RasterImage read_raster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  const std::string magic = next_token(in, path);
  int channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    fail(ErrorKind::ParseError, path + ": unsupported magic '" + magic + "'");
  }
  const int width = parse_dim(next_token(in, path), path, "width");
  const int height = parse_dim(next_token(in, path), path, "height");
  const std::string maxval = next_token(in, path);
  if (maxval != "255")
    fail(ErrorKind::ParseError, path + ": unsupported maxval '" + maxval + "'");
  // next_token consumed the single whitespace byte terminating the header.
  RasterImage img = RasterImage::create(width, height, channels);
  in.read(reinterpret_cast<char*>(img.samples.data()),
          static_cast<std::streamsize>(img.samples.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.samples.size()))
    fail(ErrorKind::Io, path + ": truncated pixel data");
  return img;
}

void write_raster(const RasterImage& img, const std::string& path) {
  if (img.width <= 0 || img.height <= 0)
    fail(ErrorKind::InvalidInput, "write_raster: empty image");
  const char* magic = nullptr;
  if (img.channels == 3) {
    magic = "P6";
  } else if (img.channels == 1) {
    magic = "P5";
  } else {
    fail(ErrorKind::InvalidInput, "write_raster: unsupported channel count");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << magic << "\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.samples.data()),
            static_cast<std::streamsize>(img.samples.size()));
  if (!out) fail(ErrorKind::Io, "short write to '" + path + "'");
}

BinaryMask mask_from_gray(const RasterImage& gray, const std::vector<int>& labels,
                          bool binary) {
  if (gray.channels != 1)
    fail(ErrorKind::InvalidInput, "mask_from_gray: expected a grayscale raster");
  if (!binary && labels.empty())
    fail(ErrorKind::InvalidInput, "mask_from_gray: label list is empty");
  bool lut[256] = {};
  if (binary) {
    for (int v = 1; v < 256; ++v) lut[v] = true;
  } else {
    for (int label : labels) {
      if (label < 0 || label > 255)
        fail(ErrorKind::InvalidInput, "mask_from_gray: label out of range");
      lut[label] = true;
    }
  }
  BinaryMask mask = BinaryMask::create(gray.width, gray.height);
  const std::size_t n = gray.samples.size();
  for (std::size_t i = 0; i < n; ++i) mask.bits[i] = lut[gray.samples[i]] ? 1 : 0;
  return mask;
}

RasterImage mask_to_gray(const BinaryMask& mask) {
  RasterImage gray = RasterImage::create(mask.width, mask.height, 1);
  const std::size_t n = mask.bits.size();
  for (std::size_t i = 0; i < n; ++i) gray.samples[i] = mask.bits[i] ? 255 : 0;
  return gray;
}

DepthMap read_depth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::string magic;
  in >> magic;
  if (magic != "DMAP") fail(ErrorKind::ParseError, path + ": not a depth map");
  std::string wtok, htok;
  in >> wtok >> htok;
  if (!in) fail(ErrorKind::ParseError, path + ": truncated header");
  const int width = parse_dim(wtok, path, "width");
  const int height = parse_dim(htok, path, "height");
  if (in.get() != '\n') fail(ErrorKind::ParseError, path + ": malformed header");
  DepthMap depth = DepthMap::create(width, height);
  const std::size_t count = depth.values.size();
  std::vector<unsigned char> raw(count * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    fail(ErrorKind::Io, path + ": truncated depth data");
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = read_le32(raw.data() + i * 4);
    float value = 0.0f;
    std::memcpy(&value, &bits, sizeof value);
    if (!std::isfinite(value))
      fail(ErrorKind::ParseError, path + ": non-finite depth sample");
    depth.values[i] = static_cast<double>(value);
  }
  return depth;
}

void write_depth(const DepthMap& depth, const std::string& path) {
  if (depth.width <= 0 || depth.height <= 0)
    fail(ErrorKind::InvalidInput, "write_depth: empty depth map");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << "DMAP " << depth.width << " " << depth.height << "\n";
  std::vector<unsigned char> raw(depth.values.size() * 4);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const float value = static_cast<float>(depth.values[i]);
    std::uint32_t bits = 0;
    std::memcpy(&bits, &value, sizeof bits);
    write_le32(bits, raw.data() + i * 4);
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) fail(ErrorKind::Io, "short write to '" + path + "'");
}

std::vector<std::string> list_numbered(const std::string& dir,
                                       const std::string& extension) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::Io, "not a directory: '" + dir + "'");
  struct Entry {
    long long number;
    std::string name;
    std::string path;
  };
  std::vector<Entry> entries;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (!item.is_regular_file()) continue;
    const fs::path& p = item.path();
    if (p.extension().string() != extension) continue;
    const std::string stem = p.stem().string();
    std::size_t digits = stem.size();
    while (digits > 0 && std::isdigit(static_cast<unsigned char>(stem[digits - 1])))
      --digits;
    long long number = -1;
    if (digits < stem.size() && stem.size() - digits <= 18)
      number = std::stoll(stem.substr(digits));
    entries.push_back({number, p.filename().string(), p.string()});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.number != b.number) return a.number < b.number;
    return a.name < b.name;
  });
  std::vector<std::string> paths;
  paths.reserve(entries.size());
  for (const Entry& e : entries) paths.push_back(e.path);
  return paths;
}

}  // namespace adpipe
