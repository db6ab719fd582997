#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "adpipe/error.hpp"
#include "adpipe/io.hpp"
#include "adpipe/raster.hpp"
#include "test_util.hpp"

using namespace adpipe;

namespace {

RasterImage patterned(int w, int h, int channels) {
  RasterImage img = RasterImage::create(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(x, y, c) = static_cast<std::uint8_t>((x * 31 + y * 17 + c * 97) & 0xff);
  return img;
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("color rasters round-trip through ppm byte for byte") {
  TempDir tmp;
  const RasterImage img = patterned(17, 9, 3);
  const std::string path = tmp.sub("img.ppm");
  write_raster(img, path);

  const RasterImage back = read_raster(path);
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.channels == 3);
  CHECK(back.samples == img.samples);

  const std::string bytes = read_file_bytes(path);
  CHECK(bytes.substr(0, 11) == "P6\n17 9\n255");
  const std::string path2 = tmp.sub("img2.ppm");
  write_raster(back, path2);
  CHECK(read_file_bytes(path2) == bytes);
}

TEST_CASE("gray rasters round-trip through pgm") {
  TempDir tmp;
  const RasterImage img = patterned(7, 12, 1);
  const std::string path = tmp.sub("img.pgm");
  write_raster(img, path);
  const RasterImage back = read_raster(path);
  CHECK(back.channels == 1);
  CHECK(back.same_dims(img));
  CHECK(back.samples == img.samples);
  CHECK(read_file_bytes(path).substr(0, 2) == "P5");
}

TEST_CASE("header comments and whitespace are tolerated") {
  TempDir tmp;
  const std::string path = tmp.sub("weird.pgm");
  write_bytes(path, "P5 # magic\n# a comment line\n  3\n#w\n 2\n255\n" +
                        std::string("\x01\x02\x03\x04\x05\x06", 6));
  const RasterImage img = read_raster(path);
  CHECK(img.width == 3);
  CHECK(img.height == 2);
  CHECK(img.at(2, 1) == 6);
}

TEST_CASE("malformed raster files are rejected with typed errors") {
  TempDir tmp;
  CHECK_THROWS_WITH_AS(read_raster(tmp.sub("missing.ppm")),
                       doctest::Contains("cannot open"), Error);

  const std::string bad_magic = tmp.sub("bad_magic.ppm");
  write_bytes(bad_magic, "P4\n2 2\n255\n0000");
  try {
    read_raster(bad_magic);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
  }

  const std::string bad_maxval = tmp.sub("bad_maxval.pgm");
  write_bytes(bad_maxval, "P5\n2 2\n65535\n0000");
  try {
    read_raster(bad_maxval);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
  }

  const std::string truncated = tmp.sub("short.ppm");
  write_bytes(truncated, "P6\n4 4\n255\nxy");
  try {
    read_raster(truncated);
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }

  const std::string bad_dims = tmp.sub("bad_dims.pgm");
  write_bytes(bad_dims, "P5\n-3 2\n255\n000000");
  CHECK_THROWS_AS(read_raster(bad_dims), Error);
}

TEST_CASE("depth maps quantize to 32-bit floats and read back exactly") {
  TempDir tmp;
  DepthMap depth = DepthMap::create(5, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) depth.at(x, y) = (1.0 + x + 5.0 * y) / 3.0;
  const std::string path = tmp.sub("d.dmap");
  write_depth(depth, path);

  const std::string bytes = read_file_bytes(path);
  CHECK(bytes.substr(0, 9) == "DMAP 5 4\n");
  CHECK(bytes.size() == 9 + 5 * 4 * 4);

  const DepthMap back = read_depth(path);
  REQUIRE(back.width == 5);
  REQUIRE(back.height == 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) {
      const double quantized = static_cast<double>(static_cast<float>(depth.at(x, y)));
      CHECK(back.at(x, y) == quantized);
    }

  // Writing the quantized values again reproduces the file bit for bit.
  const std::string path2 = tmp.sub("d2.dmap");
  write_depth(back, path2);
  CHECK(read_file_bytes(path2) == bytes);
}

TEST_CASE("malformed depth files are rejected") {
  TempDir tmp;
  const std::string bad_magic = tmp.sub("bad.dmap");
  write_bytes(bad_magic, "DMPX 2 2\n0123456789abcdef");
  try {
    read_depth(bad_magic);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
  }

  const std::string truncated = tmp.sub("short.dmap");
  write_bytes(truncated, "DMAP 2 2\n01234");
  try {
    read_depth(truncated);
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }

  CHECK_THROWS_AS(read_depth(tmp.sub("missing.dmap")), Error);
}

TEST_CASE("numbered listings sort by numeric stem then name") {
  TempDir tmp;
  const RasterImage tiny = patterned(2, 2, 3);
  for (const char* name : {"frame_9.ppm", "frame_10.ppm", "frame_2.ppm", "cover.ppm"})
    write_raster(tiny, tmp.sub(name));
  write_raster(patterned(2, 2, 1), tmp.sub("notes_3.pgm"));  // other extension
  std::filesystem::create_directory(tmp.path() / "sub");

  const std::vector<std::string> listed = list_numbered(tmp.path().string(), ".ppm");
  REQUIRE(listed.size() == 4);
  CHECK(listed[0].ends_with("cover.ppm"));  // no trailing digits sorts first
  CHECK(listed[1].ends_with("frame_2.ppm"));
  CHECK(listed[2].ends_with("frame_9.ppm"));
  CHECK(listed[3].ends_with("frame_10.ppm"));

  CHECK_THROWS_AS(list_numbered(tmp.sub("nope"), ".ppm"), Error);
}

TEST_CASE("masks convert through binary and label modes") {
  RasterImage gray = RasterImage::create(4, 1, 1);
  gray.at(0, 0) = 0;
  gray.at(1, 0) = 3;
  gray.at(2, 0) = 7;
  gray.at(3, 0) = 7;

  const BinaryMask binary = mask_from_gray(gray, {}, true);
  CHECK(binary.at(0, 0) == 0);
  CHECK(binary.at(1, 0) == 1);
  CHECK(binary.at(2, 0) == 1);
  CHECK(binary.area() == 3);

  const BinaryMask labeled = mask_from_gray(gray, {7}, false);
  CHECK(labeled.at(1, 0) == 0);
  CHECK(labeled.at(2, 0) == 1);
  CHECK(labeled.area() == 2);

  CHECK_THROWS_AS(mask_from_gray(gray, {}, false), Error);
  CHECK_THROWS_AS(mask_from_gray(gray, {300}, false), Error);
  CHECK_THROWS_AS(mask_from_gray(patterned(2, 2, 3), {}, true), Error);

  const RasterImage round = mask_to_gray(labeled);
  CHECK(round.at(2, 0) == 255);
  CHECK(round.at(1, 0) == 0);
  CHECK(mask_from_gray(round, {}, true).bits == labeled.bits);
}
