#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "adpipe/mask_analysis.hpp"
#include "test_util.hpp"

using namespace adpipe;

namespace {

constexpr double kPi = 3.14159265358979323846;

BinaryMask mask_with_rect(int w, int h, int x0, int y0, int rw, int rh) {
  BinaryMask m = BinaryMask::create(w, h);
  for (int y = y0; y < y0 + rh; ++y)
    for (int x = x0; x < x0 + rw; ++x) m.at(x, y) = 1;
  return m;
}

void add_rect(BinaryMask& m, int x0, int y0, int rw, int rh, std::uint8_t value = 1) {
  for (int y = y0; y < y0 + rh; ++y)
    for (int x = x0; x < x0 + rw; ++x) m.at(x, y) = value;
}

BinaryMask disk_mask(int w, int h, double cx, double cy, double r) {
  BinaryMask m = BinaryMask::create(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= r * r) m.at(x, y) = 1;
    }
  return m;
}

// Connected blob grown by a seeded random walk.
BinaryMask walk_blob(int w, int h, std::uint64_t seed, int steps) {
  BinaryMask m = BinaryMask::create(w, h);
  std::mt19937_64 rng(seed);
  int x = w / 2, y = h / 2;
  m.at(x, y) = 1;
  for (int i = 0; i < steps; ++i) {
    switch (below_draw(rng, 4)) {
      case 0: x = std::min(x + 1, w - 2); break;
      case 1: x = std::max(x - 1, 1); break;
      case 2: y = std::min(y + 1, h - 2); break;
      default: y = std::max(y - 1, 1); break;
    }
    m.at(x, y) = 1;
  }
  return m;
}

BinaryMask translate_mask(const BinaryMask& m, int dx, int dy, int w, int h) {
  BinaryMask out = BinaryMask::create(w, h);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) out.at(x + dx, y + dy) = 1;
  return out;
}

BinaryMask upsample2(const BinaryMask& m) {
  BinaryMask out = BinaryMask::create(m.width * 2, m.height * 2);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        out.at(2 * x, 2 * y) = 1;
        out.at(2 * x + 1, 2 * y) = 1;
        out.at(2 * x, 2 * y + 1) = 1;
        out.at(2 * x + 1, 2 * y + 1) = 1;
      }
  return out;
}

}  // namespace

TEST_CASE("component labeling finds nothing in an empty mask") {
  BinaryMask m = BinaryMask::create(32, 32);
  Labeling l = connected_components(m);
  CHECK(l.components.empty());
  for (int v : l.labels) CHECK(v == 0);
}

TEST_CASE("component labeling counts disjoint rectangles by area") {
  BinaryMask m = BinaryMask::create(100, 60);
  add_rect(m, 50, 30, 10, 10);  // area 100, second in raster order
  add_rect(m, 5, 5, 30, 10);    // area 300, first in raster order
  Labeling l = connected_components(m);
  REQUIRE(l.components.size() == 2);
  CHECK(l.components[0].area == 300);
  CHECK(l.components[1].area == 100);
  CHECK(l.components[0].label == 1);  // first pixel in raster order gets label 1
  CHECK(l.components[1].label == 2);
  CHECK(l.components[0].min_x == 5);
  CHECK(l.components[0].max_x == 34);
  CHECK(l.components[0].min_y == 5);
  CHECK(l.components[0].max_y == 14);
}

TEST_CASE("diagonally touching pixels form a single component") {
  BinaryMask m = BinaryMask::create(8, 8);
  m.at(2, 2) = 1;
  m.at(3, 3) = 1;
  m.at(4, 4) = 1;
  Labeling l = connected_components(m);
  REQUIRE(l.components.size() == 1);
  CHECK(l.components[0].area == 3);
}

TEST_CASE("component areas add up to the mask area") {
  std::mt19937_64 rng(31);
  BinaryMask m = BinaryMask::create(64, 48);
  for (auto& b : m.bits) b = below_draw(rng, 4) == 0 ? 1 : 0;
  Labeling l = connected_components(m);
  long long total = 0;
  for (const auto& c : l.components) total += c.area;
  CHECK(total == m.area());
  for (std::size_t i = 1; i < l.components.size(); ++i)
    CHECK(l.components[i].area <= l.components[i - 1].area);
}

TEST_CASE("hole filling leaves solid regions alone") {
  BinaryMask m = mask_with_rect(50, 50, 10, 10, 20, 20);
  BinaryMask filled = fill_holes(m);
  CHECK(filled.bits == m.bits);
}

TEST_CASE("hole filling closes an interior hole") {
  BinaryMask m = mask_with_rect(50, 50, 10, 10, 20, 20);
  add_rect(m, 18, 18, 4, 4, 0);
  CHECK(m.area() == 384);
  BinaryMask filled = fill_holes(m);
  CHECK(filled.area() == 400);
  BinaryMask solid = mask_with_rect(50, 50, 10, 10, 20, 20);
  CHECK(filled.bits == solid.bits);
}

TEST_CASE("a concavity open to the border is not a hole") {
  // C shape: solid square with a corridor cut from the right edge to centre.
  BinaryMask m = mask_with_rect(40, 40, 5, 5, 20, 20);
  add_rect(m, 12, 13, 13, 4, 0);  // corridor reaching x=24 (the region's edge)
  // Extend corridor through the region boundary out to the mask border.
  add_rect(m, 25, 13, 15, 4, 0);  // already 0, keeps intent explicit
  BinaryMask filled = fill_holes(m);
  CHECK(filled.bits == m.bits);
}

TEST_CASE("hole filling is idempotent and never shrinks") {
  std::mt19937_64 rng(77);
  BinaryMask m = BinaryMask::create(48, 40);
  for (auto& b : m.bits) b = below_draw(rng, 3) == 0 ? 1 : 0;
  BinaryMask once = fill_holes(m);
  BinaryMask twice = fill_holes(once);
  CHECK(once.bits == twice.bits);
  CHECK(once.area() >= m.area());
  for (std::size_t i = 0; i < m.bits.size(); ++i)
    if (m.bits[i]) CHECK(once.bits[i] == 1);
}

TEST_CASE("outline length of canonical shapes") {
  BinaryMask single = BinaryMask::create(5, 5);
  single.at(2, 2) = 1;
  CHECK(contour_perimeter(single) == doctest::Approx(4.0));

  BinaryMask square = mask_with_rect(40, 40, 7, 9, 20, 20);
  CHECK(contour_perimeter(square) == doctest::Approx(80.0));

  BinaryMask line = mask_with_rect(20, 5, 3, 2, 10, 1);
  CHECK(contour_perimeter(line) == doctest::Approx(22.0));

  // Plus sign: octagonal outline, four unit edges and four diagonal edges.
  BinaryMask plus = BinaryMask::create(10, 10);
  plus.at(4, 3) = 1;
  plus.at(3, 4) = 1;
  plus.at(4, 4) = 1;
  plus.at(5, 4) = 1;
  plus.at(4, 5) = 1;
  CHECK(contour_perimeter(plus) == doctest::Approx(4.0 + 4.0 * std::sqrt(2.0)));

  BinaryMask empty = BinaryMask::create(5, 5);
  CHECK_THROWS_AS(contour_perimeter(empty), Error);
}

TEST_CASE("quality score of a solid square") {
  BinaryMask m = mask_with_rect(100, 100, 40, 40, 20, 20);
  SqsReport r = sqs(m);
  CHECK(r.s_cp == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.s_cl == doctest::Approx(1.0).epsilon(1e-12));
  const double expected_sp = 80.0 / (2.0 * std::sqrt(kPi * 400.0));
  CHECK(r.s_sp == doctest::Approx(expected_sp).epsilon(1e-12));
  CHECK(r.sqs == doctest::Approx(expected_sp).epsilon(1e-12));
  CHECK(std::abs(r.sqs - 1.1283791670955126) < 1e-9);
  CHECK(r.a == 400);
  CHECK(r.a_j == 400);
  CHECK(r.p_j == doctest::Approx(80.0));
}

TEST_CASE("component score counts mass outside the largest component") {
  BinaryMask m = BinaryMask::create(100, 60);
  add_rect(m, 5, 5, 30, 10);    // 300
  add_rect(m, 50, 30, 10, 10);  // 100
  SqsReport r = sqs(m);
  CHECK(r.s_cp == doctest::Approx(400.0 / 300.0).epsilon(1e-12));
  CHECK(r.a == 400);
  REQUIRE(r.a_i.size() == 2);
  CHECK(r.a_i[0] == 300);
  CHECK(r.a_i[1] == 100);
  CHECK(r.sqs == doctest::Approx(r.s_cp * r.s_cl * r.s_sp).epsilon(1e-12));
}

TEST_CASE("completeness score measures holes") {
  BinaryMask m = mask_with_rect(50, 50, 10, 10, 20, 20);
  add_rect(m, 18, 18, 4, 4, 0);
  SqsReport r = sqs(m);
  CHECK(r.s_cl == doctest::Approx(400.0 / 384.0).epsilon(1e-12));
  CHECK(r.a_prime == 400);
}

TEST_CASE("a rasterized disk scores close to the ideal minimum") {
  for (double radius : {30.0, 40.0}) {
    BinaryMask m = disk_mask(120, 120, 60.0, 60.0, radius);
    SqsReport r = sqs(m);
    CHECK(r.sqs >= 1.0);
    CHECK(r.sqs <= 1.2);
  }
}

TEST_CASE("scores ignore translation") {
  BinaryMask blob = walk_blob(40, 40, 99, 240);
  BinaryMask canvas = translate_mask(blob, 0, 0, 80, 80);
  BinaryMask moved = translate_mask(blob, 23, 17, 80, 80);
  SqsReport r0 = sqs(canvas);
  SqsReport r1 = sqs(moved);
  CHECK(r0.s_cp == r1.s_cp);
  CHECK(r0.s_cl == r1.s_cl);
  CHECK(r0.s_sp == r1.s_sp);
  CHECK(r0.sqs == r1.sqs);
  CHECK(r0.p_j == r1.p_j);
}

TEST_CASE("shape score is stable under 2x upsampling") {
  for (std::uint64_t seed : {5ull, 21ull, 104ull}) {
    BinaryMask blob = walk_blob(48, 48, seed, 300);
    SqsReport base = sqs(blob);
    SqsReport big = sqs(upsample2(blob));
    CHECK(std::abs(big.s_sp - base.s_sp) < 1e-9);
    CHECK(big.p_j == doctest::Approx(2.0 * base.p_j).epsilon(1e-12));
  }
}

TEST_CASE("shape score never drops below 1 on connected blobs") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    BinaryMask blob = walk_blob(56, 56, seed, 400);
    SqsReport r = sqs(blob);
    CHECK(r.s_sp >= 1.0 - 1e-12);
    CHECK(r.s_cp >= 1.0);
    CHECK(r.s_cl >= 1.0);
    long long total = 0;
    for (long long a : r.a_i) total += a;
    CHECK(total == r.a);
    CHECK(r.sqs == doctest::Approx(r.s_cp * r.s_cl * r.s_sp).epsilon(1e-12));
  }
}

TEST_CASE("empty mask cannot be scored") {
  BinaryMask empty = BinaryMask::create(10, 10);
  CHECK_THROWS_AS(sqs(empty), Error);
  try {
    sqs(empty);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyMask);
  }
}

TEST_CASE("seed selection disregards small frames even with the best score") {
  // Frame 0: two 25x20 rectangles, area 1000, fragmented (worst score).
  BinaryMask f0 = BinaryMask::create(100, 100);
  add_rect(f0, 5, 5, 25, 20);
  add_rect(f0, 60, 60, 25, 20);
  // Frame 1: clean 20x20 square, area 400 — the lowest score, but below half
  // of the maximum area, so it must be disregarded.
  BinaryMask f1 = mask_with_rect(100, 100, 40, 40, 20, 20);
  // Frame 2: 30x30 square with a small hole, area 884 — the winner.
  BinaryMask f2 = mask_with_rect(100, 100, 30, 30, 30, 30);
  add_rect(f2, 42, 42, 4, 4, 0);

  REQUIRE(sqs(f1).sqs < sqs(f2).sqs);  // fixture sanity: the disregarded one scores best
  REQUIRE(sqs(f2).sqs < sqs(f0).sqs);

  std::vector<IndexedMask> frames;
  frames.push_back({0, f0});
  frames.push_back({1, f1});
  frames.push_back({2, f2});
  SeedChoice pick = select_seed_frame(frames);
  CHECK(pick.frame_index == 2);
  CHECK(pick.report.s_cl == doctest::Approx(900.0 / 884.0).epsilon(1e-12));

  // Input order must not matter.
  std::vector<IndexedMask> shuffled;
  shuffled.push_back({2, f2});
  shuffled.push_back({0, f0});
  shuffled.push_back({1, f1});
  CHECK(select_seed_frame(shuffled).frame_index == 2);
}

TEST_CASE("seed selection trivia: single frame, ties, and empty input") {
  BinaryMask square = mask_with_rect(50, 50, 10, 10, 12, 12);
  std::vector<IndexedMask> one;
  one.push_back({7, square});
  CHECK(select_seed_frame(one).frame_index == 7);

  std::vector<IndexedMask> tie;
  tie.push_back({9, square});
  tie.push_back({4, square});
  CHECK(select_seed_frame(tie).frame_index == 4);

  std::vector<IndexedMask> empties;
  empties.push_back({0, BinaryMask::create(10, 10)});
  empties.push_back({1, BinaryMask::create(10, 10)});
  CHECK_THROWS_AS(select_seed_frame(empties), Error);
  try {
    select_seed_frame(empties);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoCandidate);
  }
}
