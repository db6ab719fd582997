#include "adpipe/mask_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace adpipe {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

Labeling connected_components(const BinaryMask& m) {
  Labeling out;
  out.width = m.width;
  out.height = m.height;
  out.labels.assign(m.bits.size(), 0);

  int next_label = 1;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(x, y) || out.labels[static_cast<std::size_t>(y) * m.width + x]) continue;
      const int label = next_label++;
      ComponentInfo info;
      info.label = label;
      info.min_x = info.max_x = x;
      info.min_y = info.max_y = y;
      out.labels[static_cast<std::size_t>(y) * m.width + x] = label;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        ++info.area;
        info.min_x = std::min(info.min_x, cx);
        info.max_x = std::max(info.max_x, cx);
        info.min_y = std::min(info.min_y, cy);
        info.max_y = std::max(info.max_y, cy);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (!m.in_bounds(nx, ny) || !m.at(nx, ny)) continue;
            int& cell = out.labels[static_cast<std::size_t>(ny) * m.width + nx];
            if (cell == 0) {
              cell = label;
              queue.emplace_back(nx, ny);
            }
          }
      }
      out.components.push_back(info);
    }
  }
  std::sort(out.components.begin(), out.components.end(),
            [](const ComponentInfo& a, const ComponentInfo& b) {
              return a.area != b.area ? a.area > b.area : a.label < b.label;
            });
  return out;
}

BinaryMask extract_component(const Labeling& labeling, int label) {
  BinaryMask out = BinaryMask::create(labeling.width, labeling.height);
  for (std::size_t i = 0; i < labeling.labels.size(); ++i)
    out.bits[i] = labeling.labels[i] == label ? 1 : 0;
  return out;
}

BinaryMask fill_holes(const BinaryMask& m) {
  std::vector<std::uint8_t> outside(m.bits.size(), 0);
  std::deque<std::pair<int, int>> queue;
  auto try_seed = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * m.width + x;
    if (!m.bits[i] && !outside[i]) {
      outside[i] = 1;
      queue.emplace_back(x, y);
    }
  };
  for (int x = 0; x < m.width; ++x) {
    try_seed(x, 0);
    try_seed(x, m.height - 1);
  }
  for (int y = 0; y < m.height; ++y) {
    try_seed(0, y);
    try_seed(m.width - 1, y);
  }
  static const int kStep[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    for (const auto& d : kStep) {
      const int nx = x + d[0], ny = y + d[1];
      if (!m.in_bounds(nx, ny)) continue;
      const std::size_t i = static_cast<std::size_t>(ny) * m.width + nx;
      if (!m.bits[i] && !outside[i]) {
        outside[i] = 1;
        queue.emplace_back(nx, ny);
      }
    }
  }
  BinaryMask out = m;
  for (std::size_t i = 0; i < out.bits.size(); ++i)
    if (!out.bits[i] && !outside[i]) out.bits[i] = 1;
  return out;
}

double contour_perimeter(const BinaryMask& component) {
  // Gather, per row, the corner points of the leftmost/rightmost pixel and,
  // per column, of the topmost/bottommost pixel. Every support direction of
  // the pixel-square union attains its maximum on one of these pixels, so
  // their corners are a superset of the hull vertices.
  const int w = component.width, h = component.height;
  std::vector<int> row_min(h, w), row_max(h, -1), col_min(w, h), col_max(w, -1);
  long long area = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!component.at(x, y)) continue;
      ++area;
      row_min[y] = std::min(row_min[y], x);
      row_max[y] = std::max(row_max[y], x);
      col_min[x] = std::min(col_min[x], y);
      col_max[x] = std::max(col_max[x], y);
    }
  if (area == 0) fail(ErrorKind::InvalidInput, "perimeter of an empty mask");

  std::vector<Vec2> corners;
  corners.reserve(static_cast<std::size_t>(8) * (w + h));
  auto add_pixel_corners = [&](int x, int y) {
    corners.push_back({static_cast<double>(x), static_cast<double>(y)});
    corners.push_back({static_cast<double>(x + 1), static_cast<double>(y)});
    corners.push_back({static_cast<double>(x), static_cast<double>(y + 1)});
    corners.push_back({static_cast<double>(x + 1), static_cast<double>(y + 1)});
  };
  for (int y = 0; y < h; ++y) {
    if (row_max[y] < 0) continue;
    add_pixel_corners(row_min[y], y);
    add_pixel_corners(row_max[y], y);
  }
  for (int x = 0; x < w; ++x) {
    if (col_max[x] < 0) continue;
    add_pixel_corners(x, col_min[x]);
    add_pixel_corners(x, col_max[x]);
  }
  return polygon_perimeter(convex_hull(std::move(corners)));
}

SqsReport sqs(const BinaryMask& m) {
  const Labeling labeling = connected_components(m);
  if (labeling.components.empty()) fail(ErrorKind::EmptyMask, "mask has no foreground pixels");

  SqsReport r;
  for (const ComponentInfo& c : labeling.components) {
    r.a += c.area;
    r.a_i.push_back(c.area);
  }
  const ComponentInfo& largest = labeling.components.front();
  r.a_j = largest.area;
  r.a_prime = fill_holes(m).area();

  r.s_cp = static_cast<double>(r.a) / static_cast<double>(largest.area);
  r.s_cl = static_cast<double>(r.a_prime) / static_cast<double>(r.a);
  r.p_j = contour_perimeter(extract_component(labeling, largest.label));
  r.s_sp = r.p_j / (2.0 * std::sqrt(kPi * static_cast<double>(r.a_j)));
  r.sqs = r.s_cp * r.s_cl * r.s_sp;
  return r;
}

SeedChoice select_seed_frame(const std::vector<IndexedMask>& masks) {
  long long max_area = 0;
  for (const IndexedMask& im : masks) max_area = std::max(max_area, im.mask.area());
  if (max_area == 0) fail(ErrorKind::NoCandidate, "no mask contains any foreground");

  bool found = false;
  SeedChoice best;
  for (const IndexedMask& im : masks) {
    const long long area = im.mask.area();
    if (area * 2 < max_area) continue;  // keep only area >= max/2, integer-exact
    SqsReport report = sqs(im.mask);
    if (!found || report.sqs < best.report.sqs ||
        (report.sqs == best.report.sqs && im.frame_index < best.frame_index)) {
      found = true;
      best.frame_index = im.frame_index;
      best.report = report;
    }
  }
  if (!found) fail(ErrorKind::NoCandidate, "no mask passed the area cutoff");
  return best;
}

}  // namespace adpipe
