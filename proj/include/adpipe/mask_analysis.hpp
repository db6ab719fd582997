#pragma once

#include <vector>

#include "adpipe/geometry.hpp"
#include "adpipe/raster.hpp"

namespace adpipe {

struct ComponentInfo {
  int label = 0;  // 1-based, assigned in raster order of each component's first pixel
  long long area = 0;
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;  // inclusive bounding box
};

struct Labeling {
  int width = 0;
  int height = 0;
  std::vector<int> labels;                // 0 = background
  std::vector<ComponentInfo> components;  // descending area, ties by ascending label
};

/// 8-connected foreground labeling.
Labeling connected_components(const BinaryMask& m);

/// Mask holding only the pixels of one labeled component.
BinaryMask extract_component(const Labeling& labeling, int label);

/// Background regions not 4-connected to the image border become foreground.
BinaryMask fill_holes(const BinaryMask& m);

/// Outline length of a single connected component, measured as the perimeter
/// of the convex hull of its pixel squares (pixel (i,j) spans
/// [i,i+1]x[j,j+1]). Exactly 2(w+h) for a solid w x h rectangle and close to
/// the ideal circumference for rounded blobs, so the shape score below stays
/// at 1 for compact regions instead of penalizing rasterization staircases.
double contour_perimeter(const BinaryMask& component);

/// Segmentation quality breakdown; lower is better, 1 is ideal.
struct SqsReport {
  double s_cp = 0.0;  // component score: total area / largest component area
  double s_cl = 0.0;  // completeness score: hole-filled area / area
  double s_sp = 0.0;  // shape score: perimeter / circumference of equal-area disk
  double sqs = 0.0;   // product of the three
  long long a = 0;                // total foreground area
  std::vector<long long> a_i;     // component areas, descending
  long long a_prime = 0;          // hole-filled area
  double p_j = 0.0;               // largest-component perimeter
  long long a_j = 0;              // largest-component area
};

SqsReport sqs(const BinaryMask& m);

struct IndexedMask {
  int frame_index = 0;
  BinaryMask mask;
};

struct SeedChoice {
  int frame_index = 0;
  SqsReport report;
};

/// Among masks whose area is at least half the maximum area, pick the one
/// with the lowest quality score; ties go to the earliest frame index.
SeedChoice select_seed_frame(const std::vector<IndexedMask>& masks);

}  // namespace adpipe
