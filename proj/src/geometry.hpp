#ifndef HOMCTX_GEOMETRY_HPP
#define HOMCTX_GEOMETRY_HPP

#include <filesystem>
#include <vector>

#include "error.hpp"

namespace homctx {

/// Axis-aligned box in center-size form (pixels); w > 0, h > 0.
struct BoundingBox {
  double cx = 0, cy = 0, w = 0, h = 0;

  double x_min() const { return cx - w / 2; }
  double x_max() const { return cx + w / 2; }
  double y_min() const { return cy - h / 2; }
  double y_max() const { return cy + h / 2; }
  static BoundingBox from_corners(double x0, double y0, double x1, double y1) {
    return {(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0};
  }
  bool operator==(const BoundingBox&) const = default;
};

bool valid_box(const BoundingBox& b);

double iou(const BoundingBox& a, const BoundingBox& b);

/// Scale-normalized transform from a hand box to its grasped-object box:
/// nx = dx/wh, ny = dy/hh, nw = wo/wh, nh = ho/hh.
struct OffsetVector {
  double nx = 0, ny = 0, nw = 1, nh = 1;
  bool operator==(const OffsetVector&) const = default;
};

BoundingBox apply_offsets(const BoundingBox& hand, const OffsetVector& off);
OffsetVector compute_offsets(const BoundingBox& hand, const BoundingBox& object);

/// Row-major grid of values in [0,1].
struct ProbabilityMap {
  int width = 0, height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
};

/// Binary 8-bit PGM (P5), probability = value / 255.
ProbabilityMap read_pgm(const std::filesystem::path& path);
void write_pgm(const ProbabilityMap& map, const std::filesystem::path& path);

/// Sliding/scaling grid used to spawn candidate boxes around a reference.
struct CandidateGrid {
  double shift_step = 1.0 / 8.0;  // fraction of the reference size
  std::vector<double> shift_multipliers{-1.0, 0.0, 1.0};
  std::vector<double> scales{0.75, 1.0, 1.25};
};

/// Cross product of shifts and joint scales; |multipliers|^2 * |scales| boxes,
/// ordered x-shift, y-shift, scale. The default grid yields 27 candidates and
/// contains the reference itself.
std::vector<BoundingBox> generate_candidates(const BoundingBox& reference, const CandidateGrid& grid);

/// Thresholds the map, keeps 8-connected blobs within the area-fraction band,
/// fits a second-moment ellipse to each blob, drops the forearm end by
/// truncating the blob along the major axis to 1.5x the minor-axis length
/// (keeping the end away from the touched image border, bottom by default),
/// and returns the bounding box of each truncated blob.
std::vector<BoundingBox> extract_reference_hand_boxes(const ProbabilityMap& map, double threshold,
                                                      double min_area_frac, double max_area_frac);

}  // namespace homctx

#endif
