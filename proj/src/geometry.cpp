#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>

namespace homctx {

bool valid_box(const BoundingBox& b) {
  return std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.w) && std::isfinite(b.h) &&
         b.w > 0 && b.h > 0;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (!valid_box(a) || !valid_box(b)) fail(ErrorCode::invalid_argument, "iou: invalid bounding box");
  const double ax0 = a.x_min(), ax1 = a.x_max(), ay0 = a.y_min(), ay1 = a.y_max();
  const double bx0 = b.x_min(), bx1 = b.x_max(), by0 = b.y_min(), by1 = b.y_max();
  const double iw = std::min(ax1, bx1) - std::max(ax0, bx0);
  const double ih = std::min(ay1, by1) - std::max(ay0, by0);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double area_a = (ax1 - ax0) * (ay1 - ay0);
  const double area_b = (bx1 - bx0) * (by1 - by0);
  return inter / (area_a + area_b - inter);
}

BoundingBox apply_offsets(const BoundingBox& hand, const OffsetVector& off) {
  if (!valid_box(hand)) fail(ErrorCode::invalid_argument, "apply_offsets: invalid hand box");
  if (!(off.nw > 0) || !(off.nh > 0)) fail(ErrorCode::invalid_argument, "apply_offsets: nw, nh must be > 0");
  return {hand.cx + off.nx * hand.w, hand.cy + off.ny * hand.h, off.nw * hand.w, off.nh * hand.h};
}

OffsetVector compute_offsets(const BoundingBox& hand, const BoundingBox& object) {
  if (!valid_box(hand) || !valid_box(object))
    fail(ErrorCode::invalid_argument, "compute_offsets: invalid box");
  return {(object.cx - hand.cx) / hand.w, (object.cy - hand.cy) / hand.h, object.w / hand.w,
          object.h / hand.h};
}

std::vector<BoundingBox> generate_candidates(const BoundingBox& reference, const CandidateGrid& grid) {
  if (!valid_box(reference)) fail(ErrorCode::invalid_argument, "generate_candidates: invalid reference");
  if (grid.shift_multipliers.empty() || grid.scales.empty())
    fail(ErrorCode::invalid_argument, "generate_candidates: empty grid");
  for (double s : grid.scales)
    if (!(s > 0)) fail(ErrorCode::invalid_argument, "generate_candidates: scales must be > 0");
  std::vector<BoundingBox> out;
  out.reserve(grid.shift_multipliers.size() * grid.shift_multipliers.size() * grid.scales.size());
  for (double mx : grid.shift_multipliers)
    for (double my : grid.shift_multipliers)
      for (double s : grid.scales)
        out.push_back({reference.cx + mx * grid.shift_step * reference.w,
                       reference.cy + my * grid.shift_step * reference.h, s * reference.w,
                       s * reference.h});
  return out;
}

// ---------------------------------------------------------------------------
// PGM

ProbabilityMap read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open PGM file: " + path.string());
  auto next_token = [&in, &path]() {
    std::string tok;
    while (true) {
      int c = in.get();
      if (c == EOF) fail(ErrorCode::schema, "truncated PGM header: " + path.string());
      if (c == '#') {
        while (c != EOF && c != '\n') c = in.get();
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok += static_cast<char>(c);
    }
  };
  if (next_token() != "P5") fail(ErrorCode::schema, "not a binary PGM (P5): " + path.string());
  ProbabilityMap map;
  try {
    map.width = std::stoi(next_token());
    map.height = std::stoi(next_token());
    if (std::stoi(next_token()) != 255) fail(ErrorCode::schema, "PGM maxval must be 255");
  } catch (const std::logic_error&) {
    fail(ErrorCode::schema, "malformed PGM header: " + path.string());
  }
  if (map.width <= 0 || map.height <= 0) fail(ErrorCode::schema, "PGM dimensions must be positive");
  const size_t n = static_cast<size_t>(map.width) * map.height;
  std::vector<unsigned char> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n) fail(ErrorCode::schema, "truncated PGM data: " + path.string());
  map.values.resize(n);
  for (size_t i = 0; i < n; ++i) map.values[i] = raw[i] / 255.0;
  return map;
}

void write_pgm(const ProbabilityMap& map, const std::filesystem::path& path) {
  if (map.width <= 0 || map.height <= 0 ||
      map.values.size() != static_cast<size_t>(map.width) * map.height)
    fail(ErrorCode::invalid_argument, "write_pgm: inconsistent map dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write PGM file: " + path.string());
  out << "P5\n" << map.width << " " << map.height << "\n255\n";
  std::vector<unsigned char> raw(map.values.size());
  for (size_t i = 0; i < map.values.size(); ++i) {
    const double v = map.values[i];
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::invalid_argument, "write_pgm: value outside [0,1]");
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

// ---------------------------------------------------------------------------
// Blob extraction

namespace {

struct Blob {
  std::vector<int> xs, ys;  // pixel coordinates
  int min_x = 0, max_x = 0, min_y = 0, max_y = 0;
};

std::vector<Blob> connected_components(const std::vector<uint8_t>& mask, int w, int h) {
  std::vector<uint8_t> seen(mask.size(), 0);
  std::vector<Blob> blobs;
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int start = y * w + x;
      if (!mask[start] || seen[start]) continue;
      Blob blob;
      blob.min_x = blob.max_x = x;
      blob.min_y = blob.max_y = y;
      seen[start] = 1;
      stack.assign(1, start);
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int px = p % w, py = p / w;
        blob.xs.push_back(px);
        blob.ys.push_back(py);
        blob.min_x = std::min(blob.min_x, px);
        blob.max_x = std::max(blob.max_x, px);
        blob.min_y = std::min(blob.min_y, py);
        blob.max_y = std::max(blob.max_y, py);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = px + dx, ny = py + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const int q = ny * w + nx;
            if (mask[q] && !seen[q]) {
              seen[q] = 1;
              stack.push_back(q);
            }
          }
        }
      }
      blobs.push_back(std::move(blob));
    }
  }
  return blobs;
}

enum class Border { bottom, left, right, top };

Border pick_border(const Blob& blob, int w, int h) {
  int contact[4] = {0, 0, 0, 0};
  for (size_t i = 0; i < blob.xs.size(); ++i) {
    if (blob.ys[i] == h - 1) ++contact[0];
    if (blob.xs[i] == 0) ++contact[1];
    if (blob.xs[i] == w - 1) ++contact[2];
    if (blob.ys[i] == 0) ++contact[3];
  }
  int best = 0;
  for (int b = 1; b < 4; ++b)
    if (contact[b] > contact[best]) best = b;
  // Nothing touched: the arm is assumed to come from the bottom of the frame.
  if (contact[best] == 0) return Border::bottom;
  return static_cast<Border>(best);
}

double border_distance(Border border, double x, double y, int w, int h) {
  switch (border) {
    case Border::bottom: return (h - 1) - y;
    case Border::left: return x;
    case Border::right: return (w - 1) - x;
    case Border::top: return y;
  }
  return 0;
}

}  // namespace

std::vector<BoundingBox> extract_reference_hand_boxes(const ProbabilityMap& map, double threshold,
                                                      double min_area_frac, double max_area_frac) {
  if (!(threshold > 0.0 && threshold < 1.0))
    fail(ErrorCode::invalid_argument, "extract_reference_hand_boxes: threshold must be in (0,1)");
  if (!(min_area_frac >= 0) || !(max_area_frac >= min_area_frac))
    fail(ErrorCode::invalid_argument, "extract_reference_hand_boxes: bad area fraction range");
  if (map.width <= 0 || map.height <= 0 ||
      map.values.size() != static_cast<size_t>(map.width) * map.height)
    fail(ErrorCode::invalid_argument, "extract_reference_hand_boxes: inconsistent map");

  const int w = map.width, h = map.height;
  std::vector<uint8_t> mask(map.values.size());
  for (size_t i = 0; i < map.values.size(); ++i) {
    const double v = map.values[i];
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::invalid_argument, "probability map value outside [0,1]");
    mask[i] = v >= threshold ? 1 : 0;
  }

  const double image_area = static_cast<double>(w) * h;
  std::vector<BoundingBox> boxes;
  for (const Blob& blob : connected_components(mask, w, h)) {
    const double frac = blob.xs.size() / image_area;
    if (frac < min_area_frac || frac > max_area_frac) continue;

    const size_t n = blob.xs.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
      mx += blob.xs[i];
      my += blob.ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
      const double dx = blob.xs[i] - mx, dy = blob.ys[i] - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
    sxx /= static_cast<double>(n);
    syy /= static_cast<double>(n);
    sxy /= static_cast<double>(n);

    const double mean = (sxx + syy) / 2;
    const double spread = std::sqrt(std::max(0.0, ((sxx - syy) / 2) * ((sxx - syy) / 2) + sxy * sxy));
    const double lam1 = mean + spread, lam2 = std::max(0.0, mean - spread);
    // Uniform filled ellipse: variance along a semi-axis of length p is p^2/4.
    const double minor_len = 4 * std::sqrt(lam2);

    double ux, uy;
    if (std::abs(sxy) > 1e-12) {
      ux = lam1 - syy;
      uy = sxy;
    } else if (sxx >= syy) {
      ux = 1;
      uy = 0;
    } else {
      ux = 0;
      uy = 1;
    }
    const double norm = std::hypot(ux, uy);
    ux /= norm;
    uy /= norm;

    double t_min = 0, t_max = 0;
    for (size_t i = 0; i < n; ++i) {
      const double t = (blob.xs[i] - mx) * ux + (blob.ys[i] - my) * uy;
      if (i == 0) {
        t_min = t_max = t;
      } else {
        t_min = std::min(t_min, t);
        t_max = std::max(t_max, t);
      }
    }

    const double kept_len = 1.5 * minor_len;
    int min_x = blob.min_x, max_x = blob.max_x, min_y = blob.min_y, max_y = blob.max_y;
    if (kept_len < t_max - t_min) {
      const Border border = pick_border(blob, w, h);
      const double d_min = border_distance(border, mx + t_min * ux, my + t_min * uy, w, h);
      const double d_max = border_distance(border, mx + t_max * ux, my + t_max * uy, w, h);
      const bool keep_max_end = d_max > d_min;
      min_x = min_y = std::numeric_limits<int>::max();
      max_x = max_y = std::numeric_limits<int>::min();
      for (size_t i = 0; i < n; ++i) {
        const double t = (blob.xs[i] - mx) * ux + (blob.ys[i] - my) * uy;
        const bool keep = keep_max_end ? t >= t_max - kept_len : t <= t_min + kept_len;
        if (!keep) continue;
        min_x = std::min(min_x, blob.xs[i]);
        max_x = std::max(max_x, blob.xs[i]);
        min_y = std::min(min_y, blob.ys[i]);
        max_y = std::max(max_y, blob.ys[i]);
      }
    }
    boxes.push_back(BoundingBox::from_corners(min_x, min_y, max_x + 1, max_y + 1));
  }
  return boxes;
}

}  // namespace homctx
