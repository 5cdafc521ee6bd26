#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dnc {

/// Dense row-major binary image. Used at the edges of the library (encoding,
/// bindings, tests); everything else works on BinaryMask.
struct Bitmap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  Bitmap() = default;
  Bitmap(int h, int w, bool fill = false);

  bool at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int y, int x, bool v = true) {
    pixels[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }

  bool operator==(const Bitmap&) const = default;
};

/// Half-open pixel box, x1 < x2 and y1 < y2.
struct BBox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  int width() const { return x2 - x1; }
  int height() const { return y2 - y1; }
  bool operator==(const BBox&) const = default;
};

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
};

/// Run-length encoded binary mask.
///
/// Runs are taken in column-major order and alternate background/foreground,
/// starting with background. The stored form is canonical: only the first run
/// may be zero and there is no trailing zero run, so two masks are equal iff
/// their pixels are equal.
class BinaryMask {
 public:
  BinaryMask() = default;

  /// Validates that counts sum to h*w and canonicalizes zero-length runs.
  static BinaryMask from_counts(int height, int width, std::vector<std::uint32_t> counts);
  static BinaryMask empty(int height, int width);
  static BinaryMask full(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  std::span<const std::uint32_t> counts() const { return counts_; }

  std::int64_t area() const;
  bool is_empty() const { return area() == 0; }
  Bitmap decode() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint32_t> counts_;
};

BinaryMask rle_encode(const Bitmap& bitmap);

/// Encodes `local` (box.height() x box.width()) placed at `box` inside an
/// otherwise empty height x width image. Cost is proportional to the box area.
BinaryMask encode_in_box(int height, int width, const BBox& box, const Bitmap& local);

std::int64_t intersection_area(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

/// |a & b| / |a | b|, or 0 when both masks are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

BBox bbox_of(const BinaryMask& m);
bool contains_point(const BinaryMask& m, int x, int y);

/// Rounded foreground centroid when it lands on the mask; otherwise the
/// foreground pixel farthest (Chebyshev) from any background pixel, where
/// pixels outside the image count as background. Ties go to the smallest (y, x).
Point center_point(const BinaryMask& m);

/// A mask with its pseudo-label metadata.
struct ScoredMask {
  std::int64_t id = 0;
  BinaryMask mask;
  double score = 0.0;
  /// 0 for divide-stage masks, t >= 1 for hierarchy level S_t.
  int level = 0;
  std::optional<std::int64_t> parent_id;
  std::string provenance;

  bool operator==(const ScoredMask&) const = default;
};

void validate(const ScoredMask& m);

}  // namespace dnc
