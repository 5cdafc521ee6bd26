#include "dnc/mask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dnc/error.hpp"

namespace dnc {

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorKind::DimensionMismatch,
                "mask shapes differ: " + std::to_string(a.height()) + "x" +
                    std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                    std::to_string(b.width()));
  }
}

// Accumulates canonical background-first runs.
class RunBuilder {
 public:
  void push(std::uint64_t len, bool fg) {
    if (len == 0) return;
    if (counts_.empty()) {
      if (fg) counts_.push_back(0);
      counts_.push_back(static_cast<std::uint32_t>(len));
      return;
    }
    // Odd indices hold foreground runs.
    const bool last_fg = (counts_.size() % 2) == 0;
    if (last_fg == fg) {
      counts_.back() += static_cast<std::uint32_t>(len);
    } else {
      counts_.push_back(static_cast<std::uint32_t>(len));
    }
  }
  std::vector<std::uint32_t> take() { return std::move(counts_); }

 private:
  std::vector<std::uint32_t> counts_;
};

// Walks two masks in lockstep, calling f(len, a_fg, b_fg) for each maximal
// segment where neither mask changes value.
template <class F>
void for_each_segment(const BinaryMask& a, const BinaryMask& b, F&& f) {
  auto ca = a.counts();
  auto cb = b.counts();
  std::size_t ia = 0, ib = 0;
  std::uint64_t ra = ca.empty() ? 0 : ca[0];
  std::uint64_t rb = cb.empty() ? 0 : cb[0];
  while (ia < ca.size() && ra == 0) ra = ++ia < ca.size() ? ca[ia] : 0;
  while (ib < cb.size() && rb == 0) rb = ++ib < cb.size() ? cb[ib] : 0;
  while (ia < ca.size() && ib < cb.size()) {
    const std::uint64_t len = std::min(ra, rb);
    f(len, (ia % 2) == 1, (ib % 2) == 1);
    ra -= len;
    rb -= len;
    while (ia < ca.size() && ra == 0) ra = ++ia < ca.size() ? ca[ia] : 0;
    while (ib < cb.size() && rb == 0) rb = ++ib < cb.size() ? cb[ib] : 0;
  }
}

}  // namespace

Bitmap::Bitmap(int h, int w, bool fill)
    : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill ? 1 : 0) {}

BinaryMask BinaryMask::from_counts(int height, int width, std::vector<std::uint32_t> counts) {
  if (height <= 0 || width <= 0) {
    throw Error(ErrorKind::InvalidArgument, "mask dimensions must be positive");
  }
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  const auto expected = static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(width);
  if (total != expected) {
    throw Error(ErrorKind::InvalidArgument, "RLE counts sum to " + std::to_string(total) +
                                                ", expected " + std::to_string(expected));
  }
  RunBuilder rb;
  for (std::size_t i = 0; i < counts.size(); ++i) rb.push(counts[i], (i % 2) == 1);
  BinaryMask m;
  m.height_ = height;
  m.width_ = width;
  m.counts_ = rb.take();
  return m;
}

BinaryMask BinaryMask::empty(int height, int width) {
  return from_counts(height, width, {static_cast<std::uint32_t>(height * width)});
}

BinaryMask BinaryMask::full(int height, int width) {
  return from_counts(height, width, {0, static_cast<std::uint32_t>(height * width)});
}

std::int64_t BinaryMask::area() const {
  std::int64_t a = 0;
  for (std::size_t i = 1; i < counts_.size(); i += 2) a += counts_[i];
  return a;
}

Bitmap BinaryMask::decode() const {
  Bitmap out(height_, width_);
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (i % 2 == 1) {
      for (std::uint64_t k = pos; k < pos + counts_[i]; ++k) {
        const int x = static_cast<int>(k / height_);
        const int y = static_cast<int>(k % height_);
        out.set(y, x);
      }
    }
    pos += counts_[i];
  }
  return out;
}

BinaryMask rle_encode(const Bitmap& bitmap) {
  if (bitmap.height <= 0 || bitmap.width <= 0) {
    throw Error(ErrorKind::InvalidArgument, "cannot encode an empty grid");
  }
  RunBuilder rb;
  for (int x = 0; x < bitmap.width; ++x) {
    for (int y = 0; y < bitmap.height; ++y) rb.push(1, bitmap.at(y, x));
  }
  auto counts = rb.take();
  if (counts.empty()) counts.push_back(0);
  return BinaryMask::from_counts(bitmap.height, bitmap.width, std::move(counts));
}

BinaryMask encode_in_box(int height, int width, const BBox& box, const Bitmap& local) {
  if (box.x1 < 0 || box.y1 < 0 || box.x2 > width || box.y2 > height || box.x1 >= box.x2 ||
      box.y1 >= box.y2) {
    throw Error(ErrorKind::OutOfBounds, "box lies outside the image");
  }
  if (local.height != box.height() || local.width != box.width()) {
    throw Error(ErrorKind::DimensionMismatch, "local bitmap does not match box size");
  }
  RunBuilder rb;
  rb.push(static_cast<std::uint64_t>(box.x1) * height, false);
  for (int x = 0; x < local.width; ++x) {
    rb.push(static_cast<std::uint64_t>(box.y1), false);
    for (int y = 0; y < local.height; ++y) rb.push(1, local.at(y, x));
    rb.push(static_cast<std::uint64_t>(height - box.y2), false);
  }
  rb.push(static_cast<std::uint64_t>(width - box.x2) * height, false);
  return BinaryMask::from_counts(height, width, rb.take());
}

std::int64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  std::int64_t inter = 0;
  for_each_segment(a, b, [&](std::uint64_t len, bool fa, bool fb) {
    if (fa && fb) inter += static_cast<std::int64_t>(len);
  });
  return inter;
}

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  RunBuilder rb;
  for_each_segment(a, b, [&](std::uint64_t len, bool fa, bool fb) { rb.push(len, fa && fb); });
  auto counts = rb.take();
  if (counts.empty()) counts.push_back(0);
  return BinaryMask::from_counts(a.height(), a.width(), std::move(counts));
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  RunBuilder rb;
  for_each_segment(a, b, [&](std::uint64_t len, bool fa, bool fb) { rb.push(len, fa || fb); });
  auto counts = rb.take();
  if (counts.empty()) counts.push_back(0);
  return BinaryMask::from_counts(a.height(), a.width(), std::move(counts));
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  const std::int64_t inter = intersection_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BBox bbox_of(const BinaryMask& m) {
  int xmin = std::numeric_limits<int>::max(), ymin = xmin;
  int xmax = -1, ymax = -1;
  const auto counts = m.counts();
  const std::uint64_t h = static_cast<std::uint64_t>(m.height());
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i % 2 == 1 && counts[i] > 0) {
      const std::uint64_t first = pos, last = pos + counts[i] - 1;
      const int x0 = static_cast<int>(first / h), x1 = static_cast<int>(last / h);
      xmin = std::min(xmin, x0);
      xmax = std::max(xmax, x1);
      if (x0 == x1) {
        ymin = std::min(ymin, static_cast<int>(first % h));
        ymax = std::max(ymax, static_cast<int>(last % h));
      } else {
        // A run that wraps a column boundary touches both the top and bottom rows.
        ymin = 0;
        ymax = m.height() - 1;
      }
    }
    pos += counts[i];
  }
  if (xmax < 0) throw Error(ErrorKind::EmptyMask, "bbox_of: mask is empty");
  return BBox{xmin, ymin, xmax + 1, ymax + 1};
}

bool contains_point(const BinaryMask& m, int x, int y) {
  if (x < 0 || y < 0 || x >= m.width() || y >= m.height()) {
    throw Error(ErrorKind::OutOfBounds, "point (" + std::to_string(x) + ", " + std::to_string(y) +
                                            ") outside " + std::to_string(m.width()) + "x" +
                                            std::to_string(m.height()) + " image");
  }
  const std::uint64_t target = static_cast<std::uint64_t>(x) * m.height() + y;
  std::uint64_t pos = 0;
  const auto counts = m.counts();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    pos += counts[i];
    if (target < pos) return i % 2 == 1;
  }
  return false;
}

Point center_point(const BinaryMask& m) {
  const Bitmap bm = m.decode();
  const int h = bm.height, w = bm.width;
  double sx = 0.0, sy = 0.0;
  std::int64_t n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (bm.at(y, x)) {
        sx += x;
        sy += y;
        ++n;
      }
    }
  }
  if (n == 0) throw Error(ErrorKind::EmptyMask, "center_point: mask is empty");

  const int cx = static_cast<int>(std::floor(sx / n + 0.5));
  const int cy = static_cast<int>(std::floor(sy / n + 0.5));
  if (cx >= 0 && cx < w && cy >= 0 && cy < h && bm.at(cy, cx)) return Point{cx, cy};

  // Chessboard distance transform on a one-pixel background border.
  const int ph = h + 2, pw = w + 2;
  const int inf = ph + pw;
  std::vector<int> d(static_cast<std::size_t>(ph) * pw, 0);
  auto at = [&](int y, int x) -> int& { return d[static_cast<std::size_t>(y) * pw + x]; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (bm.at(y, x)) at(y + 1, x + 1) = inf;
  for (int y = 1; y < ph - 1; ++y) {
    for (int x = 1; x < pw - 1; ++x) {
      int& v = at(y, x);
      if (v == 0) continue;
      v = std::min({v, at(y - 1, x - 1) + 1, at(y - 1, x) + 1, at(y - 1, x + 1) + 1,
                    at(y, x - 1) + 1});
    }
  }
  for (int y = ph - 2; y >= 1; --y) {
    for (int x = pw - 2; x >= 1; --x) {
      int& v = at(y, x);
      if (v == 0) continue;
      v = std::min({v, at(y + 1, x + 1) + 1, at(y + 1, x) + 1, at(y + 1, x - 1) + 1,
                    at(y, x + 1) + 1});
    }
  }
  Point best{-1, -1};
  int best_d = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int v = at(y + 1, x + 1);
      if (v > best_d) {
        best_d = v;
        best = Point{x, y};
      }
    }
  }
  return best;
}

void validate(const ScoredMask& m) {
  if (!(m.score >= 0.0 && m.score <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "mask " + std::to_string(m.id) + ": score " + std::to_string(m.score) +
                    " outside [0,1]");
  }
  if (m.level < 0) {
    throw Error(ErrorKind::InvalidArgument, "mask " + std::to_string(m.id) + ": negative level");
  }
  if (m.level == 0 && m.parent_id) {
    throw Error(ErrorKind::InvalidArgument,
                "mask " + std::to_string(m.id) + ": level-0 mask must not have a parent");
  }
  if (m.level > 0 && !m.parent_id) {
    throw Error(ErrorKind::InvalidArgument,
                "mask " + std::to_string(m.id) + ": part mask needs a parent id");
  }
}

}  // namespace dnc
