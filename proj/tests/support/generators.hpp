#pragma once

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "dnc/annotation.hpp"
#include "support/oracles.hpp"

namespace dnc::testing {

/// Random non-empty masks: noise, rectangles, and perturbed copies of earlier
/// masks so that heavy overlaps actually occur.
inline std::vector<BinaryMask> random_masks(Rng& rng, int h, int w, int n) {
  std::vector<Bitmap> bits;
  std::vector<BinaryMask> out;
  while (static_cast<int>(out.size()) < n) {
    Bitmap b(h, w);
    const int kind = uniform_int(rng, 0, 3);
    if (kind == 0 && !bits.empty()) {
      b = bits[uniform_int(rng, 0, static_cast<int>(bits.size()) - 1)];
      const int flips = uniform_int(rng, 0, 3);
      for (int f = 0; f < flips; ++f) {
        const int y = uniform_int(rng, 0, h - 1), x = uniform_int(rng, 0, w - 1);
        b.set(y, x, !b.at(y, x));
      }
    } else if (kind == 1) {
      b = random_bitmap(rng, h, w);
    } else {
      const int y1 = uniform_int(rng, 0, h - 1), x1 = uniform_int(rng, 0, w - 1);
      b = rect_bitmap(h, w, y1, x1, uniform_int(rng, y1 + 1, h), uniform_int(rng, x1 + 1, w));
    }
    if (bitmap_area(b) == 0) continue;
    bits.push_back(b);
    out.push_back(rle_encode(b));
  }
  return out;
}

/// Scores are drawn from a coarse grid half the time so that ties occur.
inline double random_score(Rng& rng) {
  if (uniform_int(rng, 0, 1) == 0) return uniform_int(rng, 0, 10) / 10.0;
  return uniform_real(rng);
}

inline std::vector<ScoredMask> random_scored_masks(Rng& rng, int h, int w, int n,
                                                   std::int64_t first_id = 0) {
  std::vector<ScoredMask> out;
  for (auto& m : random_masks(rng, h, w, n)) {
    ScoredMask s;
    s.id = first_id + static_cast<std::int64_t>(out.size());
    s.mask = std::move(m);
    s.score = random_score(rng);
    out.push_back(std::move(s));
  }
  return out;
}

/// A valid annotation set exercising every field: levels, parent links and
/// provenance strings with characters that need escaping.
inline AnnotationSet random_annotation_set(Rng& rng, const std::string& image_id, int h, int w,
                                           int n) {
  static const char* const kProvenance[] = {"", "maskcut", "conquer", "gt", "a \"quoted\"\\name", "ünïcode"};
  AnnotationSet set{image_id, h, w, {}};
  std::vector<std::int64_t> ids;
  std::int64_t id = uniform_int(rng, -5, 1000);
  for (auto& m : random_masks(rng, h, w, n)) {
    id += uniform_int(rng, 1, 7);
    ScoredMask s;
    s.id = id;
    s.mask = std::move(m);
    s.score = uniform_int(rng, 0, 3) == 0 ? uniform_int(rng, 0, 1) : uniform_real(rng);
    if (!ids.empty() && uniform_int(rng, 0, 1) == 0) {
      s.level = uniform_int(rng, 1, 6);
      s.parent_id = ids[uniform_int(rng, 0, static_cast<int>(ids.size()) - 1)];
    }
    s.provenance = kProvenance[uniform_int(rng, 0, 5)];
    ids.push_back(id);
    set.masks.push_back(std::move(s));
  }
  return set;
}

// Disjoint ground truth with pairwise distinct areas: GT k lives in its own
// band of k+1 rows. Distinct areas keep every prediction eligible for at most
// one GT at any threshold >= 0.5. Full bands are the fallback.
inline std::vector<Bitmap> disjoint_gt(Rng& rng, int w, int n) {
  const int h = n * (n + 1) / 2;
  for (int attempt = 0;; ++attempt) {
    std::vector<Bitmap> out;
    std::set<std::int64_t> areas;
    int y0 = 0;
    for (int k = 0; k < n; ++k) {
      Bitmap b(h, w);
      for (int y = y0; y < y0 + k + 1; ++y)
        for (int x = 0; x < w; ++x)
          if (attempt >= 100 || uniform_int(rng, 0, 3) != 0) b.set(y, x);
      if (bitmap_area(b) == 0) b.set(y0, 0);
      areas.insert(bitmap_area(b));
      out.push_back(std::move(b));
      y0 += k + 1;
    }
    if (static_cast<int>(areas.size()) == n) return out;
  }
}

// Perturbs a GT so that its IoU lands anywhere from 0 to 1.
inline Bitmap near_copy(Rng& rng, const Bitmap& g) {
  Bitmap b = g;
  const int flips = uniform_int(rng, 0, static_cast<int>(g.pixels.size()) / 3);
  for (int f = 0; f < flips; ++f) {
    const int y = uniform_int(rng, 0, g.height - 1), x = uniform_int(rng, 0, g.width - 1);
    b.set(y, x, !b.at(y, x));
  }
  if (bitmap_area(b) == 0) b.set(0, 0);
  return b;
}

// A random 4-connected patch set of at least two patches.
inline std::vector<std::uint8_t> random_blob(Rng& rng, int gh, int gw) {
  std::vector<std::uint8_t> in(gh * gw, 0);
  const int target = uniform_int(rng, 2, gh * gw);
  std::vector<int> frontier{uniform_int(rng, 0, gh * gw - 1)};
  int count = 0;
  while (!frontier.empty() && count < target) {
    const int k = uniform_int(rng, 0, static_cast<int>(frontier.size()) - 1);
    const int p = frontier[k];
    frontier.erase(frontier.begin() + k);
    if (in[p]) continue;
    in[p] = 1;
    ++count;
    const int y = p / gw, x = p % gw;
    if (y > 0) frontier.push_back(p - gw);
    if (y + 1 < gh) frontier.push_back(p + gw);
    if (x > 0) frontier.push_back(p - 1);
    if (x + 1 < gw) frontier.push_back(p + 1);
  }
  if (count < 2) std::fill(in.begin(), in.end(), 1);
  return in;
}

inline std::vector<double> random_ladder(Rng& rng) {
  std::vector<double> t(uniform_int(rng, 1, 4));
  for (auto& v : t) v = uniform_real(rng, 0.05, 0.95);
  std::sort(t.begin(), t.end(), std::greater<>());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

}  // namespace dnc::testing
