#include "dnc/annotation.hpp"

#include <algorithm>
#include <map>
#include <unordered_set>

#include "dnc/error.hpp"

namespace dnc {

void AnnotationSet::validate() const {
  std::unordered_set<std::int64_t> seen;
  for (const auto& m : masks) {
    if (m.mask.height() != height || m.mask.width() != width) {
      throw Error(ErrorKind::DimensionMismatch,
                  "mask " + std::to_string(m.id) + " does not match image " + image_id + " (" +
                      std::to_string(height) + "x" + std::to_string(width) + ")");
    }
    if (!seen.insert(m.id).second) {
      throw Error(ErrorKind::InvalidArgument,
                  "duplicate mask id " + std::to_string(m.id) + " in image " + image_id);
    }
    dnc::validate(m);
  }
}

std::int64_t AnnotationSet::next_free_id() const {
  std::int64_t next = 0;
  for (const auto& m : masks) next = std::max(next, m.id + 1);
  return next;
}

void append_with_fresh_ids(AnnotationSet& dst, std::vector<ScoredMask> extra) {
  std::int64_t next = dst.next_free_id();
  std::map<std::int64_t, std::int64_t> remap;
  for (const auto& m : extra) remap.emplace(m.id, next++);
  for (auto& m : extra) {
    m.id = remap.at(m.id);
    if (m.parent_id) {
      if (auto it = remap.find(*m.parent_id); it != remap.end()) m.parent_id = it->second;
    }
    dst.masks.push_back(std::move(m));
  }
}

void require_same_image(const AnnotationSet& a, const AnnotationSet& b) {
  if (a.image_id != b.image_id) {
    throw Error(ErrorKind::ImageMismatch,
                "image ids differ: '" + a.image_id + "' vs '" + b.image_id + "'");
  }
  if (a.height != b.height || a.width != b.width) {
    throw Error(ErrorKind::DimensionMismatch, "image '" + a.image_id + "' has inconsistent sizes");
  }
}

}  // namespace dnc
