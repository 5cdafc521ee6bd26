#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dnc/mask.hpp"

namespace dnc {

/// Per-image collection of scored masks: pseudo labels, ground truth,
/// predictions or a fused set.
struct AnnotationSet {
  std::string image_id;
  int height = 0;
  int width = 0;
  std::vector<ScoredMask> masks;

  bool operator==(const AnnotationSet&) const = default;

  /// Shapes match the image, ids are unique and every mask is valid.
  void validate() const;
  std::int64_t next_free_id() const;
};

/// Appends `extra` to `dst`, remapping ids (and parent ids that point inside
/// `extra`) into a range above every id already in `dst`.
void append_with_fresh_ids(AnnotationSet& dst, std::vector<ScoredMask> extra);

void require_same_image(const AnnotationSet& a, const AnnotationSet& b);

}  // namespace dnc
