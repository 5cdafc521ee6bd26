#include "dnc/postprocess.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "dnc/error.hpp"

namespace dnc {

namespace {

void require_unit_interval(double v, const char* name, bool open_low = false) {
  const bool ok = open_low ? (v > 0.0 && v <= 1.0) : (v >= 0.0 && v <= 1.0);
  if (!ok) {
    throw Error(ErrorKind::InvalidArgument,
                std::string(name) + (open_low ? " must be in (0,1]" : " must be in [0,1]"));
  }
}

}  // namespace

std::vector<ScoredMask> nms(std::vector<ScoredMask> masks, double iou_thresh) {
  require_unit_interval(iou_thresh, "iou_thresh", true);
  std::vector<std::int64_t> area(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) area[i] = masks[i].mask.area();
  std::vector<std::size_t> order(masks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (masks[a].score != masks[b].score) return masks[a].score > masks[b].score;
    if (area[a] != area[b]) return area[a] > area[b];
    return masks[a].id < masks[b].id;
  });

  std::vector<ScoredMask> kept;
  for (std::size_t idx : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const ScoredMask& k) {
      return iou(k.mask, masks[idx].mask) >= iou_thresh;
    });
    if (!suppressed) kept.push_back(std::move(masks[idx]));
  }
  return kept;
}

Refiner identity_refiner() {
  return [](const BinaryMask& m) { return m; };
}

std::vector<ScoredMask> refinement_filter(std::vector<ScoredMask> masks, const Refiner& refiner,
                                          double delta_thresh) {
  require_unit_interval(delta_thresh, "delta_thresh");
  std::vector<ScoredMask> out;
  out.reserve(masks.size());
  for (auto& m : masks) {
    BinaryMask refined = refiner ? refiner(m.mask) : m.mask;
    if (refined.height() != m.mask.height() || refined.width() != m.mask.width()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "refiner changed the shape of mask " + std::to_string(m.id));
    }
    if (iou(m.mask, refined) < delta_thresh) continue;
    m.mask = std::move(refined);
    out.push_back(std::move(m));
  }
  return out;
}

AnnotationSet assemble_pseudo_labels(const std::string& image_id, int height, int width,
                                     const std::vector<ScoredMask>& divide_masks,
                                     const std::vector<Hierarchy>& hierarchies,
                                     const AssembleOptions& options) {
  AnnotationSet out;
  out.image_id = image_id;
  out.height = height;
  out.width = width;

  auto check_shape = [&](const BinaryMask& m) {
    if (m.height() != height || m.width() != width) {
      throw Error(ErrorKind::OutOfBounds, "mask does not fit the " + std::to_string(height) + "x" +
                                              std::to_string(width) + " image " + image_id);
    }
  };

  std::vector<ScoredMask> pool;
  std::map<std::int64_t, std::int64_t> parent_ids;
  std::int64_t next_id = 0;
  for (const auto& m : divide_masks) {
    check_shape(m.mask);
    ScoredMask copy = m;
    parent_ids[m.id] = next_id;
    copy.id = next_id++;
    copy.level = 0;
    copy.parent_id.reset();
    pool.push_back(std::move(copy));
  }
  for (const auto& h : hierarchies) {
    auto parts = hierarchy_masks(h, next_id);
    next_id += static_cast<std::int64_t>(parts.size());
    for (auto& p : parts) {
      check_shape(p.mask);
      // A part covering its whole parent is the parent again.
      if (iou(p.mask, h.parent.mask) >= options.nms_iou) continue;
      if (auto it = parent_ids.find(*p.parent_id); it != parent_ids.end()) p.parent_id = it->second;
      pool.push_back(std::move(p));
    }
  }

  std::erase_if(pool, [&](const ScoredMask& m) { return m.mask.area() < options.min_area; });
  const Refiner refiner = options.refiner ? options.refiner : identity_refiner();
  if (options.refine_first) {
    pool = refinement_filter(std::move(pool), refiner, options.refine_delta);
    pool = nms(std::move(pool), options.nms_iou);
  } else {
    pool = nms(std::move(pool), options.nms_iou);
    pool = refinement_filter(std::move(pool), refiner, options.refine_delta);
  }
  out.masks = std::move(pool);
  return out;
}

AnnotationSet self_train_merge(const AnnotationSet& pseudo, const AnnotationSet& predictions,
                               double tau_self, double dedup_iou) {
  require_same_image(pseudo, predictions);
  require_unit_interval(tau_self, "tau_self");
  require_unit_interval(dedup_iou, "dedup_iou", true);

  std::vector<ScoredMask> kept;
  for (const auto& p : predictions.masks) {
    if (p.score > tau_self) {
      kept.push_back(p);
      if (kept.back().provenance.empty()) kept.back().provenance = "prediction";
    }
  }
  AnnotationSet out;
  out.image_id = pseudo.image_id;
  out.height = pseudo.height;
  out.width = pseudo.width;
  for (const auto& m : pseudo.masks) {
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const ScoredMask& k) {
      return iou(k.mask, m.mask) > dedup_iou;
    });
    if (!duplicate) out.masks.push_back(m);
  }
  append_with_fresh_ids(out, std::move(kept));
  return out;
}

AnnotationSet fuse_with_ground_truth(const AnnotationSet& gt, const AnnotationSet& unsup,
                                     double tau_plus) {
  require_same_image(gt, unsup);
  require_unit_interval(tau_plus, "tau_plus");
  AnnotationSet out = gt;
  std::vector<ScoredMask> added;
  for (const auto& m : unsup.masks) {
    double max_iou = 0.0;
    for (const auto& g : gt.masks) max_iou = std::max(max_iou, iou(m.mask, g.mask));
    if (max_iou <= tau_plus) {
      added.push_back(m);
      if (added.back().provenance.empty()) added.back().provenance = "unsupervised";
    }
  }
  append_with_fresh_ids(out, std::move(added));
  return out;
}

}  // namespace dnc
