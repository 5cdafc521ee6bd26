#pragma once

#include <functional>
#include <vector>

#include "dnc/annotation.hpp"
#include "dnc/conquer.hpp"

namespace dnc {

/// Greedy NMS. Masks are ranked by score, then larger area, then smaller id;
/// a mask survives iff its IoU with every earlier survivor is < iou_thresh.
std::vector<ScoredMask> nms(std::vector<ScoredMask> masks, double iou_thresh);

/// Mask -> mask transform applied before pseudo-labels are emitted (CRF,
/// CascadePSP, ...). Must keep the image shape.
using Refiner = std::function<BinaryMask(const BinaryMask&)>;
Refiner identity_refiner();

/// Replaces each mask by its refined version and drops those whose IoU
/// between before and after is below delta_thresh.
std::vector<ScoredMask> refinement_filter(std::vector<ScoredMask> masks, const Refiner& refiner,
                                          double delta_thresh);

struct AssembleOptions {
  double nms_iou = 0.9;
  std::int64_t min_area = 100;
  double refine_delta = 0.5;
  bool refine_first = true;
  Refiner refiner;  // empty means identity
};

/// Divide-stage masks plus every hierarchy part mask, minus masks smaller than
/// min_area, refinement-filtered and deduplicated with NMS. Parts whose IoU
/// with their own parent reaches nms_iou are dropped up front, so a parent is
/// never suppressed by a copy of itself. Ids are reassigned (parents first,
/// then parts in hierarchy order) with parent links kept.
AnnotationSet assemble_pseudo_labels(const std::string& image_id, int height, int width,
                                     const std::vector<ScoredMask>& divide_masks,
                                     const std::vector<Hierarchy>& hierarchies,
                                     const AssembleOptions& options = {});

/// Second-round label set: predictions with score > tau_self, plus pseudo
/// masks whose IoU with every kept prediction is <= dedup_iou.
AnnotationSet self_train_merge(const AnnotationSet& pseudo, const AnnotationSet& predictions,
                               double tau_self, double dedup_iou);

/// gt plus every unsupervised mask whose maximum IoU against gt is <= tau_plus.
/// Ground-truth masks are kept unchanged.
AnnotationSet fuse_with_ground_truth(const AnnotationSet& gt, const AnnotationSet& unsup, double tau_plus);

}  // namespace dnc
