#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dnc/annotation.hpp"

namespace dnc {

/// Ground-truth area bucket in pixels, half-open [lo, hi).
struct AreaRange {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double area) const { return area >= lo && area < hi; }
};

inline constexpr AreaRange kAllAreas{};
inline constexpr AreaRange kSmallAreas{0.0, 32.0 * 32.0};
inline constexpr AreaRange kMediumAreas{32.0 * 32.0, 96.0 * 96.0};
inline constexpr AreaRange kLargeAreas{96.0 * 96.0, std::numeric_limits<double>::infinity()};

/// 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

/// Greedy class-agnostic matching for one image at one IoU threshold.
/// Predictions are visited by descending score (ties by id), at most
/// max_dets of them; each takes the unmatched GT with the highest IoU >= thr,
/// preferring GTs inside the area range. Returns the matched GT index per
/// visited prediction (-1 when unmatched), in visiting order.
struct ImageMatch {
  std::vector<std::size_t> pred_order;  // indices into preds.masks
  std::vector<int> pred_to_gt;
  std::vector<std::uint8_t> gt_ignored;
  std::vector<std::uint8_t> pred_ignored;
};
ImageMatch greedy_match(const AnnotationSet& preds, const AnnotationSet& gts, double thr,
                        int max_dets, AreaRange range);

/// Pairs prediction and GT sets by image id; throws listing unmatched ids.
std::vector<std::pair<const AnnotationSet*, const AnnotationSet*>> pair_by_image(
    std::span<const AnnotationSet> preds, std::span<const AnnotationSet> gts);

/// Recall at each COCO IoU threshold, pooled over images.
std::vector<double> recall_curve(std::span<const AnnotationSet> preds,
                                 std::span<const AnnotationSet> gts, int max_dets,
                                 AreaRange range = kAllAreas);

/// Mean of recall_curve. Zero when the bucket holds no GT.
double average_recall(std::span<const AnnotationSet> preds, std::span<const AnnotationSet> gts,
                      int max_dets, AreaRange range = kAllAreas);

/// 101-point interpolated AP averaged over `thresholds`.
double average_precision(std::span<const AnnotationSet> preds, std::span<const AnnotationSet> gts,
                         std::span<const double> thresholds, int max_dets = 100,
                         AreaRange range = kAllAreas);
double average_precision(std::span<const AnnotationSet> preds, std::span<const AnnotationSet> gts);

struct PointPromptResult {
  double max_iou = 0.0;
  double oracle_iou = 0.0;
  /// Per evaluated image (images without GT are skipped), in pairing order.
  std::vector<std::string> image_ids;
  std::vector<double> image_max_iou;
  std::vector<double> image_oracle_iou;
};

/// Simulated single-click evaluation: the prompt is center_point(gt), the
/// candidates are the k best-scored predictions containing it.
PointPromptResult point_prompt_eval(std::span<const AnnotationSet> preds,
                                    std::span<const AnnotationSet> gts, int k = 6);

struct EvalReport {
  double ar_1000 = 0.0;
  double ar_s = 0.0;
  double ar_m = 0.0;
  double ar_l = 0.0;
  double ap = 0.0;
  std::vector<double> iou_thresholds;
  std::vector<double> recall_curve;  // AR_1000 per threshold
  double max_iou = 0.0;
  double oracle_iou = 0.0;
  std::size_t images = 0;
  std::size_t gt_masks = 0;
  std::size_t pred_masks = 0;
};

EvalReport evaluate(std::span<const AnnotationSet> preds, std::span<const AnnotationSet> gts,
                    int k_point = 6);

/// Plain-text table of a report.
std::string format_report(const EvalReport& report);

}  // namespace dnc
