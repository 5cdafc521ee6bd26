#include "dnc/eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <iomanip>

#include "dnc/error.hpp"

namespace dnc {

namespace {

std::vector<std::size_t> score_order(const AnnotationSet& set) {
  std::vector<std::size_t> order(set.masks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (set.masks[a].score != set.masks[b].score) return set.masks[a].score > set.masks[b].score;
    return set.masks[a].id < set.masks[b].id;
  });
  return order;
}

struct Detection {
  double score;
  bool tp;
};

}  // namespace

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50 + 5 * i) / 100.0);
  return t;
}

ImageMatch greedy_match(const AnnotationSet& preds, const AnnotationSet& gts, double thr,
                        int max_dets, AreaRange range) {
  if (max_dets < 1) throw Error(ErrorKind::InvalidArgument, "max_dets must be >= 1");
  ImageMatch out;
  out.pred_order = score_order(preds);
  if (out.pred_order.size() > static_cast<std::size_t>(max_dets)) out.pred_order.resize(max_dets);

  const std::size_t ng = gts.masks.size();
  out.gt_ignored.resize(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    out.gt_ignored[g] = range.contains(static_cast<double>(gts.masks[g].mask.area())) ? 0 : 1;
  }
  std::vector<std::uint8_t> taken(ng, 0);
  out.pred_to_gt.assign(out.pred_order.size(), -1);
  out.pred_ignored.assign(out.pred_order.size(), 0);
  for (std::size_t k = 0; k < out.pred_order.size(); ++k) {
    const auto& pm = preds.masks[out.pred_order[k]].mask;
    int best = -1;
    double best_iou = thr;
    bool best_ignored = true;
    for (std::size_t g = 0; g < ng; ++g) {
      if (taken[g]) continue;
      const double v = iou(pm, gts.masks[g].mask);
      if (v < thr) continue;
      const bool ig = out.gt_ignored[g] != 0;
      // A GT inside the range always beats an ignored one.
      const bool better = best < 0 || (best_ignored && !ig) || (best_ignored == ig && v > best_iou);
      if (better) {
        best = static_cast<int>(g);
        best_iou = v;
        best_ignored = ig;
      }
    }
    if (best >= 0) {
      taken[best] = 1;
      out.pred_to_gt[k] = best;
      out.pred_ignored[k] = out.gt_ignored[best];
    } else {
      out.pred_ignored[k] = range.contains(static_cast<double>(pm.area())) ? 0 : 1;
    }
  }
  return out;
}

std::vector<std::pair<const AnnotationSet*, const AnnotationSet*>> pair_by_image(
    std::span<const AnnotationSet> preds, std::span<const AnnotationSet> gts) {
  std::map<std::string, const AnnotationSet*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.image_id, &p).second) {
      throw Error(ErrorKind::ImageMismatch, "duplicate prediction image id '" + p.image_id + "'");
    }
  }
  std::vector<std::pair<const AnnotationSet*, const AnnotationSet*>> out;
  std::vector<std::string> missing;
  std::map<std::string, bool> used;
  for (const auto& g : gts) {
    auto it = by_id.find(g.image_id);
    if (it == by_id.end()) {
      missing.push_back(g.image_id);
      continue;
    }
    if (used[g.image_id]) {
      throw Error(ErrorKind::ImageMismatch, "duplicate ground-truth image id '" + g.image_id + "'");
    }
    used[g.image_id] = true;
    require_same_image(*it->second, g);
    out.emplace_back(it->second, &g);
  }
  for (const auto& [id, p] : by_id) {
    if (!used.count(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    std::string msg = "unmatched image ids:";
    for (const auto& id : missing) msg += " " + id;
    throw Error(ErrorKind::ImageMismatch, msg);
  }
  return out;
}

std::vector<double> recall_curve(std::span<const AnnotationSet> preds,
                                 std::span<const AnnotationSet> gts, int max_dets,
                                 AreaRange range) {
  const auto pairs = pair_by_image(preds, gts);
  std::vector<double> curve;
  for (double thr : coco_iou_thresholds()) {
    std::int64_t matched = 0, total = 0;
    for (const auto& [p, g] : pairs) {
      const ImageMatch m = greedy_match(*p, *g, thr, max_dets, range);
      for (auto ig : m.gt_ignored) total += ig ? 0 : 1;
      for (std::size_t k = 0; k < m.pred_to_gt.size(); ++k) {
        if (m.pred_to_gt[k] >= 0 && !m.gt_ignored[m.pred_to_gt[k]]) ++matched;
      }
    }
    curve.push_back(total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total));
  }
  return curve;
}

double average_recall(std::span<const AnnotationSet> preds, std::span<const AnnotationSet> gts,
                      int max_dets, AreaRange range) {
  const auto curve = recall_curve(preds, gts, max_dets, range);
  return std::accumulate(curve.begin(), curve.end(), 0.0) / static_cast<double>(curve.size());
}

double average_precision(std::span<const AnnotationSet> preds, std::span<const AnnotationSet> gts,
                         std::span<const double> thresholds, int max_dets, AreaRange range) {
  if (thresholds.empty()) throw Error(ErrorKind::InvalidArgument, "no IoU thresholds given");
  const auto pairs = pair_by_image(preds, gts);
  double sum = 0.0;
  for (double thr : thresholds) {
    std::vector<Detection> dets;
    std::int64_t npig = 0;
    for (const auto& [p, g] : pairs) {
      const ImageMatch m = greedy_match(*p, *g, thr, max_dets, range);
      for (auto ig : m.gt_ignored) npig += ig ? 0 : 1;
      for (std::size_t k = 0; k < m.pred_order.size(); ++k) {
        if (m.pred_ignored[k]) continue;
        dets.push_back({p->masks[m.pred_order[k]].score, m.pred_to_gt[k] >= 0});
      }
    }
    if (npig == 0) continue;  // contributes 0
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<double> rc(dets.size()), pr(dets.size());
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      (dets[i].tp ? tp : fp) += 1.0;
      rc[i] = tp / static_cast<double>(npig);
      pr[i] = tp / (tp + fp);
    }
    for (std::size_t i = pr.size(); i-- > 1;) pr[i - 1] = std::max(pr[i - 1], pr[i]);
    double acc = 0.0;
    for (int r = 0; r <= 100; ++r) {
      const double level = r / 100.0;
      const auto it = std::lower_bound(rc.begin(), rc.end(), level);
      if (it != rc.end()) acc += pr[static_cast<std::size_t>(it - rc.begin())];
    }
    sum += acc / 101.0;
  }
  return sum / static_cast<double>(thresholds.size());
}

double average_precision(std::span<const AnnotationSet> preds, std::span<const AnnotationSet> gts) {
  const auto t = coco_iou_thresholds();
  return average_precision(preds, gts, t);
}

PointPromptResult point_prompt_eval(std::span<const AnnotationSet> preds,
                                    std::span<const AnnotationSet> gts, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
  const auto pairs = pair_by_image(preds, gts);
  PointPromptResult out;
  for (const auto& [p, g] : pairs) {
    if (g->masks.empty()) continue;
    const auto order = score_order(*p);
    double sum_max = 0.0, sum_oracle = 0.0;
    for (const auto& gt : g->masks) {
      if (gt.mask.is_empty()) continue;
      const Point prompt = center_point(gt.mask);
      std::vector<std::size_t> candidates;
      for (std::size_t idx : order) {
        if (static_cast<int>(candidates.size()) == k) break;
        if (contains_point(p->masks[idx].mask, prompt.x, prompt.y)) candidates.push_back(idx);
      }
      if (candidates.empty()) continue;
      const double top = iou(p->masks[candidates.front()].mask, gt.mask);
      double best = top;
      for (std::size_t idx : candidates) best = std::max(best, iou(p->masks[idx].mask, gt.mask));
      sum_max += top;
      sum_oracle += best;
    }
    const double n = static_cast<double>(g->masks.size());
    out.image_ids.push_back(g->image_id);
    out.image_max_iou.push_back(sum_max / n);
    out.image_oracle_iou.push_back(sum_oracle / n);
  }
  if (!out.image_ids.empty()) {
    const double n = static_cast<double>(out.image_ids.size());
    out.max_iou = std::accumulate(out.image_max_iou.begin(), out.image_max_iou.end(), 0.0) / n;
    out.oracle_iou =
        std::accumulate(out.image_oracle_iou.begin(), out.image_oracle_iou.end(), 0.0) / n;
  }
  return out;
}

EvalReport evaluate(std::span<const AnnotationSet> preds, std::span<const AnnotationSet> gts,
                    int k_point) {
  EvalReport r;
  r.iou_thresholds = coco_iou_thresholds();
  r.recall_curve = recall_curve(preds, gts, 1000, kAllAreas);
  r.ar_1000 = std::accumulate(r.recall_curve.begin(), r.recall_curve.end(), 0.0) /
              static_cast<double>(r.recall_curve.size());
  r.ar_s = average_recall(preds, gts, 1000, kSmallAreas);
  r.ar_m = average_recall(preds, gts, 1000, kMediumAreas);
  r.ar_l = average_recall(preds, gts, 1000, kLargeAreas);
  r.ap = average_precision(preds, gts);
  const auto pp = point_prompt_eval(preds, gts, k_point);
  r.max_iou = pp.max_iou;
  r.oracle_iou = pp.oracle_iou;
  r.images = gts.size();
  for (const auto& g : gts) r.gt_masks += g.masks.size();
  for (const auto& p : preds) r.pred_masks += p.masks.size();
  return r;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "images " << r.images << "  gt masks " << r.gt_masks << "  predicted masks "
     << r.pred_masks << "\n";
  os << "metric        value\n";
  os << "AR@1000       " << r.ar_1000 << "\n";
  os << "AR_S          " << r.ar_s << "\n";
  os << "AR_M          " << r.ar_m << "\n";
  os << "AR_L          " << r.ar_l << "\n";
  os << "AP            " << r.ap << "\n";
  os << "MaxIoU        " << r.max_iou << "\n";
  os << "OracleIoU     " << r.oracle_iou << "\n";
  os << "recall by IoU threshold\n";
  for (std::size_t i = 0; i < r.recall_curve.size(); ++i) {
    os << "  " << std::setprecision(2) << r.iou_thresholds[i] << "  " << std::setprecision(4)
       << r.recall_curve[i] << "\n";
  }
  return os.str();
}

}  // namespace dnc
