#include "mvseg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mvseg {

namespace {

double point_iou(const Vectorb& a, const Vectorb& b) {
  Index inter = 0, uni = 0;
  for (Index i = 0; i < a.size(); ++i) {
    const bool ai = a(i), bi = b(i);
    inter += (ai && bi) ? 1 : 0;
    uni += (ai || bi) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Area under the precision-recall curve with the precision envelope
// (all-point interpolation).
double average_precision(const std::vector<bool>& tp_flags, Index gt_count) {
  if (gt_count == 0) return 0.0;
  const size_t n = tp_flags.size();
  if (n == 0) return 0.0;
  std::vector<double> precision(n), recall(n);
  Index tp = 0;
  for (size_t i = 0; i < n; ++i) {
    if (tp_flags[i]) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(gt_count);
  }
  for (size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

double ap_at_threshold(const std::vector<const Vectorb*>& pred_masks,
                       const std::vector<const Vectorb*>& gt_masks, double threshold) {
  std::vector<bool> matched(gt_masks.size(), false);
  std::vector<bool> tp_flags;
  tp_flags.reserve(pred_masks.size());
  for (const Vectorb* pred : pred_masks) {
    Index best = -1;
    double best_iou = 0.0;
    for (size_t g = 0; g < gt_masks.size(); ++g) {
      if (matched[g]) continue;
      const double iou = point_iou(*pred, *gt_masks[g]);
      if (iou >= threshold && iou > best_iou) {
        best_iou = iou;
        best = static_cast<Index>(g);
      }
    }
    if (best >= 0) {
      matched[static_cast<size_t>(best)] = true;
      tp_flags.push_back(true);
    } else {
      tp_flags.push_back(false);
    }
  }
  return average_precision(tp_flags, static_cast<Index>(gt_masks.size()));
}

}  // namespace

MapReport evaluate_map(const std::vector<InstancePrediction>& preds,
                       const std::vector<GtInstance>& gts, const Vectori& labels) {
  // Expand everything to point masks once.
  std::vector<Vectorb> pred_points(preds.size());
  std::vector<int> pred_class(preds.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    pred_points[i] = superpoint_to_point_mask(preds[i].sp_mask, labels);
    pred_class[i] = preds[i].predicted_class();
  }

  std::map<int, std::vector<const Vectorb*>> gt_by_class;
  for (const GtInstance& gt : gts) gt_by_class[gt.class_id].push_back(&gt.point_mask);

  MapReport report;
  if (gt_by_class.empty()) return report;

  std::vector<double> sweep;
  for (int t = 50; t <= 95; t += 5) sweep.push_back(t / 100.0);

  for (const auto& [cls, gt_masks] : gt_by_class) {
    // Class predictions ordered by descending score, stable on ties.
    std::vector<size_t> order;
    for (size_t i = 0; i < preds.size(); ++i)
      if (pred_class[i] == cls) order.push_back(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return preds[a].score > preds[b].score; });
    std::vector<const Vectorb*> pred_masks;
    pred_masks.reserve(order.size());
    for (size_t i : order) pred_masks.push_back(&pred_points[i]);

    ClassMetrics cm;
    cm.gt_count = static_cast<int>(gt_masks.size());
    for (double t : sweep) cm.ap += ap_at_threshold(pred_masks, gt_masks, t);
    cm.ap /= static_cast<double>(sweep.size());
    cm.ap50 = ap_at_threshold(pred_masks, gt_masks, 0.50);
    cm.ap25 = ap_at_threshold(pred_masks, gt_masks, 0.25);
    report.per_class[cls] = cm;
  }

  for (const auto& [cls, cm] : report.per_class) {
    report.map += cm.ap;
    report.map50 += cm.ap50;
    report.map25 += cm.ap25;
  }
  const double k = static_cast<double>(report.per_class.size());
  report.map /= k;
  report.map50 /= k;
  report.map25 /= k;
  return report;
}

}  // namespace mvseg
