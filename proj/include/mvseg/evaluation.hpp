#pragma once

#include "mvseg/matching.hpp"

#include <map>
#include <vector>

namespace mvseg {

struct ClassMetrics {
  double ap = 0.0;    // averaged over IoU thresholds 0.50:0.05:0.95
  double ap50 = 0.0;  // at IoU 0.50
  double ap25 = 0.0;  // at IoU 0.25
  int gt_count = 0;
};

struct MapReport {
  double map = 0.0;
  double map50 = 0.0;
  double map25 = 0.0;
  std::map<int, ClassMetrics> per_class;  // only classes with ground truth
};

// Point-set IoU instance evaluation. Per class and IoU threshold:
// predictions sorted by score (ties by original order) greedily claim the
// unmatched ground truth with the highest IoU >= threshold; AP integrates
// the precision envelope over recall. Superpoint masks expand to points
// through `labels`.
MapReport evaluate_map(const std::vector<InstancePrediction>& preds,
                       const std::vector<GtInstance>& gts, const Vectori& labels);

}  // namespace mvseg
