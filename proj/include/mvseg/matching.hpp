#pragma once

#include "mvseg/scene.hpp"

#include <utility>
#include <vector>

namespace mvseg {

struct InstancePrediction {
  Vectorb sp_mask;      // hard superpoint assignment
  Vectord mask_probs;   // sigmoid similarities per superpoint
  Vectord class_probs;  // num_classes + 1 entries, last = no-object; sums to 1
  Vector6d box = Vector6d::Zero();
  double score = 0.0;

  int predicted_class() const;  // argmax over the real classes
};

// Axis-aligned boxes from ground-truth point masks: center = (min+max)/2,
// size = max - min per axis. K x 6.
Matrixd gt_boxes_from_masks(const std::vector<GtInstance>& gts,
                            const Eigen::Ref<const Matrixd>& points);

// Superpoint-level ground truth: a superpoint belongs to an instance when
// more than half of its points do. K x S.
MatrixXb gt_superpoint_masks(const std::vector<GtInstance>& gts, const Vectori& labels);

// Expands a superpoint mask back to points.
Vectorb superpoint_to_point_mask(const Vectorb& sp_mask, const Vectori& labels);

// Laplace-smoothed Dice cost: 1 - 2*(m.g + 1) / (|m| + |g| + 1).
double laplace_dice_cost(const Eigen::Ref<const Vectord>& probs, const Vectorb& gt_mask);

// Mean binary cross-entropy over superpoints; log arguments are clamped to
// [1e-7, 1] so exact probabilities cost exactly zero.
double mask_bce(const Eigen::Ref<const Vectord>& probs, const Vectorb& gt_mask);

// Pairwise matching cost:
//   -beta1 * p_gt_class + [BCE + dice] + beta2 * L1(box, gt_box).
double match_cost(const InstancePrediction& pred, const Vectorb& gt_sp_mask, int gt_class,
                  const Vector6d& gt_box, double beta1, double beta2);

struct MatchResult {
  std::vector<std::pair<Index, Index>> pairs;  // (prediction, ground truth)
  double total_cost = 0.0;
};

// Exact minimum-cost one-to-one assignment of min(M, K) pairs; throws on
// non-finite costs.
MatchResult hungarian(const Eigen::Ref<const Matrixd>& cost);

struct LossWeights {
  double lambda_cls = 0.5;
  double lambda_sem = 0.5;
  double lambda_box = 0.5;
  double beta1 = 0.5;
  double beta2 = 0.5;
};

struct LossBreakdown {
  double l_cls = 0.0;
  double l_bce = 0.0;
  double l_dice = 0.0;
  double l_sem = 0.0;
  double l_box = 0.0;
  double total = 0.0;
};

// Forward loss evaluation over a matched prediction set. Unmatched
// predictions are supervised toward the no-object class. When per-layer
// box history is supplied, the box term averages over layers.
LossBreakdown compute_losses(const std::vector<InstancePrediction>& preds,
                             const MatrixXb& gt_sp_masks, const std::vector<int>& gt_classes,
                             const Eigen::Ref<const Matrixd>& gt_boxes, const MatchResult& match,
                             const LossWeights& weights,
                             const std::vector<Matrixd>* per_layer_boxes = nullptr);

}  // namespace mvseg
