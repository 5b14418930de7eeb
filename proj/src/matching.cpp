#include "mvseg/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mvseg {

namespace {

constexpr double kProbFloor = 1e-7;

double clamped_log(double x) { return std::log(std::clamp(x, kProbFloor, 1.0)); }

}  // namespace

int InstancePrediction::predicted_class() const {
  const Index real = class_probs.size() - 1;
  Index best = 0;
  for (Index c = 1; c < real; ++c)
    if (class_probs(c) > class_probs(best)) best = c;
  return static_cast<int>(best);
}

Matrixd gt_boxes_from_masks(const std::vector<GtInstance>& gts,
                            const Eigen::Ref<const Matrixd>& points) {
  Matrixd boxes(static_cast<Index>(gts.size()), 6);
  for (size_t k = 0; k < gts.size(); ++k) {
    const Vectorb& mask = gts[k].point_mask;
    if (!mask.any()) throw std::invalid_argument("gt_boxes_from_masks: empty instance mask");
    Vector3d lo = Vector3d::Constant(std::numeric_limits<double>::infinity());
    Vector3d hi = -lo;
    for (Index i = 0; i < mask.size(); ++i) {
      if (!mask(i)) continue;
      lo = lo.cwiseMin(points.row(i).transpose());
      hi = hi.cwiseMax(points.row(i).transpose());
    }
    boxes.row(static_cast<Index>(k)).head<3>() = (0.5 * (lo + hi)).transpose();
    boxes.row(static_cast<Index>(k)).tail<3>() = (hi - lo).transpose();
  }
  return boxes;
}

MatrixXb gt_superpoint_masks(const std::vector<GtInstance>& gts, const Vectori& labels) {
  const Index s_count = labels.size() == 0 ? 0 : labels.maxCoeff() + 1;
  Vectori sizes = Vectori::Zero(s_count);
  for (Index i = 0; i < labels.size(); ++i) sizes(labels(i))++;
  MatrixXb out = MatrixXb::Constant(static_cast<Index>(gts.size()), s_count, false);
  for (size_t k = 0; k < gts.size(); ++k) {
    Vectori inside = Vectori::Zero(s_count);
    for (Index i = 0; i < labels.size(); ++i)
      if (gts[k].point_mask(i)) inside(labels(i))++;
    for (Index s = 0; s < s_count; ++s)
      out(static_cast<Index>(k), s) = 2 * inside(s) > sizes(s);
  }
  return out;
}

Vectorb superpoint_to_point_mask(const Vectorb& sp_mask, const Vectori& labels) {
  Vectorb out(labels.size());
  for (Index i = 0; i < labels.size(); ++i) out(i) = sp_mask(labels(i));
  return out;
}

double laplace_dice_cost(const Eigen::Ref<const Vectord>& probs, const Vectorb& gt_mask) {
  double inter = 0.0;
  double gt_sum = 0.0;
  for (Index s = 0; s < probs.size(); ++s) {
    if (gt_mask(s)) {
      inter += probs(s);
      gt_sum += 1.0;
    }
  }
  return 1.0 - 2.0 * (inter + 1.0) / (probs.sum() + gt_sum + 1.0);
}

double mask_bce(const Eigen::Ref<const Vectord>& probs, const Vectorb& gt_mask) {
  double acc = 0.0;
  for (Index s = 0; s < probs.size(); ++s)
    acc -= gt_mask(s) ? clamped_log(probs(s)) : clamped_log(1.0 - probs(s));
  return acc / static_cast<double>(probs.size());
}

double match_cost(const InstancePrediction& pred, const Vectorb& gt_sp_mask, int gt_class,
                  const Vector6d& gt_box, double beta1, double beta2) {
  if (pred.mask_probs.size() != gt_sp_mask.size())
    throw std::invalid_argument("match_cost: mask lengths disagree");
  const double cls = pred.class_probs(gt_class);
  const double mask_term =
      mask_bce(pred.mask_probs, gt_sp_mask) + laplace_dice_cost(pred.mask_probs, gt_sp_mask);
  const double box_term = (pred.box - gt_box).cwiseAbs().sum();
  return -beta1 * cls + mask_term + beta2 * box_term;
}

MatchResult hungarian(const Eigen::Ref<const Matrixd>& cost) {
  for (Index r = 0; r < cost.rows(); ++r)
    for (Index c = 0; c < cost.cols(); ++c)
      if (!std::isfinite(cost(r, c)))
        throw std::invalid_argument("hungarian: cost matrix contains a non-finite entry");

  const bool transposed = cost.rows() > cost.cols();
  const Matrixd a = transposed ? Matrixd(cost.transpose()) : Matrixd(cost);
  const Index n = a.rows();
  const Index m = a.cols();

  // Shortest-augmenting-path assignment with potentials (1-indexed).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(m) + 1, 0.0);
  std::vector<Index> way(static_cast<size_t>(m) + 1, 0), p(static_cast<size_t>(m) + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<size_t>(m) + 1, inf);
    std::vector<bool> used(static_cast<size_t>(m) + 1, false);
    do {
      used[static_cast<size_t>(j0)] = true;
      const Index i0 = p[static_cast<size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur =
            a(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  MatchResult result;
  for (Index j = 1; j <= m; ++j) {
    if (p[static_cast<size_t>(j)] == 0) continue;
    const Index row = p[static_cast<size_t>(j)] - 1;
    const Index col = j - 1;
    if (transposed)
      result.pairs.emplace_back(col, row);
    else
      result.pairs.emplace_back(row, col);
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  for (const auto& [pi, gi] : result.pairs) result.total_cost += cost(pi, gi);
  return result;
}

LossBreakdown compute_losses(const std::vector<InstancePrediction>& preds,
                             const MatrixXb& gt_sp_masks, const std::vector<int>& gt_classes,
                             const Eigen::Ref<const Matrixd>& gt_boxes, const MatchResult& match,
                             const LossWeights& weights,
                             const std::vector<Matrixd>* per_layer_boxes) {
  LossBreakdown out;
  if (preds.empty()) return out;
  const Index num_classes = preds.front().class_probs.size() - 1;
  const Index s_count = gt_sp_masks.cols();

  std::vector<int> target(preds.size(), static_cast<int>(num_classes));  // no-object
  for (const auto& [pi, gi] : match.pairs)
    target[static_cast<size_t>(pi)] = gt_classes[static_cast<size_t>(gi)];
  for (size_t i = 0; i < preds.size(); ++i)
    out.l_cls -= clamped_log(preds[i].class_probs(target[i]));
  out.l_cls /= static_cast<double>(preds.size());

  if (!match.pairs.empty()) {
    for (const auto& [pi, gi] : match.pairs) {
      const Vectorb gt_mask = gt_sp_masks.row(gi).transpose();
      out.l_bce += mask_bce(preds[static_cast<size_t>(pi)].mask_probs, gt_mask);
      out.l_dice += laplace_dice_cost(preds[static_cast<size_t>(pi)].mask_probs, gt_mask);
    }
    out.l_bce /= static_cast<double>(match.pairs.size());
    out.l_dice /= static_cast<double>(match.pairs.size());

    auto box_loss = [&](const Eigen::Ref<const Matrixd>& boxes) {
      double acc = 0.0;
      for (const auto& [pi, gi] : match.pairs)
        acc += (boxes.row(pi) - gt_boxes.row(gi)).cwiseAbs().sum();
      return acc / static_cast<double>(match.pairs.size());
    };
    if (per_layer_boxes != nullptr && !per_layer_boxes->empty()) {
      for (const Matrixd& boxes : *per_layer_boxes) out.l_box += box_loss(boxes);
      out.l_box /= static_cast<double>(per_layer_boxes->size());
    } else {
      Matrixd final_boxes(static_cast<Index>(preds.size()), 6);
      for (size_t i = 0; i < preds.size(); ++i)
        final_boxes.row(static_cast<Index>(i)) = preds[i].box.transpose();
      out.l_box = box_loss(final_boxes);
    }
  }

  // Semantic term: per-superpoint, per-class binary cross-entropy against
  // ground-truth occupancy; the predicted score pools mask probability
  // weighted by class probability over all predictions.
  if (s_count > 0 && num_classes > 0) {
    MatrixXb occupancy = MatrixXb::Constant(s_count, num_classes, false);
    for (Index k = 0; k < gt_sp_masks.rows(); ++k)
      for (Index s = 0; s < s_count; ++s)
        if (gt_sp_masks(k, s)) occupancy(s, gt_classes[static_cast<size_t>(k)]) = true;
    Matrixd sem_pred = Matrixd::Zero(s_count, num_classes);
    for (const InstancePrediction& pred : preds)
      for (Index s = 0; s < s_count; ++s)
        for (Index c = 0; c < num_classes; ++c)
          sem_pred(s, c) += pred.mask_probs(s) * pred.class_probs(c);
    double acc = 0.0;
    for (Index s = 0; s < s_count; ++s) {
      for (Index c = 0; c < num_classes; ++c) {
        const double p = std::clamp(sem_pred(s, c), 0.0, 1.0);
        acc -= occupancy(s, c) ? clamped_log(p) : clamped_log(1.0 - p);
      }
    }
    out.l_sem = acc / static_cast<double>(s_count * num_classes);
  }

  out.total = weights.lambda_cls * out.l_cls + out.l_bce + out.l_dice +
              weights.lambda_sem * out.l_sem + weights.lambda_box * out.l_box;
  return out;
}

}  // namespace mvseg
