#include "mvseg/queries2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mvseg {

std::vector<DetectionRef> filter_detections(const std::vector<PosedView>& views,
                                            double tau_conf) {
  if (!(tau_conf >= 0.0 && tau_conf <= 1.0))
    throw std::invalid_argument("filter_detections: tau_conf must lie in [0,1]");
  std::vector<DetectionRef> result;
  for (size_t v = 0; v < views.size(); ++v)
    for (size_t d = 0; d < views[v].detections.size(); ++d)
      if (views[v].detections[d].confidence >= tau_conf)
        result.push_back({static_cast<int>(v), static_cast<int>(d)});
  return result;
}

Index medoid_index(const Eigen::Ref<const Matrixd>& points) {
  const Index n = points.rows();
  if (n == 0) throw std::invalid_argument("medoid_index: empty point set");
  Index best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (Index j = 0; j < n; ++j) sum += (points.row(i) - points.row(j)).norm();
    if (sum < best_sum) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

Vector3d medoid_center(const Detection2D& det, const PosedView& view, Index max_samples,
                       uint64_t seed) {
  if (max_samples < 1) throw std::invalid_argument("medoid_center: max_samples must be >= 1");
  std::vector<Vector3d> pts;
  for (Index r = 0; r < det.mask.rows(); ++r) {
    for (Index c = 0; c < det.mask.cols(); ++c) {
      if (!det.mask(r, c)) continue;
      const double depth = view.depth_map(r, c);
      if (depth <= 0.0) continue;
      pts.push_back(backproject(static_cast<double>(c), static_cast<double>(r), depth,
                                view.intrinsics, view.extrinsics));
    }
  }
  if (pts.empty())
    throw NoGeometryError("medoid_center: no masked pixel carries a positive depth");

  if (static_cast<Index>(pts.size()) > max_samples) {
    Rng rng(seed);
    auto keep = rng.sample_without_replacement(static_cast<Index>(pts.size()), max_samples);
    std::sort(keep.begin(), keep.end());
    std::vector<Vector3d> sub;
    sub.reserve(keep.size());
    for (Index idx : keep) sub.push_back(pts[static_cast<size_t>(idx)]);
    pts = std::move(sub);
  }

  Matrixd m(static_cast<Index>(pts.size()), 3);
  for (size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Index>(i)) = pts[i].transpose();
  return pts[static_cast<size_t>(medoid_index(m))];
}

std::vector<Index> fps_downsample(const Eigen::Ref<const Matrixd>& centers, Index target) {
  if (target < 1) throw std::invalid_argument("fps_downsample: target must be >= 1");
  const Index n = centers.rows();
  std::vector<Index> selected;
  if (n <= target) {
    selected.resize(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) selected[static_cast<size_t>(i)] = i;
    return selected;
  }
  selected.reserve(static_cast<size_t>(target));
  selected.push_back(0);
  Vectord min_dist(n);
  for (Index i = 0; i < n; ++i) min_dist(i) = (centers.row(i) - centers.row(0)).norm();
  while (static_cast<Index>(selected.size()) < target) {
    Index best = 0;
    double best_dist = -1.0;
    for (Index i = 0; i < n; ++i) {
      if (min_dist(i) > best_dist) {
        best_dist = min_dist(i);
        best = i;
      }
    }
    selected.push_back(best);
    for (Index i = 0; i < n; ++i)
      min_dist(i) = std::min(min_dist(i), (centers.row(i) - centers.row(best)).norm());
  }
  return selected;
}

std::vector<Query2D> dropout_queries(std::vector<Query2D> queries, double rate, uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw std::invalid_argument("dropout_queries: rate must lie in [0,1)");
  const Index n = static_cast<Index>(queries.size());
  // The epsilon guards floor against representation error in rate * n.
  const Index drop = static_cast<Index>(std::floor(rate * static_cast<double>(n) + 1e-9));
  if (drop == 0) return queries;
  Rng rng(seed);
  const auto dropped = rng.sample_without_replacement(n, drop);
  std::vector<bool> keep(static_cast<size_t>(n), true);
  for (Index idx : dropped) keep[static_cast<size_t>(idx)] = false;
  std::vector<Query2D> survivors;
  survivors.reserve(static_cast<size_t>(n - drop));
  for (Index i = 0; i < n; ++i)
    if (keep[static_cast<size_t>(i)]) survivors.push_back(std::move(queries[static_cast<size_t>(i)]));
  return survivors;
}

std::vector<Query2D> build_queries(const SceneBundle& bundle, double tau_conf,
                                   Index medoid_max_samples, Index max_queries, uint64_t seed) {
  const auto refs = filter_detections(bundle.views, tau_conf);
  std::vector<Query2D> candidates;
  for (size_t i = 0; i < refs.size(); ++i) {
    const PosedView& view = bundle.views[static_cast<size_t>(refs[i].view)];
    const Detection2D& det = view.detections[static_cast<size_t>(refs[i].detection)];
    Query2D q;
    try {
      q.center = medoid_center(det, view, medoid_max_samples,
                               derive_seed(seed, 0x2d0 + static_cast<uint64_t>(i)));
    } catch (const NoGeometryError&) {
      continue;  // detection carries no usable geometry
    }
    q.content = det.query_feature;
    q.source_view = refs[i].view;
    q.confidence = det.confidence;
    q.class_id = det.class_id;
    candidates.push_back(std::move(q));
  }
  if (candidates.empty()) return candidates;

  Matrixd centers(static_cast<Index>(candidates.size()), 3);
  for (size_t i = 0; i < candidates.size(); ++i)
    centers.row(static_cast<Index>(i)) = candidates[i].center.transpose();
  const auto keep = fps_downsample(centers, max_queries);
  std::vector<Query2D> result;
  result.reserve(keep.size());
  for (Index idx : keep) result.push_back(std::move(candidates[static_cast<size_t>(idx)]));
  return result;
}

Matrixd query_contents(const std::vector<Query2D>& queries, Index feature_dim) {
  Matrixd r(static_cast<Index>(queries.size()), feature_dim);
  for (size_t i = 0; i < queries.size(); ++i) r.row(static_cast<Index>(i)) = queries[i].content.transpose();
  return r;
}

Matrixd query_centers(const std::vector<Query2D>& queries) {
  Matrixd c(static_cast<Index>(queries.size()), 3);
  for (size_t i = 0; i < queries.size(); ++i) c.row(static_cast<Index>(i)) = queries[i].center.transpose();
  return c;
}

}  // namespace mvseg
