#include "mvseg/scene.hpp"

#include "mvseg/numerics.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <tuple>

namespace mvseg {

Vectord FeatureGrid::sample(double u, double v) const {
  return bilinear_sample_rows(values, height, width, u, v);
}

void SceneBundle::validate() const {
  if (points.rows() == 0) throw DataError("points: bundle must contain at least one point");
  if (points.cols() != 3) throw DataError("points: expected 3 columns");
  if (superpoint_labels.size() != points.rows())
    throw DataError("superpoint_labels: length does not match point count");
  if (point_colors && (point_colors->rows() != points.rows() || point_colors->cols() != 3))
    throw DataError("point_colors: expected N x 3");
  if (feature_dim <= 0) throw DataError("feature_dim: must be positive");
  if (num_classes < 0) throw DataError("num_classes: must be nonnegative");

  const Index S = num_superpoints();
  if (superpoint_labels.size() > 0 && superpoint_labels.minCoeff() < 0)
    throw DataError("superpoint_labels: negative label");
  Vectori counts = Vectori::Zero(S);
  for (Index i = 0; i < superpoint_labels.size(); ++i) counts(superpoint_labels(i))++;
  for (Index s = 0; s < S; ++s) {
    if (counts(s) == 0) {
      std::ostringstream msg;
      msg << "superpoint_labels: label " << s << " owns no point";
      throw DataError(msg.str());
    }
  }

  for (size_t v = 0; v < views.size(); ++v) {
    const PosedView& view = views[v];
    std::ostringstream where;
    where << "views[" << v << "]";
    try {
      view.intrinsics.validate();
    } catch (const std::invalid_argument& e) {
      throw DataError(where.str() + ".intrinsics: " + e.what());
    }
    if (!view.extrinsics.is_orthonormal())
      throw DataError(where.str() + ".extrinsics: rotation is not orthonormal");
    if (view.depth_map.rows() != view.intrinsics.height ||
        view.depth_map.cols() != view.intrinsics.width)
      throw DataError(where.str() + ".depth_map: shape does not match intrinsics");
    if (view.depth_map.size() > 0 && view.depth_map.minCoeff() < 0.0)
      throw DataError(where.str() + ".depth_map: negative depth");
    if (view.feature_map.values.rows() != view.feature_map.height * view.feature_map.width)
      throw DataError(where.str() + ".feature_map: pixel count does not match resolution");
    if (view.feature_map.channels() != feature_dim)
      throw DataError(where.str() + ".feature_map: channel count does not match feature_dim");
    for (size_t d = 0; d < view.detections.size(); ++d) {
      const Detection2D& det = view.detections[d];
      std::ostringstream dw;
      dw << where.str() << ".detections[" << d << "]";
      if (!(det.confidence >= 0.0 && det.confidence <= 1.0))
        throw DataError(dw.str() + ".confidence: outside [0,1]");
      if (det.mask.rows() != view.intrinsics.height || det.mask.cols() != view.intrinsics.width)
        throw DataError(dw.str() + ".mask: shape does not match view resolution");
      if (!det.mask.any()) throw DataError(dw.str() + ".mask: empty mask");
      if (det.query_feature.size() != feature_dim)
        throw DataError(dw.str() + ".query_feature: length does not match feature_dim");
      if (det.class_id < 0 || det.class_id >= num_classes)
        throw DataError(dw.str() + ".class_id: outside [0, num_classes)");
    }
  }

  for (size_t k = 0; k < gt_instances.size(); ++k) {
    const GtInstance& inst = gt_instances[k];
    std::ostringstream where;
    where << "gt_instances[" << k << "]";
    if (inst.point_mask.size() != points.rows())
      throw DataError(where.str() + ".point_mask: length does not match point count");
    if (!inst.point_mask.any()) throw DataError(where.str() + ".point_mask: empty instance");
    if (inst.class_id < 0 || inst.class_id >= num_classes)
      throw DataError(where.str() + ".class_id: outside [0, num_classes)");
  }
}

Eigen::AlignedBox3d SceneBundle::extent() const {
  Eigen::AlignedBox3d box;
  box.min() = points.colwise().minCoeff().transpose();
  box.max() = points.colwise().maxCoeff().transpose();
  for (int a = 0; a < 3; ++a) {
    if (box.max()(a) - box.min()(a) < 1e-9) {
      box.min()(a) -= 0.5;
      box.max()(a) += 0.5;
    }
  }
  return box;
}

Vectori grid_superpoints(const Eigen::Ref<const Matrixd>& points, double cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("grid_superpoints: cell_size must be positive");
  Vectori labels(points.rows());
  std::map<std::tuple<int64_t, int64_t, int64_t>, int> cells;
  for (Index i = 0; i < points.rows(); ++i) {
    const auto key = std::make_tuple(static_cast<int64_t>(std::floor(points(i, 0) / cell_size)),
                                     static_cast<int64_t>(std::floor(points(i, 1) / cell_size)),
                                     static_cast<int64_t>(std::floor(points(i, 2) / cell_size)));
    const auto it = cells.emplace(key, static_cast<int>(cells.size())).first;
    labels(i) = it->second;
  }
  return labels;
}

}  // namespace mvseg
