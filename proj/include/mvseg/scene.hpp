#pragma once

#include "mvseg/core.hpp"
#include "mvseg/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mvseg {

// h x w x C grid stored one pixel per row (row-major over pixels), which
// keeps bilinear sampling a four-row blend.
struct FeatureGrid {
  Index height = 0;
  Index width = 0;
  Matrixd values;  // (height*width) x channels

  Index channels() const { return values.cols(); }
  Vectord sample(double u, double v) const;
  Eigen::Ref<const Matrixd> pixel(Index r, Index c) const {
    return values.block(r * width + c, 0, 1, values.cols());
  }
};

struct Detection2D {
  double confidence = 0.0;
  MatrixXb mask;  // depth-map resolution, H x W
  Vectord query_feature;
  int class_id = 0;
};

struct PosedView {
  CameraIntrinsics intrinsics;
  CameraExtrinsics extrinsics;
  Matrixd depth_map;  // H x W, meters; 0 = no return
  FeatureGrid feature_map;
  std::vector<Detection2D> detections;
};

struct GtInstance {
  Vectorb point_mask;
  int class_id = 0;
};

struct SceneBundle {
  Matrixd points;  // N x 3
  std::optional<Matrixd> point_colors;
  Vectori superpoint_labels;
  std::vector<PosedView> views;
  std::vector<GtInstance> gt_instances;
  Index feature_dim = 0;
  int num_classes = 0;

  Index num_points() const { return points.rows(); }
  Index num_superpoints() const {
    return superpoint_labels.size() == 0 ? 0 : superpoint_labels.maxCoeff() + 1;
  }

  // Throws DataError naming the offending field on any broken invariant.
  void validate() const;

  // Per-axis min/max of the point cloud, widened where an axis is flat.
  Eigen::AlignedBox3d extent() const;
};

// Voxel-grid fallback labelling: points sharing an occupied cell of edge
// `cell_size` share a label; labels are dense in [0, S) in first-seen order.
Vectori grid_superpoints(const Eigen::Ref<const Matrixd>& points, double cell_size);

}  // namespace mvseg
