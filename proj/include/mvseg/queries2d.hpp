#pragma once

#include "mvseg/scene.hpp"

#include <vector>

namespace mvseg {

// One projected 2D detection: its content vector plus a robust 3D center.
// The detector class travels with the query so downstream consumers can
// pool votes without reaching back into the views.
struct Query2D {
  Vectord content;
  Vector3d center = Vector3d::Zero();
  int source_view = -1;
  double confidence = 0.0;
  int class_id = -1;
};

struct DetectionRef {
  int view = 0;
  int detection = 0;
};

// Detections with confidence >= tau_conf, in (view, detection) order.
std::vector<DetectionRef> filter_detections(const std::vector<PosedView>& views,
                                            double tau_conf);

// Exhaustive single-medoid index: the row minimizing the summed Euclidean
// distance to all other rows; ties go to the lower index.
Index medoid_index(const Eigen::Ref<const Matrixd>& points);

// Backprojects every masked pixel with positive depth, subsamples to
// max_samples (seeded, original order kept) when larger, and returns the
// exhaustive medoid. Throws NoGeometryError when nothing backprojects.
Vector3d medoid_center(const Detection2D& det, const PosedView& view, Index max_samples,
                       uint64_t seed);

// Greedy farthest point sampling seeded at index 0; ties go to the lower
// index. n <= target returns every index unchanged.
std::vector<Index> fps_downsample(const Eigen::Ref<const Matrixd>& centers, Index target);

// Removes exactly floor(rate * n) queries chosen uniformly without
// replacement; survivor order is preserved.
std::vector<Query2D> dropout_queries(std::vector<Query2D> queries, double rate, uint64_t seed);

// Full construction chain: filter -> medoid -> FPS. Detections without
// backprojectable geometry are skipped.
std::vector<Query2D> build_queries(const SceneBundle& bundle, double tau_conf,
                                   Index medoid_max_samples, Index max_queries, uint64_t seed);

// Stacks query contents (O x C) and centers (O x 3) for the decoder.
Matrixd query_contents(const std::vector<Query2D>& queries, Index feature_dim);
Matrixd query_centers(const std::vector<Query2D>& queries);

}  // namespace mvseg
