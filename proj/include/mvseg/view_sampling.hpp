#pragma once

#include "mvseg/scene.hpp"

#include <vector>

namespace mvseg {

struct PointDecoration {
  Matrixd features_2d;         // N x C, zero rows where no view sees the point
  Vectori visible_view_count;  // N
};

enum class ViewSelection { Nearest, Farthest };

// Indices of the <= k visible views ordered by camera distance (ascending
// for Nearest), ties broken by lower view index. Farthest exists only as a
// test-harness baseline.
std::vector<int> nearest_views(const Vector3d& point, const std::vector<PosedView>& views,
                               int k, double depth_tolerance,
                               ViewSelection selection = ViewSelection::Nearest);

// Averages bilinear feature-map samples over each point's selected views.
// Pixel coordinates are rescaled from depth-map to feature-map resolution.
PointDecoration decorate_points(const SceneBundle& bundle, int k, double depth_tolerance,
                                int threads = 1,
                                ViewSelection selection = ViewSelection::Nearest);

}  // namespace mvseg
