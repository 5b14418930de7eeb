#include "mvseg/view_sampling.hpp"

#include <algorithm>
#include <stdexcept>

namespace mvseg {

std::vector<int> nearest_views(const Vector3d& point, const std::vector<PosedView>& views,
                               int k, double depth_tolerance, ViewSelection selection) {
  if (k < 1) throw std::invalid_argument("nearest_views: k must be >= 1");
  std::vector<std::pair<double, int>> candidates;
  for (size_t v = 0; v < views.size(); ++v) {
    const PosedView& view = views[v];
    const auto proj = project(point, view.intrinsics, view.extrinsics);
    if (!proj || !visible(*proj, view.depth_map, depth_tolerance)) continue;
    candidates.emplace_back(camera_distance(point, view.extrinsics), static_cast<int>(v));
  }
  std::sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first)
      return selection == ViewSelection::Nearest ? a.first < b.first : a.first > b.first;
    return a.second < b.second;
  });
  if (static_cast<int>(candidates.size()) > k) candidates.resize(static_cast<size_t>(k));
  std::vector<int> indices;
  indices.reserve(candidates.size());
  for (const auto& c : candidates) indices.push_back(c.second);
  return indices;
}

PointDecoration decorate_points(const SceneBundle& bundle, int k, double depth_tolerance,
                                int threads, ViewSelection selection) {
  const Index n = bundle.num_points();
  PointDecoration out;
  out.features_2d = Matrixd::Zero(n, bundle.feature_dim);
  out.visible_view_count = Vectori::Zero(n);

  const int all = std::max<int>(k, static_cast<int>(bundle.views.size()));
  parallel_for(n, threads, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      const Vector3d p = bundle.points.row(i).transpose();
      std::vector<int> selected = nearest_views(p, bundle.views, all, depth_tolerance, selection);
      out.visible_view_count(i) = static_cast<int>(selected.size());
      if (static_cast<int>(selected.size()) > k) selected.resize(static_cast<size_t>(k));
      if (selected.empty()) continue;
      Vectord acc = Vectord::Zero(bundle.feature_dim);
      for (int v : selected) {
        const PosedView& view = bundle.views[static_cast<size_t>(v)];
        const auto proj = project(p, view.intrinsics, view.extrinsics);
        const double su = proj->u * static_cast<double>(view.feature_map.width) /
                          view.intrinsics.width;
        const double sv = proj->v * static_cast<double>(view.feature_map.height) /
                          view.intrinsics.height;
        acc += view.feature_map.sample(su, sv);
      }
      out.features_2d.row(i) = (acc / static_cast<double>(selected.size())).transpose();
    }
  });
  return out;
}

}  // namespace mvseg
