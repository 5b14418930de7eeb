#include "mvseg/synthetic.hpp"

#include "mvseg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace mvseg {

namespace {

enum Stream : uint64_t {
  kPlacement = 1,
  kCodes = 2,
  kPoints = 3,
  kSuperpoints = 4,
  kColors = 5,
  kDepthNoise = 6,
  kFeatureNoise = 7,
};

// World-to-camera extrinsics for a camera at `eye` looking at `target`,
// x right, y down, z forward.
CameraExtrinsics make_look_at(const Vector3d& eye, const Vector3d& target) {
  const Vector3d forward = (target - eye).normalized();
  const Vector3d world_up(0.0, 0.0, 1.0);
  Vector3d right = forward.cross(world_up);
  if (right.norm() < 1e-9) right = Vector3d(1.0, 0.0, 0.0);
  right.normalize();
  const Vector3d down = forward.cross(right).normalized();
  CameraExtrinsics ext;
  ext.rotation.row(0) = right.transpose();
  ext.rotation.row(1) = down.transpose();
  ext.rotation.row(2) = forward.transpose();
  ext.translation = -ext.rotation * eye;
  return ext;
}

// Unit codes, exactly orthogonal when the feature dimension allows it.
std::vector<Vectord> make_codes(Index dim, int count, Rng& rng) {
  if (count == 0) return {};
  if (static_cast<Index>(count) > dim) {
    std::ostringstream msg;
    msg << "generate_synthetic: feature_dim " << dim << " cannot host " << count
        << " near-orthogonal instance codes";
    throw GenerationError(msg.str());
  }
  std::vector<Vectord> codes;
  codes.reserve(static_cast<size_t>(count));
  int attempts = 0;
  while (static_cast<int>(codes.size()) < count) {
    if (++attempts > 100 * count)
      throw GenerationError("generate_synthetic: failed to draw independent instance codes");
    Vectord v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = rng.gaussian();
    for (const Vectord& c : codes) v -= c.dot(v) * c;
    const double norm = v.norm();
    if (norm < 1e-6) continue;
    v /= norm;
    for (Index i = 0; i < dim; ++i) v(i) = float32_round(v(i));
    codes.push_back(v);
  }
  return codes;
}

std::vector<Cuboid> place_instances(const GeneratorConfig& cfg, Rng& rng) {
  std::vector<Cuboid> boxes;
  const Vector3d room = cfg.room_size;
  for (int i = 0; i < cfg.num_instances(); ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_place_retries && !placed; ++attempt) {
      Cuboid c;
      for (int a = 0; a < 3; ++a) c.half(a) = 0.5 * rng.uniform(cfg.size_min, cfg.size_max);
      const double zmin = 0.2 + c.half.z();
      const double zmax = std::max(zmin + 1e-3, room.z() - cfg.wall_margin - c.half.z());
      c.center.x() = rng.uniform(-(room.x() / 2 - cfg.wall_margin - c.half.x()),
                                 room.x() / 2 - cfg.wall_margin - c.half.x());
      c.center.y() = rng.uniform(-(room.y() / 2 - cfg.wall_margin - c.half.y()),
                                 room.y() / 2 - cfg.wall_margin - c.half.y());
      c.center.z() = rng.uniform(zmin, zmax);
      bool overlaps = false;
      for (const Cuboid& other : boxes) {
        const Vector3d sep = (c.center - other.center).cwiseAbs();
        const Vector3d limit = c.half + other.half + Vector3d::Constant(cfg.min_gap);
        if ((sep.array() < limit.array()).all()) {
          overlaps = true;
          break;
        }
      }
      if (!overlaps) {
        boxes.push_back(c);
        placed = true;
      }
    }
    if (!placed) {
      std::ostringstream msg;
      msg << "generate_synthetic: could not place instance " << i << " after "
          << cfg.max_place_retries << " retries";
      throw GenerationError(msg.str());
    }
  }
  return boxes;
}

// Uniform surface sample, faces weighted by area.
Vector3d sample_surface_point(const Cuboid& box, bool include_bottom, Rng& rng) {
  const Vector3d size = 2.0 * box.half;
  const double ax = size.y() * size.z();
  const double ay = size.x() * size.z();
  const double az = size.x() * size.y();
  // Face order: +x, -x, +y, -y, +z, -z.
  const double areas[6] = {ax, ax, ay, ay, az, include_bottom ? az : 0.0};
  double total = 0.0;
  for (double a : areas) total += a;
  double pick = rng.uniform(0.0, total);
  int face = 0;
  for (; face < 5; ++face) {
    if (pick < areas[face]) break;
    pick -= areas[face];
  }
  const int axis = face / 2;
  const double sign = face % 2 == 0 ? 1.0 : -1.0;
  Vector3d p = box.center;
  p(axis) += sign * box.half(axis);
  const int u_axis = (axis + 1) % 3;
  const int v_axis = (axis + 2) % 3;
  p(u_axis) += rng.uniform(-box.half(u_axis), box.half(u_axis));
  p(v_axis) += rng.uniform(-box.half(v_axis), box.half(v_axis));
  return p;
}

struct RenderHit {
  double depth = 0.0;  // 0 = no hit
  int instance = -1;
};

RenderHit nearest_hit(const Vector3d& origin, const Vector3d& dir,
                      const std::vector<Cuboid>& boxes) {
  RenderHit hit;
  double best = std::numeric_limits<double>::infinity();
  for (size_t b = 0; b < boxes.size(); ++b) {
    const auto entry = ray_cuboid_entry(origin, dir, boxes[b]);
    if (entry && *entry < best) {
      best = *entry;
      hit.instance = static_cast<int>(b);
    }
  }
  if (hit.instance >= 0) hit.depth = best;
  return hit;
}

}  // namespace

std::optional<double> ray_cuboid_entry(const Vector3d& origin, const Vector3d& dir,
                                       const Cuboid& box) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double lo = box.center(a) - box.half(a);
    const double hi = box.center(a) + box.half(a);
    if (dir(a) == 0.0) {
      if (origin(a) < lo || origin(a) > hi) return std::nullopt;
      continue;
    }
    double t0 = (lo - origin(a)) / dir(a);
    double t1 = (hi - origin(a)) / dir(a);
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
  }
  if (t_enter > t_exit || t_exit <= 1e-9) return std::nullopt;
  if (t_enter <= 1e-9) return std::nullopt;  // origin inside the box
  return t_enter;
}

SyntheticScene generate_synthetic_scene(const GeneratorConfig& cfg, uint64_t seed) {
  if (cfg.feature_dim <= 0) throw GenerationError("generate_synthetic: feature_dim must be positive");
  if (cfg.camera_count <= 0) throw GenerationError("generate_synthetic: camera_count must be positive");

  SyntheticScene scene;
  SceneBundle& bundle = scene.bundle;
  bundle.feature_dim = cfg.feature_dim;
  bundle.num_classes = cfg.num_classes;

  Rng place_rng(derive_seed(seed, kPlacement));
  Rng code_rng(derive_seed(seed, kCodes));
  Rng point_rng(derive_seed(seed, kPoints));
  Rng sp_rng(derive_seed(seed, kSuperpoints));
  Rng color_rng(derive_seed(seed, kColors));

  const int n_inst = cfg.num_instances();
  std::vector<Cuboid> boxes = place_instances(cfg, place_rng);
  std::vector<Vectord> codes = make_codes(cfg.feature_dim, n_inst, code_rng);
  for (int i = 0; i < n_inst; ++i)
    scene.instances.push_back({boxes[static_cast<size_t>(i)],
                               i / std::max(1, cfg.instances_per_class),
                               codes[static_cast<size_t>(i)]});

  // Instance codes must stay distinguishable for the downstream similarity
  // thresholds; orthogonalization guarantees it, this assert documents it.
  for (int i = 0; i < n_inst; ++i)
    for (int j = i + 1; j < n_inst; ++j)
      if (std::abs(codes[static_cast<size_t>(i)].dot(codes[static_cast<size_t>(j)])) >= 0.1)
        throw GenerationError("generate_synthetic: instance codes are not near-orthogonal");

  // Surface points, instance by instance.
  const Index n_points = n_inst > 0 ? static_cast<Index>(n_inst) * cfg.points_per_instance
                                    : static_cast<Index>(cfg.points_per_instance);
  bundle.points.resize(n_points, 3);
  if (n_inst > 0) {
    for (int i = 0; i < n_inst; ++i) {
      for (int p = 0; p < cfg.points_per_instance; ++p) {
        const Vector3d pt = sample_surface_point(boxes[static_cast<size_t>(i)],
                                                 cfg.sample_bottom_faces, point_rng);
        const Index row = static_cast<Index>(i) * cfg.points_per_instance + p;
        for (int a = 0; a < 3; ++a) bundle.points(row, a) = float32_round(pt(a));
      }
      GtInstance gt;
      gt.point_mask = Vectorb::Constant(n_points, false);
      for (int p = 0; p < cfg.points_per_instance; ++p)
        gt.point_mask(static_cast<Index>(i) * cfg.points_per_instance + p) = true;
      gt.class_id = i / std::max(1, cfg.instances_per_class);
      bundle.gt_instances.push_back(std::move(gt));
    }
  } else {
    // No instances: scatter floor points so the bundle stays valid.
    for (Index p = 0; p < n_points; ++p) {
      bundle.points(p, 0) = float32_round(point_rng.uniform(-cfg.room_size.x() / 2, cfg.room_size.x() / 2));
      bundle.points(p, 1) = float32_round(point_rng.uniform(-cfg.room_size.y() / 2, cfg.room_size.y() / 2));
      bundle.points(p, 2) = 0.0;
    }
  }

  // Superpoints: per-instance voxel patches on a seeded grid offset.
  if (n_inst > 0) {
    const Vector3d jitter(sp_rng.uniform(0.0, cfg.superpoint_cell),
                          sp_rng.uniform(0.0, cfg.superpoint_cell),
                          sp_rng.uniform(0.0, cfg.superpoint_cell));
    bundle.superpoint_labels.resize(n_points);
    std::map<std::tuple<int, int64_t, int64_t, int64_t>, int> cells;
    for (Index row = 0; row < n_points; ++row) {
      const int inst = static_cast<int>(row / cfg.points_per_instance);
      const auto key = std::make_tuple(
          inst,
          static_cast<int64_t>(std::floor((bundle.points(row, 0) + jitter.x()) / cfg.superpoint_cell)),
          static_cast<int64_t>(std::floor((bundle.points(row, 1) + jitter.y()) / cfg.superpoint_cell)),
          static_cast<int64_t>(std::floor((bundle.points(row, 2) + jitter.z()) / cfg.superpoint_cell)));
      const auto it = cells.emplace(key, static_cast<int>(cells.size())).first;
      bundle.superpoint_labels(row) = it->second;
    }
  } else {
    bundle.superpoint_labels = grid_superpoints(bundle.points, cfg.superpoint_cell);
  }

  // Colors: one seeded RGB per instance.
  if (cfg.with_colors) {
    std::vector<Vector3d> inst_colors(static_cast<size_t>(std::max(1, n_inst)));
    for (auto& c : inst_colors)
      c = Vector3d(color_rng.uniform(), color_rng.uniform(), color_rng.uniform());
    Matrixd colors(n_points, 3);
    for (Index row = 0; row < n_points; ++row) {
      const size_t inst = n_inst > 0 ? static_cast<size_t>(row / cfg.points_per_instance) : 0;
      for (int a = 0; a < 3; ++a) colors(row, a) = float32_round(inst_colors[inst](a));
    }
    bundle.point_colors = std::move(colors);
  }

  // Cameras on a wide ring above the room, looking inward; with this
  // placement every instance stays inside all frustums.
  const double ring = 0.9 * std::max(cfg.room_size.x(), cfg.room_size.y());
  const Vector3d target(0.0, 0.0, 0.35 * cfg.room_size.z());
  for (int v = 0; v < cfg.camera_count; ++v) {
    PosedView view;
    view.intrinsics.width = cfg.image_width;
    view.intrinsics.height = cfg.image_height;
    view.intrinsics.fx = 0.6 * cfg.image_width;
    view.intrinsics.fy = 0.6 * cfg.image_width;
    view.intrinsics.cx = 0.5 * cfg.image_width;
    view.intrinsics.cy = 0.5 * cfg.image_height;
    const double angle = 2.0 * EIGEN_PI * v / cfg.camera_count;
    const Vector3d eye(ring * std::cos(angle), ring * std::sin(angle), 1.2 * cfg.room_size.z());
    view.extrinsics = make_look_at(eye, target);
    bundle.views.push_back(std::move(view));
  }

  // Depth and feature maps plus detections, per view.
  Rng depth_noise_rng(derive_seed(seed, kDepthNoise));
  Rng feat_noise_rng(derive_seed(seed, kFeatureNoise));
  for (PosedView& view : bundle.views) {
    const CameraIntrinsics& K = view.intrinsics;
    const Vector3d origin = view.extrinsics.camera_center();
    const Eigen::Matrix3d rot_t = view.extrinsics.rotation.transpose();

    view.depth_map.resize(K.height, K.width);
    MatX<int> instance_map(K.height, K.width);
    for (int r = 0; r < K.height; ++r) {
      for (int c = 0; c < K.width; ++c) {
        const Vector3d dir_cam((c - K.cx) / K.fx, (r - K.cy) / K.fy, 1.0);
        const RenderHit hit = nearest_hit(origin, rot_t * dir_cam, boxes);
        instance_map(r, c) = hit.instance;
        double d = hit.depth;
        if (d > 0.0 && cfg.depth_noise > 0.0)
          d = std::max(1e-3, d + cfg.depth_noise * depth_noise_rng.gaussian());
        view.depth_map(r, c) = float32_round(d);
      }
    }

    view.feature_map.height = cfg.feature_height;
    view.feature_map.width = cfg.feature_width;
    view.feature_map.values =
        Matrixd::Zero(static_cast<Index>(cfg.feature_height) * cfg.feature_width, cfg.feature_dim);
    const double sx = static_cast<double>(cfg.feature_width) / K.width;
    const double sy = static_cast<double>(cfg.feature_height) / K.height;
    for (int r = 0; r < cfg.feature_height; ++r) {
      for (int c = 0; c < cfg.feature_width; ++c) {
        const Vector3d dir_cam((c / sx - K.cx) / K.fx, (r / sy - K.cy) / K.fy, 1.0);
        const RenderHit hit = nearest_hit(origin, rot_t * dir_cam, boxes);
        const Index row = static_cast<Index>(r) * cfg.feature_width + c;
        if (hit.instance >= 0)
          view.feature_map.values.row(row) = codes[static_cast<size_t>(hit.instance)].transpose();
        if (cfg.feature_noise > 0.0)
          for (Index ch = 0; ch < cfg.feature_dim; ++ch)
            view.feature_map.values(row, ch) += cfg.feature_noise * feat_noise_rng.gaussian();
        for (Index ch = 0; ch < cfg.feature_dim; ++ch)
          view.feature_map.values(row, ch) = float32_round(view.feature_map.values(row, ch));
      }
    }

    // One detection per instance with visible pixels; confidence is the
    // fraction of the instance's surface points passing the depth test.
    for (int i = 0; i < n_inst; ++i) {
      Detection2D det;
      det.mask = (instance_map.array() == i).matrix();
      if (!det.mask.any()) continue;
      int vis = 0;
      for (int p = 0; p < cfg.points_per_instance; ++p) {
        const Index row = static_cast<Index>(i) * cfg.points_per_instance + p;
        const auto proj = project(bundle.points.row(row).transpose(), K, view.extrinsics);
        if (proj && visible(*proj, view.depth_map, cfg.detection_tolerance)) vis++;
      }
      det.confidence = float32_round(static_cast<double>(vis) / cfg.points_per_instance);
      det.query_feature = codes[static_cast<size_t>(i)];
      det.class_id = i / std::max(1, cfg.instances_per_class);
      view.detections.push_back(std::move(det));
    }
  }

  bundle.validate();
  return scene;
}

}  // namespace mvseg
