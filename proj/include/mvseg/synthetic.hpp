#pragma once

#include "mvseg/scene.hpp"

#include <vector>

namespace mvseg {

// Axis-aligned cuboid in world coordinates.
struct Cuboid {
  Vector3d center = Vector3d::Zero();
  Vector3d half = Vector3d::Zero();

  bool contains(const Vector3d& p, double pad = 0.0) const {
    return ((p - center).cwiseAbs().array() <= (half.array() + pad)).all();
  }
};

struct PlacedInstance {
  Cuboid box;
  int class_id = 0;
  Vectord code;  // unit feature code painted into the views
};

struct GeneratorConfig {
  // Room spans [-x/2, x/2] x [-y/2, y/2] x [0, z].
  Vector3d room_size{8.0, 8.0, 3.0};
  int num_classes = 3;
  int instances_per_class = 2;
  int camera_count = 5;
  int image_width = 160;
  int image_height = 120;
  int feature_width = 80;
  int feature_height = 60;
  Index feature_dim = 32;
  int points_per_instance = 300;
  double size_min = 0.3;
  double size_max = 0.7;
  double min_gap = 0.4;           // surface-to-surface separation between instances
  double wall_margin = 1.4;       // clearance between instances and room walls
  double superpoint_cell = 0.25;
  double feature_noise = 0.0;     // stddev of per-channel feature perturbation
  double depth_noise = 0.0;       // stddev of depth perturbation
  double detection_tolerance = 0.05;  // depth tolerance for confidence estimation
  bool with_colors = true;
  // Ring cameras never see the underside of an object, matching real scans;
  // enable only for tests that want full closed surfaces.
  bool sample_bottom_faces = false;
  int max_place_retries = 200;

  int num_instances() const { return num_classes * instances_per_class; }
};

struct SyntheticScene {
  SceneBundle bundle;
  std::vector<PlacedInstance> instances;
};

// Entry depth (camera-frame z) of a ray against one cuboid via slab
// intersection; the ray is origin + t * dir with dir the camera-frame pixel
// direction mapped to world, so t equals optical-axis depth.
std::optional<double> ray_cuboid_entry(const Vector3d& origin, const Vector3d& dir,
                                       const Cuboid& box);

// Places non-overlapping cuboids, samples their surfaces, renders per-view
// depth and instance-coded feature maps, and emits per-view detections.
// Same seed, same config -> bit-identical output.
SyntheticScene generate_synthetic_scene(const GeneratorConfig& cfg, uint64_t seed);

inline SceneBundle generate_synthetic(const GeneratorConfig& cfg, uint64_t seed) {
  return generate_synthetic_scene(cfg, seed).bundle;
}

}  // namespace mvseg
