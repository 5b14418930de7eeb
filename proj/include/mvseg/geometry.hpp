#pragma once

#include "mvseg/core.hpp"

#include <optional>

namespace mvseg {

struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  void validate() const;
};

// World-to-camera rigid transform: p_cam = rotation * p_world + translation.
struct CameraExtrinsics {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vector3d translation = Vector3d::Zero();

  Vector3d to_camera(const Vector3d& p_world) const { return rotation * p_world + translation; }
  Vector3d to_world(const Vector3d& p_cam) const {
    return rotation.transpose() * (p_cam - translation);
  }
  Vector3d camera_center() const { return -rotation.transpose() * translation; }
  bool is_orthonormal(double tol = 1e-6) const;
};

// Pixel coordinates plus depth along the optical axis.
struct Projection {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
};

// Euclidean distance from a world point to the camera center.
double camera_distance(const Vector3d& point_world, const CameraExtrinsics& ext);

// Perspective projection; empty when the point sits on or behind the
// camera plane (z <= 1e-9).
std::optional<Projection> project(const Vector3d& point_world, const CameraIntrinsics& K,
                                  const CameraExtrinsics& ext);

// In-bounds on the open interval (0,W)x(0,H) and not occluded: depth must
// not exceed the bilinearly sampled depth map by more than `tolerance`.
bool visible(const Projection& proj, const Eigen::Ref<const Matrixd>& depth_map,
             double tolerance);

// Inverse of project for a known depth; throws for depth <= 0.
Vector3d backproject(double u, double v, double depth, const CameraIntrinsics& K,
                     const CameraExtrinsics& ext);

}  // namespace mvseg
