#include "mvseg/geometry.hpp"

#include "mvseg/numerics.hpp"

#include <sstream>
#include <stdexcept>

namespace mvseg {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw std::invalid_argument("CameraIntrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("CameraIntrinsics: resolution must be positive");
}

bool CameraExtrinsics::is_orthonormal(double tol) const {
  const Eigen::Matrix3d gram = rotation * rotation.transpose();
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

double camera_distance(const Vector3d& point_world, const CameraExtrinsics& ext) {
  return ext.to_camera(point_world).norm();
}

std::optional<Projection> project(const Vector3d& point_world, const CameraIntrinsics& K,
                                  const CameraExtrinsics& ext) {
  const Vector3d pc = ext.to_camera(point_world);
  if (pc.z() <= 1e-9) return std::nullopt;
  Projection proj;
  proj.d = pc.z();
  proj.u = K.fx * pc.x() / pc.z() + K.cx;
  proj.v = K.fy * pc.y() / pc.z() + K.cy;
  return proj;
}

bool visible(const Projection& proj, const Eigen::Ref<const Matrixd>& depth_map,
             double tolerance) {
  const double w = static_cast<double>(depth_map.cols());
  const double h = static_cast<double>(depth_map.rows());
  if (!(proj.u > 0.0 && proj.u < w && proj.v > 0.0 && proj.v < h)) return false;
  return proj.d <= bilinear_sample(depth_map, proj.u, proj.v) + tolerance;
}

Vector3d backproject(double u, double v, double depth, const CameraIntrinsics& K,
                     const CameraExtrinsics& ext) {
  if (!(depth > 0.0)) {
    std::ostringstream msg;
    msg << "backproject: depth must be positive, got " << depth;
    throw std::invalid_argument(msg.str());
  }
  const Vector3d pc((u - K.cx) * depth / K.fx, (v - K.cy) * depth / K.fy, depth);
  return ext.to_world(pc);
}

}  // namespace mvseg
