#include "mvseg/geometry.hpp"

#include "mvseg/synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace mvseg;

namespace {

CameraIntrinsics simple_camera() {
  CameraIntrinsics k;
  k.fx = 100.0;
  k.fy = 100.0;
  k.cx = 50.0;
  k.cy = 50.0;
  k.width = 100;
  k.height = 100;
  return k;
}

CameraExtrinsics random_pose(Rng& rng) {
  // Random rotation from a normalized quaternion.
  Eigen::Quaterniond q(rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian());
  q.normalize();
  CameraExtrinsics ext;
  ext.rotation = q.toRotationMatrix();
  ext.translation = Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
  return ext;
}

}  // namespace

TEST_CASE("camera_distance basics") {
  CameraExtrinsics identity;
  CHECK(camera_distance(Vector3d(3, 4, 0), identity) == doctest::Approx(5.0).epsilon(1e-15));

  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const CameraExtrinsics ext = random_pose(rng);
    const Vector3d p(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));

    // Independent route: homogeneous 4x4 transform, norm of the first three.
    Eigen::Matrix4d t4 = Eigen::Matrix4d::Identity();
    t4.topLeftCorner<3, 3>() = ext.rotation;
    t4.topRightCorner<3, 1>() = ext.translation;
    const Eigen::Vector4d h = t4 * Eigen::Vector4d(p.x(), p.y(), p.z(), 1.0);
    CHECK(std::abs(camera_distance(p, ext) - h.head<3>().norm()) < 1e-12);

    // Point at the camera center has distance zero.
    CHECK(camera_distance(ext.camera_center(), ext) < 1e-12);
  }
}

TEST_CASE("project matches the pinhole model") {
  const CameraIntrinsics k = simple_camera();
  CameraExtrinsics identity;

  const auto on_axis = project(Vector3d(0, 0, 2), k, identity);
  REQUIRE(on_axis.has_value());
  CHECK(on_axis->u == doctest::Approx(50.0));
  CHECK(on_axis->v == doctest::Approx(50.0));
  CHECK(on_axis->d == doctest::Approx(2.0));

  const auto off_axis = project(Vector3d(1, 0, 2), k, identity);
  REQUIRE(off_axis.has_value());
  CHECK(off_axis->u == doctest::Approx(100.0));
  CHECK(off_axis->v == doctest::Approx(50.0));

  CHECK_FALSE(project(Vector3d(0, 0, -1), k, identity).has_value());
  CHECK_FALSE(project(Vector3d(0, 0, 0), k, identity).has_value());
}

TEST_CASE("backproject inverts project") {
  const CameraIntrinsics k = simple_camera();
  CameraExtrinsics identity;

  const Vector3d principal = backproject(50.0, 50.0, 1.7, k, identity);
  CHECK((principal - Vector3d(0, 0, 1.7)).norm() < 1e-15);

  CHECK_THROWS_AS(backproject(10.0, 10.0, 0.0, k, identity), std::invalid_argument);
  CHECK_THROWS_AS(backproject(10.0, 10.0, -1.0, k, identity), std::invalid_argument);

  Rng rng(23);
  for (int t = 0; t < 100; ++t) {
    const CameraExtrinsics ext = random_pose(rng);
    const double u = rng.uniform(0.0, 100.0);
    const double v = rng.uniform(0.0, 100.0);
    const double d = rng.uniform(0.1, 10.0);
    const Vector3d p = backproject(u, v, d, k, ext);
    const auto proj = project(p, k, ext);
    REQUIRE(proj.has_value());
    CHECK(std::abs(proj->u - u) < 1e-9);
    CHECK(std::abs(proj->v - v) < 1e-9);
    CHECK(std::abs(proj->d - d) < 1e-9);

    // The backprojected point re-expressed in the camera frame has z = d.
    CHECK(std::abs(ext.to_camera(p).z() - d) < 1e-9);
  }
}

TEST_CASE("visible applies bounds and depth tolerance") {
  Matrixd depth = Matrixd::Constant(100, 100, 2.0);

  Projection out_of_bounds{-1.0, 50.0, 1.0};
  CHECK_FALSE(visible(out_of_bounds, depth, 0.05));

  Projection on_edge{0.0, 50.0, 1.0};  // open interval excludes 0
  CHECK_FALSE(visible(on_edge, depth, 0.05));

  Projection occluded{50.0, 50.0, 3.0};
  CHECK_FALSE(visible(occluded, depth, 0.05));

  Projection at_surface{50.0, 50.0, 2.0};
  CHECK(visible(at_surface, depth, 0.05));

  Projection just_behind{50.0, 50.0, 2.04};
  CHECK(visible(just_behind, depth, 0.05));
}

TEST_CASE("visible agrees with a rendered occluder") {
  // One cuboid in front of a farther test point; the rendered depth map
  // supplies the occlusion.
  GeneratorConfig cfg;
  cfg.num_classes = 1;
  cfg.instances_per_class = 1;
  cfg.camera_count = 1;
  cfg.points_per_instance = 50;
  const SyntheticScene scene = generate_synthetic_scene(cfg, 5);
  const PosedView& view = scene.bundle.views[0];
  const Cuboid& box = scene.instances[0].box;

  // A point well behind the box along the camera-to-box ray.
  const Vector3d cam = view.extrinsics.camera_center();
  const Vector3d behind = box.center + (box.center - cam).normalized() * 2.0;
  const auto proj = project(behind, view.intrinsics, view.extrinsics);
  REQUIRE(proj.has_value());
  CHECK_FALSE(visible(*proj, view.depth_map, 0.05));

  // The point where the center ray enters the box sits on the rendered
  // surface, so it passes the depth test.
  const Vector3d dir = (box.center - cam).normalized();
  const auto entry = ray_cuboid_entry(cam, dir, box);
  REQUIRE(entry.has_value());
  const Vector3d surface = cam + *entry * dir;
  const auto proj2 = project(surface, view.intrinsics, view.extrinsics);
  REQUIRE(proj2.has_value());
  CHECK(visible(*proj2, view.depth_map, 0.05));
}
