#include "mvseg/scene_io.hpp"

#include "mvseg/blob_io.hpp"

#include <sstream>

namespace mvseg {

namespace {

Json pose_to_json(const CameraExtrinsics& ext) {
  Json j;
  std::vector<double> rot(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot[static_cast<size_t>(3 * r + c)] = ext.rotation(r, c);
  j["rotation"] = rot;
  j["translation"] = std::vector<double>{ext.translation.x(), ext.translation.y(),
                                         ext.translation.z()};
  return j;
}

CameraExtrinsics pose_from_json(const Json& j, const std::string& name) {
  CameraExtrinsics ext;
  const auto& rot = require_field(j, "rotation", name);
  const auto& tr = require_field(j, "translation", name);
  if (!rot.is_array() || rot.size() != 9) throw DataError(name + ".rotation: expected 9 numbers");
  if (!tr.is_array() || tr.size() != 3) throw DataError(name + ".translation: expected 3 numbers");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) ext.rotation(r, c) = rot[static_cast<size_t>(3 * r + c)].get<double>();
  for (int a = 0; a < 3; ++a) ext.translation(a) = tr[static_cast<size_t>(a)].get<double>();
  return ext;
}

Json intrinsics_to_json(const CameraIntrinsics& K) {
  return Json{{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx},
              {"cy", K.cy}, {"width", K.width}, {"height", K.height}};
}

CameraIntrinsics intrinsics_from_json(const Json& j, const std::string& name) {
  CameraIntrinsics K;
  K.fx = require_field(j, "fx", name).get<double>();
  K.fy = require_field(j, "fy", name).get<double>();
  K.cx = require_field(j, "cx", name).get<double>();
  K.cy = require_field(j, "cy", name).get<double>();
  K.width = require_field(j, "width", name).get<int>();
  K.height = require_field(j, "height", name).get<int>();
  return K;
}

std::vector<uint8_t> mask_bytes(const MatrixXb& mask) {
  std::vector<uint8_t> bytes(static_cast<size_t>(mask.size()));
  Index k = 0;
  for (Index r = 0; r < mask.rows(); ++r)
    for (Index c = 0; c < mask.cols(); ++c) bytes[static_cast<size_t>(k++)] = mask(r, c) ? 1 : 0;
  return bytes;
}

}  // namespace

void save_bundle(const SceneBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json m;
  m["format_version"] = kBundleFormatVersion;
  m["feature_dim"] = bundle.feature_dim;
  m["num_classes"] = bundle.num_classes;
  m["points"] = blob::write_f32(dir, "arrays/points.bin", bundle.points);
  if (bundle.point_colors)
    m["point_colors"] = blob::write_f32(dir, "arrays/point_colors.bin", *bundle.point_colors);
  m["superpoint_labels"] =
      blob::write_i32(dir, "arrays/superpoint_labels.bin", bundle.superpoint_labels);

  Json views = Json::array();
  for (size_t v = 0; v < bundle.views.size(); ++v) {
    const PosedView& view = bundle.views[v];
    Json jv;
    jv["intrinsics"] = intrinsics_to_json(view.intrinsics);
    jv["extrinsics"] = pose_to_json(view.extrinsics);
    std::ostringstream prefix;
    prefix << "arrays/view_" << v;
    jv["depth_map"] = blob::write_f32(dir, prefix.str() + "_depth.bin", view.depth_map);
    jv["feature_map"] = blob::write_f32(dir, prefix.str() + "_features.bin",
                                        view.feature_map.values,
                                        {view.feature_map.height, view.feature_map.width,
                                         view.feature_map.channels()});
    Json dets = Json::array();
    for (size_t d = 0; d < view.detections.size(); ++d) {
      const Detection2D& det = view.detections[d];
      Json jd;
      jd["confidence"] = det.confidence;
      jd["class_id"] = det.class_id;
      std::ostringstream dp;
      dp << prefix.str() << "_det_" << d;
      jd["mask"] = blob::write_u8(dir, dp.str() + "_mask.bin", mask_bytes(det.mask),
                                  {det.mask.rows(), det.mask.cols()});
      jd["query_feature"] = blob::write_f32(dir, dp.str() + "_feature.bin",
                                            det.query_feature.transpose(),
                                            {det.query_feature.size()});
      dets.push_back(std::move(jd));
    }
    jv["detections"] = std::move(dets);
    views.push_back(std::move(jv));
  }
  m["views"] = std::move(views);

  Json gts = Json::array();
  for (size_t k = 0; k < bundle.gt_instances.size(); ++k) {
    const GtInstance& inst = bundle.gt_instances[k];
    Json jg;
    jg["class_id"] = inst.class_id;
    std::vector<uint8_t> bytes(static_cast<size_t>(inst.point_mask.size()));
    for (Index i = 0; i < inst.point_mask.size(); ++i)
      bytes[static_cast<size_t>(i)] = inst.point_mask(i) ? 1 : 0;
    std::ostringstream gp;
    gp << "arrays/gt_" << k << "_mask.bin";
    jg["point_mask"] = blob::write_u8(dir, gp.str(), bytes, {inst.point_mask.size()});
    gts.push_back(std::move(jg));
  }
  m["gt_instances"] = std::move(gts);

  save_manifest(m, dir / "manifest.json");
}

SceneBundle load_bundle(const std::filesystem::path& dir) {
  const Json m = load_manifest(dir / "manifest.json");
  const std::string version = require_field(m, "format_version", "manifest").get<std::string>();
  if (version != kBundleFormatVersion)
    throw DataError("manifest.format_version: unsupported version \"" + version +
                    "\", expected \"" + std::string(kBundleFormatVersion) + "\"");

  SceneBundle bundle;
  bundle.feature_dim = require_field(m, "feature_dim", "manifest").get<Index>();
  bundle.num_classes = require_field(m, "num_classes", "manifest").get<int>();
  bundle.points = blob::read_f32_matrix(require_field(m, "points", "manifest"), dir, "points");
  if (m.contains("point_colors"))
    bundle.point_colors = blob::read_f32_matrix(m["point_colors"], dir, "point_colors");
  {
    const auto& entry = require_field(m, "superpoint_labels", "manifest");
    bundle.superpoint_labels = blob::read_i32_vector(entry, dir, "superpoint_labels");
  }

  const auto& views = require_field(m, "views", "manifest");
  if (!views.is_array()) throw DataError("manifest.views: expected an array");
  for (size_t v = 0; v < views.size(); ++v) {
    std::ostringstream name;
    name << "views[" << v << "]";
    const Json& jv = views[v];
    PosedView view;
    view.intrinsics = intrinsics_from_json(require_field(jv, "intrinsics", name.str()),
                                           name.str() + ".intrinsics");
    view.extrinsics = pose_from_json(require_field(jv, "extrinsics", name.str()),
                                     name.str() + ".extrinsics");
    view.depth_map = blob::read_f32_matrix(require_field(jv, "depth_map", name.str()), dir,
                                           name.str() + ".depth_map");
    {
      const Json& entry = require_field(jv, "feature_map", name.str());
      const auto shape = blob::entry_shape(entry, name.str() + ".feature_map");
      if (shape.size() != 3)
        throw DataError(name.str() + ".feature_map: expected a rank-3 shape");
      Json flat = entry;
      flat["shape"] = std::vector<Index>{shape[0] * shape[1], shape[2]};
      view.feature_map.height = shape[0];
      view.feature_map.width = shape[1];
      view.feature_map.values = blob::read_f32_matrix(flat, dir, name.str() + ".feature_map");
    }
    const auto& dets = require_field(jv, "detections", name.str());
    for (size_t d = 0; d < dets.size(); ++d) {
      std::ostringstream dn;
      dn << name.str() << ".detections[" << d << "]";
      const Json& jd = dets[d];
      Detection2D det;
      det.confidence = require_field(jd, "confidence", dn.str()).get<double>();
      det.class_id = require_field(jd, "class_id", dn.str()).get<int>();
      auto [bytes, shape] = blob::read_u8(require_field(jd, "mask", dn.str()), dir,
                                          dn.str() + ".mask");
      if (shape.size() != 2) throw DataError(dn.str() + ".mask: expected a rank-2 shape");
      det.mask.resize(shape[0], shape[1]);
      Index k = 0;
      for (Index r = 0; r < shape[0]; ++r)
        for (Index c = 0; c < shape[1]; ++c) det.mask(r, c) = bytes[static_cast<size_t>(k++)] != 0;
      const Json& qf = require_field(jd, "query_feature", dn.str());
      const auto qshape = blob::entry_shape(qf, dn.str() + ".query_feature");
      if (qshape.size() != 1)
        throw DataError(dn.str() + ".query_feature: expected a rank-1 shape");
      Json flat = qf;
      flat["shape"] = std::vector<Index>{1, qshape[0]};
      det.query_feature =
          blob::read_f32_matrix(flat, dir, dn.str() + ".query_feature").row(0).transpose();
      view.detections.push_back(std::move(det));
    }
    bundle.views.push_back(std::move(view));
  }

  const auto& gts = require_field(m, "gt_instances", "manifest");
  for (size_t k = 0; k < gts.size(); ++k) {
    std::ostringstream gn;
    gn << "gt_instances[" << k << "]";
    const Json& jg = gts[k];
    GtInstance inst;
    inst.class_id = require_field(jg, "class_id", gn.str()).get<int>();
    auto [bytes, shape] = blob::read_u8(require_field(jg, "point_mask", gn.str()), dir,
                                        gn.str() + ".point_mask");
    if (shape.size() != 1) throw DataError(gn.str() + ".point_mask: expected a rank-1 shape");
    inst.point_mask.resize(shape[0]);
    for (Index i = 0; i < shape[0]; ++i) inst.point_mask(i) = bytes[static_cast<size_t>(i)] != 0;
    bundle.gt_instances.push_back(std::move(inst));
  }

  try {
    bundle.validate();
  } catch (const DataError& e) {
    throw DataError("bundle " + dir.string() + ": " + e.what());
  }
  return bundle;
}

}  // namespace mvseg
