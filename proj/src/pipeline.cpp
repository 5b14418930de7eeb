#include "mvseg/pipeline.hpp"

#include "mvseg/blob_io.hpp"
#include "mvseg/view_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace mvseg {

namespace {

enum PipelineStream : uint64_t {
  kFusionSeed = 21,
  kQuerySeed = 22,
  kDecoderSeed = 23,
};

DecoderConfig decoder_config(const SceneBundle& bundle, const RunConfig& cfg) {
  DecoderConfig dc;
  dc.num_layers = cfg.decoder.num_layers;
  dc.feature_dim = bundle.feature_dim;
  dc.pe.dims_per_axis = cfg.decoder.pe_dims;
  dc.pe.temperature = cfg.decoder.pe_temperature;
  dc.tau_sim = cfg.decoder.tau_sim;
  dc.tau_dist = cfg.decoder.tau_dist;
  dc.size_init = cfg.decoder.size_init;
  dc.scene_extent = bundle.extent();
  dc.seed = derive_seed(cfg.seed, kDecoderSeed);
  dc.identity_content = cfg.decoder.content_path == "identity";
  dc.box_filter_margin = cfg.decoder.box_filter_margin;
  return dc;
}

// Votes pooled by detector class over the final attention to 2D queries;
// uniform over real classes when no query exists. The trailing entry is
// the no-object slot.
Matrixd classify_by_object_attention(const DecoderState& state, const MatrixXb& mask,
                                     const SuperpointFeatures& sp,
                                     const std::vector<Query2D>& q2d, int num_classes,
                                     const DecoderConfig& dc) {
  const Index m = state.num_queries();
  Matrixd probs = Matrixd::Zero(m, num_classes + 1);
  if (q2d.empty() || num_classes == 0) {
    if (num_classes > 0)
      probs.leftCols(num_classes).setConstant(1.0 / static_cast<double>(num_classes));
    else
      probs.col(num_classes).setOnes();
    return probs;
  }
  const Matrixd contents = query_contents(q2d, state.content.cols());
  const Matrixd centers = query_centers(q2d);
  const Matrixd gate = object_attention_mask(mask, sp.centers, centers, dc.tau_dist);
  const double scale = std::sqrt(static_cast<double>(dc.feature_dim));
  const Matrixd attn = masked_softmax(state.content * contents.transpose() / scale, gate);
  for (Index i = 0; i < m; ++i)
    for (Index o = 0; o < static_cast<Index>(q2d.size()); ++o)
      probs(i, q2d[static_cast<size_t>(o)].class_id) += attn(i, o);
  return probs;
}

}  // namespace

PredictionSet run_inference(const SceneBundle& bundle, const RunConfig& cfg) {
  bundle.validate();

  const PointDecoration decorated =
      decorate_points(bundle, cfg.sampling.k, cfg.sampling.depth_tolerance, cfg.threads);

  FusionConfig fusion;
  fusion.rounds = cfg.fusion.rounds;
  fusion.neighbor_radius = cfg.fusion.neighbor_radius;
  fusion.feature_dim = bundle.feature_dim;
  fusion.seed = derive_seed(cfg.seed, kFusionSeed);
  fusion.projection = cfg.fusion.projection == "identity"
                          ? FusionConfig::Projection::IdentityFeatures
                          : FusionConfig::Projection::Seeded;
  const Matrixd f3d =
      fuse_context(bundle.points, decorated, bundle.point_colors, fusion, cfg.threads);

  const SuperpointFeatures sp = pool_superpoints(f3d, bundle.points, bundle.superpoint_labels);

  // Inference keeps every 2D query; dropout is a training-time augmentation.
  const std::vector<Query2D> q2d =
      build_queries(bundle, cfg.queries.tau_conf, cfg.queries.medoid_max_samples,
                    cfg.queries.max_queries, derive_seed(cfg.seed, kQuerySeed));

  const DecoderConfig dc = decoder_config(bundle, cfg);
  const DecoderResult decoded = run_decoder(sp, q2d, dc, QueryInitMode::Eval);
  const DecoderState& final_state = decoded.final_state;

  const MatrixXb filtered = box_filter_masks(final_state.mask, final_state.boxes, sp.centers,
                                             cfg.decoder.box_filter_margin);
  const Matrixd logits = final_state.content * sp.features.transpose();
  const Matrixd class_probs =
      classify_by_object_attention(final_state, filtered, sp, q2d, bundle.num_classes, dc);

  const Index m = final_state.num_queries();
  std::vector<InstancePrediction> all;
  all.reserve(static_cast<size_t>(m));
  for (Index i = 0; i < m; ++i) {
    InstancePrediction pred;
    pred.sp_mask = filtered.row(i).transpose();
    if (!pred.sp_mask.any()) continue;  // nothing assigned, nothing to predict
    pred.mask_probs.resize(logits.cols());
    for (Index s = 0; s < logits.cols(); ++s) pred.mask_probs(s) = sigmoid(logits(i, s));
    pred.class_probs = class_probs.row(i).transpose();
    pred.box = final_state.boxes.row(i).transpose();
    double quality = 0.0;
    Index on = 0;
    for (Index s = 0; s < pred.sp_mask.size(); ++s) {
      if (pred.sp_mask(s)) {
        quality += pred.mask_probs(s);
        ++on;
      }
    }
    quality /= static_cast<double>(on);
    const double best_class = pred.class_probs.head(bundle.num_classes).size() > 0
                                  ? pred.class_probs.head(bundle.num_classes).maxCoeff()
                                  : 0.0;
    pred.score = std::clamp(best_class * quality, 0.0, 1.0);
    all.push_back(std::move(pred));
  }

  // Eval mode seeds one query per superpoint, so one instance surfaces many
  // times; point-level mask suppression keeps the best-scoring copy.
  std::vector<size_t> order(all.size());
  for (size_t i = 0; i < all.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return all[a].score > all[b].score; });
  std::vector<Vectorb> point_masks(all.size());
  for (size_t i = 0; i < all.size(); ++i)
    point_masks[i] = superpoint_to_point_mask(all[i].sp_mask, bundle.superpoint_labels);
  auto iou = [](const Vectorb& a, const Vectorb& b) {
    Index inter = 0, uni = 0;
    for (Index i = 0; i < a.size(); ++i) {
      inter += (a(i) && b(i)) ? 1 : 0;
      uni += (a(i) || b(i)) ? 1 : 0;
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
  };
  std::vector<InstancePrediction> kept;
  std::vector<const Vectorb*> kept_points;
  for (size_t idx : order) {
    bool suppressed = false;
    for (const Vectorb* prev : kept_points) {
      if (iou(*prev, point_masks[idx]) > cfg.decoder.nms_iou) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(std::move(all[idx]));
      kept_points.push_back(&point_masks[idx]);
    }
  }

  PredictionSet out;
  out.predictions = std::move(kept);
  out.num_superpoints = sp.features.rows();
  out.num_classes = bundle.num_classes;
  return out;
}

void save_predictions(const PredictionSet& preds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Index p = static_cast<Index>(preds.predictions.size());
  const Index s = preds.num_superpoints;
  const Index nc = preds.num_classes + 1;

  Matrixd mask_probs(p, s), class_probs(p, nc), boxes(p, 6), scores(p, 1);
  std::vector<uint8_t> masks(static_cast<size_t>(p * s), 0);
  for (Index i = 0; i < p; ++i) {
    const InstancePrediction& pred = preds.predictions[static_cast<size_t>(i)];
    for (Index j = 0; j < s; ++j) masks[static_cast<size_t>(i * s + j)] = pred.sp_mask(j) ? 1 : 0;
    mask_probs.row(i) = pred.mask_probs.transpose();
    class_probs.row(i) = pred.class_probs.transpose();
    boxes.row(i) = pred.box.transpose();
    scores(i, 0) = pred.score;
  }

  Json m;
  m["format_version"] = "1";
  m["num_predictions"] = p;
  m["num_superpoints"] = s;
  m["num_classes"] = preds.num_classes;
  m["sp_masks"] = blob::write_u8(dir, "arrays/sp_masks.bin", masks, {p, s});
  m["mask_probs"] = blob::write_f32(dir, "arrays/mask_probs.bin", mask_probs);
  m["class_probs"] = blob::write_f32(dir, "arrays/class_probs.bin", class_probs);
  m["boxes"] = blob::write_f32(dir, "arrays/boxes.bin", boxes);
  m["scores"] = blob::write_f32(dir, "arrays/scores.bin", scores);
  save_manifest(m, dir / "manifest.json");
}

PredictionSet load_predictions(const std::filesystem::path& dir) {
  const Json m = load_manifest(dir / "manifest.json");
  const std::string version = require_field(m, "format_version", "predictions").get<std::string>();
  if (version != "1")
    throw DataError("predictions.format_version: unsupported version \"" + version + "\"");

  PredictionSet out;
  out.num_superpoints = require_field(m, "num_superpoints", "predictions").get<Index>();
  out.num_classes = require_field(m, "num_classes", "predictions").get<int>();
  const Index p = require_field(m, "num_predictions", "predictions").get<Index>();

  const auto [mask_bytes, mask_shape] =
      blob::read_u8(require_field(m, "sp_masks", "predictions"), dir, "sp_masks");
  if (mask_shape.size() != 2 || mask_shape[0] != p || mask_shape[1] != out.num_superpoints)
    throw DataError("sp_masks: shape does not match prediction counts");
  const Matrixd mask_probs =
      blob::read_f32_matrix(require_field(m, "mask_probs", "predictions"), dir, "mask_probs");
  const Matrixd class_probs =
      blob::read_f32_matrix(require_field(m, "class_probs", "predictions"), dir, "class_probs");
  const Matrixd boxes = blob::read_f32_matrix(require_field(m, "boxes", "predictions"), dir, "boxes");
  const Matrixd scores = blob::read_f32_matrix(require_field(m, "scores", "predictions"), dir, "scores");
  if (mask_probs.rows() != p || class_probs.rows() != p || boxes.rows() != p || scores.rows() != p)
    throw DataError("predictions: array row counts disagree with num_predictions");
  if (class_probs.cols() != out.num_classes + 1)
    throw DataError("class_probs: expected num_classes + 1 columns");

  for (Index i = 0; i < p; ++i) {
    InstancePrediction pred;
    pred.sp_mask.resize(out.num_superpoints);
    for (Index j = 0; j < out.num_superpoints; ++j)
      pred.sp_mask(j) = mask_bytes[static_cast<size_t>(i * out.num_superpoints + j)] != 0;
    pred.mask_probs = mask_probs.row(i).transpose();
    pred.class_probs = class_probs.row(i).transpose();
    pred.box = boxes.row(i).transpose();
    pred.score = scores(i, 0);
    out.predictions.push_back(std::move(pred));
  }
  return out;
}

Json metrics_to_json(const MapReport& report) {
  Json j;
  j["mAP"] = report.map;
  j["mAP50"] = report.map50;
  j["mAP25"] = report.map25;
  Json per_class = Json::object();
  for (const auto& [cls, cm] : report.per_class) {
    per_class[std::to_string(cls)] = Json{
        {"AP", cm.ap}, {"AP50", cm.ap50}, {"AP25", cm.ap25}, {"gt_count", cm.gt_count}};
  }
  j["per_class"] = std::move(per_class);
  return j;
}

std::string format_metrics(const MapReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "class      AP        AP50      AP25      gt\n";
  for (const auto& [cls, cm] : report.per_class) {
    out << std::left << std::setw(10) << cls << std::setw(10) << cm.ap << std::setw(10)
        << cm.ap50 << std::setw(10) << cm.ap25 << cm.gt_count << "\n";
  }
  out << std::left << std::setw(10) << "mean" << std::setw(10) << report.map << std::setw(10)
      << report.map50 << std::setw(10) << report.map25 << "\n";
  return out.str();
}

std::string describe_bundle(const SceneBundle& bundle) {
  std::ostringstream out;
  out << "points:           " << bundle.num_points() << "\n";
  out << "superpoints:      " << bundle.num_superpoints() << "\n";
  out << "views:            " << bundle.views.size() << "\n";
  out << "feature_dim:      " << bundle.feature_dim << "\n";
  out << "num_classes:      " << bundle.num_classes << "\n";
  out << "point_colors:     " << (bundle.point_colors ? "yes" : "no") << "\n";
  size_t detections = 0;
  for (const PosedView& view : bundle.views) detections += view.detections.size();
  out << "detections:       " << detections << "\n";
  out << "gt_instances:     " << bundle.gt_instances.size() << "\n";
  std::map<int, int> per_class;
  for (const GtInstance& gt : bundle.gt_instances) per_class[gt.class_id]++;
  for (const auto& [cls, count] : per_class)
    out << "  class " << cls << ":        " << count << "\n";
  out << "validation:       ok\n";
  return out.str();
}

}  // namespace mvseg
