#include "mvseg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mvseg {

namespace {

// Pulls known keys out of `j` and rejects everything else by full path.
class StrictReader {
 public:
  StrictReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw DataError(path_ + ": expected an object");
  }

  ~StrictReader() = default;

  template <class T>
  void get(const char* key, T& out) {
    mark(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;  // keep default
    try {
      out = it->get<T>();
    } catch (const Json::exception&) {
      throw DataError(path_ + "." + key + ": wrong type");
    }
  }

  void get(const char* key, Vector3d& out) {
    mark(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array() || it->size() != 3)
      throw DataError(path_ + "." + key + ": expected 3 numbers");
    for (int a = 0; a < 3; ++a) out(a) = (*it)[static_cast<size_t>(a)].get<double>();
  }

  const Json* child(const char* key) {
    mark(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw DataError("unknown config key \"" + path_ + "." + key + "\"");
    }
  }

 private:
  void mark(const char* key) { seen_.insert(key); }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json vec3(const Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Json RunConfig::to_json() const {
  Json j;
  j["seed"] = seed;
  j["threads"] = threads;

  Json g;
  g["room_size"] = vec3(generator.room_size);
  g["num_classes"] = generator.num_classes;
  g["instances_per_class"] = generator.instances_per_class;
  g["camera_count"] = generator.camera_count;
  g["image_width"] = generator.image_width;
  g["image_height"] = generator.image_height;
  g["feature_width"] = generator.feature_width;
  g["feature_height"] = generator.feature_height;
  g["feature_dim"] = generator.feature_dim;
  g["points_per_instance"] = generator.points_per_instance;
  g["size_min"] = generator.size_min;
  g["size_max"] = generator.size_max;
  g["min_gap"] = generator.min_gap;
  g["wall_margin"] = generator.wall_margin;
  g["superpoint_cell"] = generator.superpoint_cell;
  g["feature_noise"] = generator.feature_noise;
  g["depth_noise"] = generator.depth_noise;
  g["detection_tolerance"] = generator.detection_tolerance;
  g["with_colors"] = generator.with_colors;
  g["sample_bottom_faces"] = generator.sample_bottom_faces;
  g["max_place_retries"] = generator.max_place_retries;
  j["generator"] = std::move(g);

  j["sampling"] = Json{{"k", sampling.k}, {"depth_tolerance", sampling.depth_tolerance}};
  j["fusion"] = Json{{"rounds", fusion.rounds},
                     {"neighbor_radius", fusion.neighbor_radius},
                     {"projection", fusion.projection}};
  j["queries"] = Json{{"tau_conf", queries.tau_conf},
                      {"medoid_max_samples", queries.medoid_max_samples},
                      {"max_queries", queries.max_queries},
                      {"dropout_rate", queries.dropout_rate}};

  Json d;
  d["num_layers"] = decoder.num_layers;
  d["pe_dims"] = decoder.pe_dims;
  d["pe_temperature"] = decoder.pe_temperature;
  d["tau_sim"] = decoder.tau_sim;
  d["tau_dist"] = decoder.tau_dist;
  d["size_init"] = vec3(decoder.size_init);
  d["box_filter_margin"] = decoder.box_filter_margin;
  d["content_path"] = decoder.content_path;
  d["nms_iou"] = decoder.nms_iou;
  j["decoder"] = std::move(d);

  j["matching"] = Json{{"beta1", matching.beta1},
                       {"beta2", matching.beta2},
                       {"lambda_cls", matching.lambda_cls},
                       {"lambda_sem", matching.lambda_sem},
                       {"lambda_box", matching.lambda_box}};
  return j;
}

RunConfig RunConfig::from_json(const Json& j) {
  RunConfig cfg;
  StrictReader root(j, "config");
  root.get("seed", cfg.seed);
  root.get("threads", cfg.threads);

  if (const Json* g = root.child("generator")) {
    StrictReader r(*g, "config.generator");
    r.get("room_size", cfg.generator.room_size);
    r.get("num_classes", cfg.generator.num_classes);
    r.get("instances_per_class", cfg.generator.instances_per_class);
    r.get("camera_count", cfg.generator.camera_count);
    r.get("image_width", cfg.generator.image_width);
    r.get("image_height", cfg.generator.image_height);
    r.get("feature_width", cfg.generator.feature_width);
    r.get("feature_height", cfg.generator.feature_height);
    r.get("feature_dim", cfg.generator.feature_dim);
    r.get("points_per_instance", cfg.generator.points_per_instance);
    r.get("size_min", cfg.generator.size_min);
    r.get("size_max", cfg.generator.size_max);
    r.get("min_gap", cfg.generator.min_gap);
    r.get("wall_margin", cfg.generator.wall_margin);
    r.get("superpoint_cell", cfg.generator.superpoint_cell);
    r.get("feature_noise", cfg.generator.feature_noise);
    r.get("depth_noise", cfg.generator.depth_noise);
    r.get("detection_tolerance", cfg.generator.detection_tolerance);
    r.get("with_colors", cfg.generator.with_colors);
    r.get("sample_bottom_faces", cfg.generator.sample_bottom_faces);
    r.get("max_place_retries", cfg.generator.max_place_retries);
    r.finish();
  }
  if (const Json* s = root.child("sampling")) {
    StrictReader r(*s, "config.sampling");
    r.get("k", cfg.sampling.k);
    r.get("depth_tolerance", cfg.sampling.depth_tolerance);
    r.finish();
  }
  if (const Json* f = root.child("fusion")) {
    StrictReader r(*f, "config.fusion");
    r.get("rounds", cfg.fusion.rounds);
    r.get("neighbor_radius", cfg.fusion.neighbor_radius);
    r.get("projection", cfg.fusion.projection);
    r.finish();
  }
  if (const Json* q = root.child("queries")) {
    StrictReader r(*q, "config.queries");
    r.get("tau_conf", cfg.queries.tau_conf);
    r.get("medoid_max_samples", cfg.queries.medoid_max_samples);
    r.get("max_queries", cfg.queries.max_queries);
    r.get("dropout_rate", cfg.queries.dropout_rate);
    r.finish();
  }
  if (const Json* d = root.child("decoder")) {
    StrictReader r(*d, "config.decoder");
    r.get("num_layers", cfg.decoder.num_layers);
    r.get("pe_dims", cfg.decoder.pe_dims);
    r.get("pe_temperature", cfg.decoder.pe_temperature);
    r.get("tau_sim", cfg.decoder.tau_sim);
    r.get("tau_dist", cfg.decoder.tau_dist);
    r.get("size_init", cfg.decoder.size_init);
    r.get("box_filter_margin", cfg.decoder.box_filter_margin);
    r.get("content_path", cfg.decoder.content_path);
    r.get("nms_iou", cfg.decoder.nms_iou);
    r.finish();
  }
  if (const Json* m = root.child("matching")) {
    StrictReader r(*m, "config.matching");
    r.get("beta1", cfg.matching.beta1);
    r.get("beta2", cfg.matching.beta2);
    r.get("lambda_cls", cfg.matching.lambda_cls);
    r.get("lambda_sem", cfg.matching.lambda_sem);
    r.get("lambda_box", cfg.matching.lambda_box);
    r.finish();
  }
  root.finish();

  if (cfg.fusion.projection != "seeded" && cfg.fusion.projection != "identity")
    throw DataError("config.fusion.projection: expected \"seeded\" or \"identity\"");
  if (cfg.decoder.content_path != "seeded" && cfg.decoder.content_path != "identity")
    throw DataError("config.decoder.content_path: expected \"seeded\" or \"identity\"");
  return cfg;
}

RunConfig RunConfig::oracle_preset() {
  RunConfig cfg;
  cfg.generator.room_size = Vector3d(10.0, 10.0, 3.0);
  cfg.generator.num_classes = 3;
  cfg.generator.instances_per_class = 2;
  cfg.generator.min_gap = 1.2;
  cfg.generator.wall_margin = 1.6;
  cfg.generator.points_per_instance = 400;
  cfg.generator.feature_width = 160;
  cfg.generator.feature_height = 120;
  cfg.generator.feature_noise = 0.0;
  cfg.generator.depth_noise = 0.0;
  cfg.fusion.rounds = 0;
  cfg.fusion.projection = "identity";
  cfg.queries.tau_conf = 0.25;
  cfg.decoder.tau_sim = 0.6;
  cfg.decoder.content_path = "identity";
  cfg.decoder.box_filter_margin = 1e6;  // effectively disables box filtering
  return cfg;
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open config " + path.string() + " for writing");
  out << to_json().dump(2) << "\n";
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace mvseg
