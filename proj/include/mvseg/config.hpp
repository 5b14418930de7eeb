#pragma once

#include "mvseg/blob_io.hpp"
#include "mvseg/context_fusion.hpp"
#include "mvseg/synthetic.hpp"

#include <filesystem>
#include <string>

namespace mvseg {

// Every tunable across the pipeline, with documented defaults. Parsing is
// strict: unknown keys are hard errors so configs cannot silently drift.
struct RunConfig {
  uint64_t seed = 7;
  int threads = 1;

  GeneratorConfig generator;

  struct Sampling {
    int k = 3;                     // views averaged per point
    double depth_tolerance = 0.05; // meters of slack in the depth test
  } sampling;

  struct Fusion {
    int rounds = 2;
    double neighbor_radius = 0.3;
    std::string projection = "seeded";  // "seeded" | "identity"
  } fusion;

  struct Queries {
    double tau_conf = 0.4;
    Index medoid_max_samples = 1024;
    Index max_queries = 2048;
    double dropout_rate = 0.7;  // training only; inference keeps every query
  } queries;

  struct Decoder {
    int num_layers = 3;
    Index pe_dims = 128;
    double pe_temperature = 20.0;
    double tau_sim = 0.5;
    double tau_dist = 0.8;
    Vector3d size_init{0.5, 0.5, 0.5};
    double box_filter_margin = 0.2;
    std::string content_path = "seeded";  // "seeded" | "identity"
    double nms_iou = 0.25;  // point-IoU threshold for prediction suppression
  } decoder;

  struct Matching {
    double beta1 = 0.5;
    double beta2 = 0.5;
    double lambda_cls = 0.5;
    double lambda_sem = 0.5;
    double lambda_box = 0.5;
  } matching;

  Json to_json() const;
  static RunConfig from_json(const Json& j);

  static RunConfig defaults() { return RunConfig{}; }

  // Configuration whose inference is analytically exact on generated
  // scenes: identity content path, pass-through fusion, wide spacing.
  static RunConfig oracle_preset();

  void save(const std::filesystem::path& path) const;
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace mvseg
