#pragma once

#include "mvseg/config.hpp"
#include "mvseg/decoder.hpp"
#include "mvseg/evaluation.hpp"
#include "mvseg/scene_io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mvseg {

struct PredictionSet {
  std::vector<InstancePrediction> predictions;
  Index num_superpoints = 0;
  int num_classes = 0;
};

// Full inference chain: decorate -> fuse -> pool -> 2D queries (no
// dropout) -> decoder in eval mode -> box filter -> classification,
// scoring, and exact-duplicate merging. Deterministic for a fixed config.
PredictionSet run_inference(const SceneBundle& bundle, const RunConfig& cfg);

// Predictions directory layout mirrors the bundle format: manifest + blobs.
void save_predictions(const PredictionSet& preds, const std::filesystem::path& dir);
PredictionSet load_predictions(const std::filesystem::path& dir);

// Metrics as structured text (JSON) plus a fixed-width console table.
Json metrics_to_json(const MapReport& report);
std::string format_metrics(const MapReport& report);

// Human-readable bundle summary used by the inspect command.
std::string describe_bundle(const SceneBundle& bundle);

}  // namespace mvseg
