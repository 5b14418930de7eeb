// Command-line front end: scene generation, inference, evaluation, and
// inspection over scene-bundle directories.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include "mvseg/pipeline.hpp"
#include "mvseg/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace mvseg;

RunConfig load_config_or_default(const std::string& config_path,
                                 const std::optional<uint64_t>& seed_override) {
  RunConfig cfg = config_path.empty() ? RunConfig::defaults() : RunConfig::load(config_path);
  if (seed_override) cfg.seed = *seed_override;
  return cfg;
}

int cmd_gen(const std::string& config_path, const std::optional<uint64_t>& seed,
            const std::string& out) {
  const RunConfig cfg = load_config_or_default(config_path, seed);
  const SceneBundle bundle = generate_synthetic(cfg.generator, cfg.seed);
  save_bundle(bundle, out);
  std::cout << "generated bundle: " << bundle.num_points() << " points, "
            << bundle.num_superpoints() << " superpoints, " << bundle.views.size()
            << " views, " << bundle.gt_instances.size() << " instances\n";
  return 0;
}

int cmd_infer(const std::string& bundle_path, const std::string& config_path,
              const std::optional<uint64_t>& seed, const std::string& out) {
  const RunConfig cfg = load_config_or_default(config_path, seed);
  const SceneBundle bundle = load_bundle(bundle_path);
  const PredictionSet preds = run_inference(bundle, cfg);
  save_predictions(preds, out);
  std::cout << "wrote " << preds.predictions.size() << " predictions over "
            << preds.num_superpoints << " superpoints\n";
  return 0;
}

int cmd_eval(const std::string& predictions_path, const std::string& bundle_path,
             const std::string& out) {
  const SceneBundle bundle = load_bundle(bundle_path);
  const PredictionSet preds = load_predictions(predictions_path);
  if (preds.num_superpoints != bundle.num_superpoints())
    throw DataError("predictions: superpoint count does not match the bundle");
  const MapReport report =
      evaluate_map(preds.predictions, bundle.gt_instances, bundle.superpoint_labels);
  std::cout << format_metrics(report);
  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw DataError("cannot open " + out + " for writing");
    f << metrics_to_json(report).dump(2) << "\n";
  }
  return 0;
}

int cmd_inspect(const std::string& bundle_path) {
  const SceneBundle bundle = load_bundle(bundle_path);
  std::cout << describe_bundle(bundle);
  return 0;
}

int cmd_config_init(const std::string& out, const std::string& preset) {
  RunConfig cfg;
  if (preset == "oracle")
    cfg = RunConfig::oracle_preset();
  else if (preset != "default")
    throw DataError("unknown preset \"" + preset + "\", expected default or oracle");
  if (out.empty())
    std::cout << cfg.to_json().dump(2) << "\n";
  else
    cfg.save(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-view 3D instance segmentation pipeline"};
  app.require_subcommand(1);

  std::string config_path, out, bundle_path, predictions_path, preset = "default";
  std::optional<uint64_t> seed;

  auto* gen = app.add_subcommand("gen", "generate a synthetic scene bundle");
  gen->add_option("--config", config_path, "config file (JSON)");
  gen->add_option("--seed", seed, "override the config seed");
  gen->add_option("--out", out, "output bundle directory")->required();

  auto* infer = app.add_subcommand("infer", "run inference over a bundle");
  infer->add_option("bundle", bundle_path, "scene bundle directory")->required();
  infer->add_option("--config", config_path, "config file (JSON)");
  infer->add_option("--seed", seed, "override the config seed");
  infer->add_option("--out", out, "output predictions directory")->required();

  auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("predictions", predictions_path, "predictions directory")->required();
  eval->add_option("bundle", bundle_path, "scene bundle directory")->required();
  eval->add_option("--out", out, "metrics JSON path");

  auto* inspect = app.add_subcommand("inspect", "summarize a scene bundle");
  inspect->add_option("bundle", bundle_path, "scene bundle directory")->required();

  auto* config = app.add_subcommand("config", "configuration helpers");
  config->require_subcommand(1);
  auto* init = config->add_subcommand("init", "write a config with full defaults");
  init->add_option("--out", out, "config path (stdout when omitted)");
  init->add_option("--preset", preset, "default | oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(config_path, seed, out);
    if (infer->parsed()) return cmd_infer(bundle_path, config_path, seed, out);
    if (eval->parsed()) return cmd_eval(predictions_path, bundle_path, out);
    if (inspect->parsed()) return cmd_inspect(bundle_path);
    if (config->parsed()) return cmd_config_init(out, preset);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const GenerationError& e) {
    std::cerr << "generation error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
