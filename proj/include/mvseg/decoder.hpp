#pragma once

#include "mvseg/context_fusion.hpp"
#include "mvseg/numerics.hpp"
#include "mvseg/queries2d.hpp"

#include <array>
#include <vector>

namespace mvseg {

// A decoder slot: content vector, axis-aligned box (x,y,z,l,w,h), and the
// sigmoid-range reference size predicted from the content.
struct Query3D {
  Vectord content;
  Vector6d box = Vector6d::Zero();
  Vector3d ref_size = Vector3d::Zero();
};

struct DecoderConfig {
  int num_layers = 3;
  Index feature_dim = 32;
  PEConfig pe;
  double tau_sim = 0.5;
  double tau_dist = 0.8;
  Vector3d size_init{0.5, 0.5, 0.5};
  Eigen::AlignedBox3d scene_extent;  // per-axis min/max used to normalize PE inputs
  uint64_t seed = 0;
  // Identity content path: zero value/FFN maps so attention residuals are
  // the only content updates.
  bool identity_content = false;
  double box_filter_margin = 0.2;

  void validate() const;
};

struct DecoderState {
  Matrixd content;    // M x C
  Matrixd boxes;      // M x 6
  MatrixXb mask;      // M x S segmentation
  Matrixd attn_mask;  // M x S, 0 where assigned, -inf elsewhere

  Index num_queries() const { return content.rows(); }
  Query3D query(Index i) const;
};

// Per-layer parameters, all derived deterministically from the config seed.
struct DecoderWeights {
  struct Layer {
    Matrixd w_query, w_key, w_value;  // self-attention projections
    Perceptrond ffn;                  // residual feed-forward
    Perceptrond box_mlp;              // residual box offsets
  };
  std::vector<Layer> layers;
  Perceptrond ref_mlp;  // content -> reference size logits, shared across layers

  static DecoderWeights create(const DecoderConfig& cfg);
};

enum class QueryInitMode { Train, Eval };

// Train mode draws `train_count` distinct superpoints under the seed; eval
// mode promotes every superpoint to a query. Boxes start at the superpoint
// center with size_init.
DecoderState init_queries(const SuperpointFeatures& sp, const DecoderConfig& cfg,
                          QueryInitMode mode, Index train_count = 0, uint64_t seed = 0);

struct MaskPair {
  MatrixXb mask;
  Matrixd attn;
};

// Segmentation by thresholded sigmoid similarity, plus its additive form.
MaskPair compute_mask(const Eigen::Ref<const Matrixd>& content,
                      const Eigen::Ref<const Matrixd>& sp_features, double tau_sim);

// Per-axis positional-similarity terms before the 1/sqrt(C) scale; the
// modulated form scales each axis by ref_size / box_size.
std::array<Matrixd, 3> positional_axis_terms(const Eigen::Ref<const Matrixd>& boxes,
                                             const Eigen::Ref<const Matrixd>& ref_sizes,
                                             const Eigen::Ref<const Matrixd>& sp_centers,
                                             const DecoderConfig& cfg, bool modulated);

Matrixd positional_similarity(const Eigen::Ref<const Matrixd>& boxes,
                              const Eigen::Ref<const Matrixd>& ref_sizes,
                              const Eigen::Ref<const Matrixd>& sp_centers,
                              const DecoderConfig& cfg, bool modulated);

// Reference sizes for the current content: sigmoid(ref_mlp(content)).
Matrixd reference_sizes(const Eigen::Ref<const Matrixd>& content, const DecoderWeights& w);

// Mask cross-attention over superpoints with the box-modulated positional
// term added to the content similarity; residual update of the content.
void attend_superpoints(DecoderState& state, const SuperpointFeatures& sp,
                        const DecoderWeights& weights, const DecoderConfig& cfg);

// Boolean reachability of 2D queries: a query may attend to an object iff
// one of its assigned superpoints lies within tau_dist of the object center.
MatrixXb object_reachability(const MatrixXb& mask, const Eigen::Ref<const Matrixd>& sp_centers,
                             const Eigen::Ref<const Matrixd>& object_centers, double tau_dist);

// Same relation in additive 0 / -inf form.
Matrixd object_attention_mask(const MatrixXb& mask, const Eigen::Ref<const Matrixd>& sp_centers,
                              const Eigen::Ref<const Matrixd>& object_centers, double tau_dist);

// Distance-gated cross-attention to the 2D object queries; no-op when the
// object set is empty.
void attend_object_queries(DecoderState& state, const Eigen::Ref<const Matrixd>& contents,
                           const Eigen::Ref<const Matrixd>& centers,
                           const Eigen::Ref<const Matrixd>& sp_centers,
                           const DecoderConfig& cfg);

// Unmasked single-head self-attention plus a residual feed-forward block.
void self_attention_ffn(DecoderState& state, const DecoderWeights::Layer& layer,
                        const DecoderConfig& cfg);

// Residual box refinement; sizes are clamped to >= 0.01 m afterwards.
void update_boxes(DecoderState& state, const Perceptrond& box_mlp);

struct LayerOutput {
  MatrixXb mask;
  Matrixd attn_mask;
  Matrixd boxes;
  Matrixd content;
};

struct DecoderResult {
  std::vector<LayerOutput> layers;  // one entry per decoder layer
  DecoderState final_state;
};

// Runs the full layer stack: superpoint attention, object attention,
// self-attention + FFN, box update, then mask refresh.
DecoderResult run_decoder(const SuperpointFeatures& sp, const std::vector<Query2D>& queries2d,
                          const DecoderConfig& cfg, QueryInitMode mode, Index train_count = 0,
                          uint64_t init_seed = 0);

// Clears mask bits whose superpoint center falls outside the query's box
// expanded by `margin` per axis. Never sets a bit.
MatrixXb box_filter_masks(const MatrixXb& mask, const Eigen::Ref<const Matrixd>& boxes,
                          const Eigen::Ref<const Matrixd>& sp_centers, double margin);

}  // namespace mvseg
