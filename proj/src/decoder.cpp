#include "mvseg/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mvseg {

namespace {

constexpr double kMinBoxSize = 0.01;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum WeightStream : uint64_t {
  kSelfQuery = 1,
  kSelfKey = 2,
  kSelfValue = 3,
  kFfn = 4,
  kBoxMlp = 5,
  kRefMlp = 6,
};

uint64_t layer_seed(uint64_t seed, int layer, WeightStream role) {
  return derive_seed(seed, static_cast<uint64_t>(layer) * 16 + static_cast<uint64_t>(role));
}

Matrixd seeded_square(Index dims, uint64_t seed) {
  Rng rng(seed);
  Matrixd m(dims, dims);
  const double s = 1.0 / std::sqrt(static_cast<double>(dims));
  for (Index r = 0; r < dims; ++r)
    for (Index c = 0; c < dims; ++c) m(r, c) = rng.uniform(-s, s);
  return m;
}

// Min-max normalization of one coordinate column into [0,1].
Vectord normalize_axis(const Eigen::Ref<const Vectord>& coords, double lo, double hi) {
  return (coords.array() - lo) / (hi - lo);
}

}  // namespace

void DecoderConfig::validate() const {
  if (num_layers < 1) throw std::invalid_argument("DecoderConfig: num_layers must be >= 1");
  if (feature_dim < 1) throw std::invalid_argument("DecoderConfig: feature_dim must be >= 1");
  pe.validate();
  if (!(tau_sim > 0.0 && tau_sim < 1.0))
    throw std::invalid_argument("DecoderConfig: tau_sim must lie in (0,1)");
  if (!(tau_dist > 0.0)) throw std::invalid_argument("DecoderConfig: tau_dist must be positive");
  for (int a = 0; a < 3; ++a)
    if (!(scene_extent.max()(a) - scene_extent.min()(a) > 1e-12)) {
      std::ostringstream msg;
      msg << "DecoderConfig: scene_extent is degenerate on axis " << a;
      throw std::invalid_argument(msg.str());
    }
}

Query3D DecoderState::query(Index i) const {
  Query3D q;
  q.content = content.row(i).transpose();
  q.box = boxes.row(i).transpose();
  return q;
}

DecoderWeights DecoderWeights::create(const DecoderConfig& cfg) {
  DecoderWeights w;
  const Index c = cfg.feature_dim;
  for (int l = 0; l < cfg.num_layers; ++l) {
    Layer layer;
    layer.w_query = seeded_square(c, layer_seed(cfg.seed, l, kSelfQuery));
    layer.w_key = seeded_square(c, layer_seed(cfg.seed, l, kSelfKey));
    if (cfg.identity_content) {
      layer.w_value = Matrixd::Zero(c, c);
      layer.ffn = Perceptrond::zero(c, c, c);
    } else {
      layer.w_value = seeded_square(c, layer_seed(cfg.seed, l, kSelfValue));
      layer.ffn = Perceptrond::seeded(c, c, c, layer_seed(cfg.seed, l, kFfn));
    }
    layer.box_mlp = Perceptrond::seeded(c, c, 6, layer_seed(cfg.seed, l, kBoxMlp));
    w.layers.push_back(std::move(layer));
  }
  w.ref_mlp = Perceptrond::seeded(c, c, 3, layer_seed(cfg.seed, 0, kRefMlp));
  return w;
}

DecoderState init_queries(const SuperpointFeatures& sp, const DecoderConfig& cfg,
                          QueryInitMode mode, Index train_count, uint64_t seed) {
  cfg.validate();
  const Index s_count = sp.features.rows();
  std::vector<Index> chosen;
  if (mode == QueryInitMode::Eval) {
    chosen.resize(static_cast<size_t>(s_count));
    for (Index i = 0; i < s_count; ++i) chosen[static_cast<size_t>(i)] = i;
  } else {
    if (train_count > s_count) {
      std::ostringstream msg;
      msg << "init_queries: cannot draw " << train_count << " queries from " << s_count
          << " superpoints";
      throw std::invalid_argument(msg.str());
    }
    Rng rng(seed);
    chosen = rng.sample_without_replacement(s_count, train_count);
  }

  DecoderState state;
  const Index m = static_cast<Index>(chosen.size());
  state.content.resize(m, sp.features.cols());
  state.boxes.resize(m, 6);
  for (Index i = 0; i < m; ++i) {
    const Index s = chosen[static_cast<size_t>(i)];
    state.content.row(i) = sp.features.row(s);
    state.boxes.row(i).head<3>() = sp.centers.row(s);
    state.boxes.row(i).tail<3>() = cfg.size_init.transpose();
  }
  const MaskPair mp = compute_mask(state.content, sp.features, cfg.tau_sim);
  state.mask = mp.mask;
  state.attn_mask = mp.attn;
  return state;
}

MaskPair compute_mask(const Eigen::Ref<const Matrixd>& content,
                      const Eigen::Ref<const Matrixd>& sp_features, double tau_sim) {
  if (content.cols() != sp_features.cols())
    throw std::invalid_argument("compute_mask: feature dims disagree");
  const Matrixd logits = content * sp_features.transpose();
  MaskPair out;
  out.mask.resize(logits.rows(), logits.cols());
  out.attn.resize(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    for (Index j = 0; j < logits.cols(); ++j) {
      const bool on = sigmoid(logits(i, j)) > tau_sim;
      out.mask(i, j) = on;
      out.attn(i, j) = on ? 0.0 : kNegInf;
    }
  }
  return out;
}

std::array<Matrixd, 3> positional_axis_terms(const Eigen::Ref<const Matrixd>& boxes,
                                             const Eigen::Ref<const Matrixd>& ref_sizes,
                                             const Eigen::Ref<const Matrixd>& sp_centers,
                                             const DecoderConfig& cfg, bool modulated) {
  cfg.pe.validate();
  std::array<Matrixd, 3> terms;
  for (int a = 0; a < 3; ++a) {
    const double lo = cfg.scene_extent.min()(a);
    const double hi = cfg.scene_extent.max()(a);
    if (!(hi - lo > 1e-12)) {
      std::ostringstream msg;
      msg << "positional_similarity: scene_extent is degenerate on axis " << a;
      throw std::invalid_argument(msg.str());
    }
    const Vectord q01 = normalize_axis(boxes.col(a), lo, hi);
    const Vectord s01 = normalize_axis(sp_centers.col(a), lo, hi);
    const Matrixd pe_q = sinusoidal_pe_rows(q01, cfg.pe);
    const Matrixd pe_s = sinusoidal_pe_rows(s01, cfg.pe);
    Matrixd term = pe_q * pe_s.transpose();
    if (modulated) {
      const Vectord ratio =
          ref_sizes.col(a).array() / boxes.col(3 + a).array();
      term.array().colwise() *= ratio.array();
    }
    terms[static_cast<size_t>(a)] = std::move(term);
  }
  return terms;
}

Matrixd positional_similarity(const Eigen::Ref<const Matrixd>& boxes,
                              const Eigen::Ref<const Matrixd>& ref_sizes,
                              const Eigen::Ref<const Matrixd>& sp_centers,
                              const DecoderConfig& cfg, bool modulated) {
  const auto terms = positional_axis_terms(boxes, ref_sizes, sp_centers, cfg, modulated);
  return (terms[0] + terms[1] + terms[2]) /
         std::sqrt(static_cast<double>(cfg.feature_dim));
}

Matrixd reference_sizes(const Eigen::Ref<const Matrixd>& content, const DecoderWeights& w) {
  Matrixd logits = w.ref_mlp.forward(content);
  for (Index r = 0; r < logits.rows(); ++r)
    for (Index c = 0; c < logits.cols(); ++c) logits(r, c) = sigmoid(logits(r, c));
  return logits;
}

void attend_superpoints(DecoderState& state, const SuperpointFeatures& sp,
                        const DecoderWeights& weights, const DecoderConfig& cfg) {
  const double scale = std::sqrt(static_cast<double>(cfg.feature_dim));
  const Matrixd sim_cont = state.content * sp.features.transpose() / scale;
  const Matrixd ref = reference_sizes(state.content, weights);
  const Matrixd sim_pos =
      positional_similarity(state.boxes, ref, sp.centers, cfg, /*modulated=*/true);
  const Matrixd attn = masked_softmax(sim_cont + sim_pos, state.attn_mask);
  state.content += attn * sp.features;
}

MatrixXb object_reachability(const MatrixXb& mask, const Eigen::Ref<const Matrixd>& sp_centers,
                             const Eigen::Ref<const Matrixd>& object_centers, double tau_dist) {
  const Index m = mask.rows();
  const Index s_count = mask.cols();
  const Index o_count = object_centers.rows();
  if (sp_centers.rows() != s_count)
    throw std::invalid_argument("object_reachability: superpoint counts disagree");

  // near(s, o) = [dist < tau_dist], then mask (M x S) times near (S x O)
  // as a boolean product.
  MatrixXb near(s_count, o_count);
  for (Index s = 0; s < s_count; ++s)
    for (Index o = 0; o < o_count; ++o)
      near(s, o) = (object_centers.row(o) - sp_centers.row(s)).norm() < tau_dist;

  MatrixXb reach = MatrixXb::Constant(m, o_count, false);
  for (Index i = 0; i < m; ++i)
    for (Index s = 0; s < s_count; ++s)
      if (mask(i, s))
        for (Index o = 0; o < o_count; ++o)
          if (near(s, o)) reach(i, o) = true;
  return reach;
}

Matrixd object_attention_mask(const MatrixXb& mask, const Eigen::Ref<const Matrixd>& sp_centers,
                              const Eigen::Ref<const Matrixd>& object_centers, double tau_dist) {
  const MatrixXb reach = object_reachability(mask, sp_centers, object_centers, tau_dist);
  Matrixd attn(reach.rows(), reach.cols());
  for (Index i = 0; i < reach.rows(); ++i)
    for (Index o = 0; o < reach.cols(); ++o) attn(i, o) = reach(i, o) ? 0.0 : kNegInf;
  return attn;
}

void attend_object_queries(DecoderState& state, const Eigen::Ref<const Matrixd>& contents,
                           const Eigen::Ref<const Matrixd>& centers,
                           const Eigen::Ref<const Matrixd>& sp_centers,
                           const DecoderConfig& cfg) {
  if (contents.rows() == 0) return;
  const double scale = std::sqrt(static_cast<double>(cfg.feature_dim));
  const Matrixd gate = object_attention_mask(state.mask, sp_centers, centers, cfg.tau_dist);
  const Matrixd attn = masked_softmax(state.content * contents.transpose() / scale, gate);
  state.content += attn * contents;
}

void self_attention_ffn(DecoderState& state, const DecoderWeights::Layer& layer,
                        const DecoderConfig& cfg) {
  const double scale = std::sqrt(static_cast<double>(cfg.feature_dim));
  const Matrixd q = state.content * layer.w_query;
  const Matrixd k = state.content * layer.w_key;
  const Matrixd v = state.content * layer.w_value;
  const Matrixd zeros = Matrixd::Zero(q.rows(), q.rows());
  const Matrixd attn = masked_softmax(q * k.transpose() / scale, zeros);
  state.content += attn * v;
  state.content += layer.ffn.forward(state.content);
}

void update_boxes(DecoderState& state, const Perceptrond& box_mlp) {
  state.boxes += box_mlp.forward(state.content);
  for (Index i = 0; i < state.boxes.rows(); ++i)
    for (int a = 3; a < 6; ++a) state.boxes(i, a) = std::max(state.boxes(i, a), kMinBoxSize);
}

DecoderResult run_decoder(const SuperpointFeatures& sp, const std::vector<Query2D>& queries2d,
                          const DecoderConfig& cfg, QueryInitMode mode, Index train_count,
                          uint64_t init_seed) {
  cfg.validate();
  const DecoderWeights weights = DecoderWeights::create(cfg);
  DecoderResult result;
  DecoderState state = init_queries(sp, cfg, mode, train_count, init_seed);

  const Matrixd r = query_contents(queries2d, cfg.feature_dim);
  const Matrixd centers = query_centers(queries2d);

  for (int l = 0; l < cfg.num_layers; ++l) {
    const DecoderWeights::Layer& layer = weights.layers[static_cast<size_t>(l)];
    attend_superpoints(state, sp, weights, cfg);
    attend_object_queries(state, r, centers, sp.centers, cfg);
    self_attention_ffn(state, layer, cfg);
    update_boxes(state, layer.box_mlp);
    const MaskPair mp = compute_mask(state.content, sp.features, cfg.tau_sim);
    state.mask = mp.mask;
    state.attn_mask = mp.attn;
    result.layers.push_back({state.mask, state.attn_mask, state.boxes, state.content});
  }
  result.final_state = std::move(state);
  return result;
}

MatrixXb box_filter_masks(const MatrixXb& mask, const Eigen::Ref<const Matrixd>& boxes,
                          const Eigen::Ref<const Matrixd>& sp_centers, double margin) {
  if (!(margin >= 0.0)) throw std::invalid_argument("box_filter_masks: margin must be >= 0");
  MatrixXb out = mask;
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) {
      if (!out(i, j)) continue;
      for (int a = 0; a < 3; ++a) {
        const double half = 0.5 * boxes(i, 3 + a) + margin;
        if (std::abs(sp_centers(j, a) - boxes(i, a)) > half) {
          out(i, j) = false;
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace mvseg
