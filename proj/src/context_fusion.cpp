#include "mvseg/context_fusion.hpp"

#include "mvseg/numerics.hpp"

#include <sstream>
#include <stdexcept>

namespace mvseg {

namespace {

Matrixd seeded_matrix(Index rows, Index cols, Rng& rng) {
  Matrixd m(rows, cols);
  const double s = 1.0 / std::sqrt(static_cast<double>(rows));
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-s, s);
  return m;
}

}  // namespace

Matrixd fuse_context(const Eigen::Ref<const Matrixd>& points, const PointDecoration& decorated,
                     const std::optional<Matrixd>& colors, const FusionConfig& cfg,
                     int threads) {
  const Index n = points.rows();
  if (decorated.features_2d.rows() != n)
    throw std::invalid_argument("fuse_context: decoration rows do not match point count");
  if (cfg.rounds < 0) throw std::invalid_argument("fuse_context: rounds must be >= 0");
  if (!(cfg.neighbor_radius > 0.0))
    throw std::invalid_argument("fuse_context: neighbor_radius must be positive");

  const Index c2d = decorated.features_2d.cols();
  const Index extra = 3 + (colors ? 3 : 0);

  // Min-max normalize coordinates per axis before concatenation.
  Matrixd xyz01(n, 3);
  for (int a = 0; a < 3; ++a) {
    const double lo = points.col(a).minCoeff();
    const double hi = points.col(a).maxCoeff();
    const double span = hi - lo;
    if (span < 1e-12)
      xyz01.col(a).setZero();
    else
      xyz01.col(a) = (points.col(a).array() - lo) / span;
  }

  Matrixd input(n, c2d + extra);
  input.leftCols(c2d) = decorated.features_2d;
  input.middleCols(c2d, 3) = xyz01;
  if (colors) input.rightCols(3) = *colors;

  Rng rng(derive_seed(cfg.seed, 0x0f5));
  Matrixd projection;
  if (cfg.projection == FusionConfig::Projection::IdentityFeatures) {
    if (c2d != cfg.feature_dim)
      throw std::invalid_argument(
          "fuse_context: identity projection needs matching 2D and output dims");
    projection = Matrixd::Zero(input.cols(), cfg.feature_dim);
    projection.topRows(c2d).setIdentity();
  } else {
    projection = seeded_matrix(input.cols(), cfg.feature_dim, rng);
  }
  Matrixd features = input * projection;

  if (cfg.rounds == 0) return features;

  const Matrixd w_self = seeded_matrix(cfg.feature_dim, cfg.feature_dim, rng);
  const Matrixd w_neigh = seeded_matrix(cfg.feature_dim, cfg.feature_dim, rng);
  const double r2 = cfg.neighbor_radius * cfg.neighbor_radius;

  for (int round = 0; round < cfg.rounds; ++round) {
    Matrixd next(n, cfg.feature_dim);
    parallel_for(n, threads, [&](Index begin, Index end) {
      for (Index i = begin; i < end; ++i) {
        Vectord acc = Vectord::Zero(cfg.feature_dim);
        Index count = 0;
        for (Index j = 0; j < n; ++j) {
          if ((points.row(j) - points.row(i)).squaredNorm() <= r2) {
            acc += features.row(j).transpose();
            ++count;
          }
        }
        // The neighborhood always contains the point itself.
        const Vectord mean = acc / static_cast<double>(count);
        next.row(i) = (w_self * features.row(i).transpose() + w_neigh * mean).transpose();
      }
    });
    features = std::move(next);
  }
  return features;
}

SuperpointFeatures pool_superpoints(const Eigen::Ref<const Matrixd>& features,
                                    const Eigen::Ref<const Matrixd>& points,
                                    const Vectori& labels) {
  const Index n = features.rows();
  if (points.rows() != n || labels.size() != n)
    throw std::invalid_argument("pool_superpoints: row counts disagree");
  if (n == 0) throw std::invalid_argument("pool_superpoints: empty input");
  if (labels.minCoeff() < 0) throw std::invalid_argument("pool_superpoints: negative label");

  const Index s_count = labels.maxCoeff() + 1;
  SuperpointFeatures out;
  out.features = Matrixd::Zero(s_count, features.cols());
  out.centers = Matrixd::Zero(s_count, 3);
  out.sizes = Vectori::Zero(s_count);

  for (Index i = 0; i < n; ++i) {
    const Index s = labels(i);
    out.features.row(s) += features.row(i);
    out.centers.row(s) += points.row(i);
    out.sizes(s)++;
  }
  for (Index s = 0; s < s_count; ++s) {
    if (out.sizes(s) == 0) {
      std::ostringstream msg;
      msg << "pool_superpoints: label " << s << " owns no point";
      throw std::invalid_argument(msg.str());
    }
    out.features.row(s) /= static_cast<double>(out.sizes(s));
    out.centers.row(s) /= static_cast<double>(out.sizes(s));
  }
  return out;
}

}  // namespace mvseg
