#pragma once

#include "mvseg/scene.hpp"
#include "mvseg/view_sampling.hpp"

#include <optional>

namespace mvseg {

struct FusionConfig {
  int rounds = 2;
  double neighbor_radius = 0.3;
  Index feature_dim = 32;
  uint64_t seed = 0;
  // IdentityFeatures passes the decorated 2D features straight through the
  // projection (requires matching dims); Seeded mixes xyz/color in through
  // a random linear map.
  enum class Projection { Seeded, IdentityFeatures } projection = Projection::Seeded;
};

// Reference context mixer behind the (points, features) -> features
// interface: a linear input projection followed by `rounds` iterations of
// radius-neighborhood mean aggregation blended with each point's own
// feature through seeded linear maps. rounds = 0 returns the projection.
Matrixd fuse_context(const Eigen::Ref<const Matrixd>& points, const PointDecoration& decorated,
                     const std::optional<Matrixd>& colors, const FusionConfig& cfg,
                     int threads = 1);

struct SuperpointFeatures {
  Matrixd features;  // S x C
  Matrixd centers;   // S x 3, arithmetic mean of member points
  Vectori sizes;     // S, member counts summing to N
};

// Average-pools per dense superpoint label; throws when a label in [0, S)
// owns no point.
SuperpointFeatures pool_superpoints(const Eigen::Ref<const Matrixd>& features,
                                    const Eigen::Ref<const Matrixd>& points,
                                    const Vectori& labels);

}  // namespace mvseg
