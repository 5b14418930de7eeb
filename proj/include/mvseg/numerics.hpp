#pragma once

#include "mvseg/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mvseg {

// Logits are clamped to +/-50 before exponentiation so every sigmoid and
// softmax stays finite.
inline constexpr double kLogitClamp = 50.0;

template <class Scalar>
Scalar sigmoid(Scalar x) {
  const Scalar c = static_cast<Scalar>(kLogitClamp);
  x = std::clamp(x, -c, c);
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

// Row softmax under an additive 0 / -inf mask. Masked entries come out as
// exact zeros. A row whose mask blocks every column falls back to a plain
// softmax over its raw logits, so no row is ever NaN.
template <class DL, class DM>
MatX<typename DL::Scalar> masked_softmax(const Eigen::MatrixBase<DL>& logits,
                                         const Eigen::MatrixBase<DM>& mask) {
  using Scalar = typename DL::Scalar;
  if (logits.rows() != mask.rows() || logits.cols() != mask.cols()) {
    std::ostringstream msg;
    msg << "masked_softmax: shape mismatch, logits " << logits.rows() << "x"
        << logits.cols() << " vs mask " << mask.rows() << "x" << mask.cols();
    throw std::invalid_argument(msg.str());
  }
  const Index rows = logits.rows();
  const Index cols = logits.cols();
  MatX<Scalar> out(rows, cols);
  const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < rows; ++i) {
    bool any_open = false;
    for (Index j = 0; j < cols; ++j) {
      if (mask(i, j) > neg_inf) {
        any_open = true;
        break;
      }
    }
    Scalar row_max = neg_inf;
    for (Index j = 0; j < cols; ++j) {
      const Scalar z = any_open ? logits(i, j) + mask(i, j) : logits(i, j);
      if (z > row_max) row_max = z;
    }
    Scalar sum = Scalar(0);
    for (Index j = 0; j < cols; ++j) {
      const Scalar z = any_open ? logits(i, j) + mask(i, j) : logits(i, j);
      const Scalar e = (z == neg_inf) ? Scalar(0) : std::exp(z - row_max);
      out(i, j) = e;
      sum += e;
    }
    out.row(i) /= sum;
  }
  return out;
}

struct PEConfig {
  Index dims_per_axis = 128;
  double temperature = 20.0;

  void validate() const {
    if (dims_per_axis <= 0 || dims_per_axis % 2 != 0)
      throw std::invalid_argument("PEConfig: dims_per_axis must be positive and even");
    if (!(temperature > 0.0))
      throw std::invalid_argument("PEConfig: temperature must be positive");
  }
};

// Interleaved sin/cos encoding of one scalar coordinate: pair i holds
// sin(x / T^(2i/D)) and cos(x / T^(2i/D)). Self-dot is D/2 for every x.
template <class Scalar>
VecX<Scalar> sinusoidal_pe(Scalar x, const PEConfig& cfg) {
  cfg.validate();
  VecX<Scalar> out(cfg.dims_per_axis);
  for (Index i = 0; i < cfg.dims_per_axis / 2; ++i) {
    const double expo = static_cast<double>(2 * i) / static_cast<double>(cfg.dims_per_axis);
    const Scalar scale = static_cast<Scalar>(std::pow(cfg.temperature, expo));
    out(2 * i) = std::sin(x / scale);
    out(2 * i + 1) = std::cos(x / scale);
  }
  return out;
}

// One encoding per row of xs.
template <class Scalar>
MatX<Scalar> sinusoidal_pe_rows(const VecX<Scalar>& xs, const PEConfig& cfg) {
  cfg.validate();
  MatX<Scalar> out(xs.size(), cfg.dims_per_axis);
  for (Index r = 0; r < xs.size(); ++r) out.row(r) = sinusoidal_pe(xs(r), cfg).transpose();
  return out;
}

namespace detail {

struct BilinearCell {
  Index x0, x1, y0, y1;
  double fx, fy;
};

inline BilinearCell bilinear_cell(Index h, Index w, double u, double v) {
  if (!(u >= 0.0 && u < static_cast<double>(w) && v >= 0.0 && v < static_cast<double>(h))) {
    std::ostringstream msg;
    msg << "bilinear_sample: (" << u << ", " << v << ") outside grid " << w << "x" << h;
    throw std::invalid_argument(msg.str());
  }
  BilinearCell c;
  c.x0 = std::min<Index>(static_cast<Index>(std::floor(u)), w - 1);
  c.y0 = std::min<Index>(static_cast<Index>(std::floor(v)), h - 1);
  c.x1 = std::min<Index>(c.x0 + 1, w - 1);
  c.y1 = std::min<Index>(c.y0 + 1, h - 1);
  c.fx = u - static_cast<double>(c.x0);
  c.fy = v - static_cast<double>(c.y0);
  return c;
}

}  // namespace detail

// Bilinear blend of the four cells around (u, v); u indexes columns, v rows.
// Integer coordinates return the stored value exactly; the last row/column
// extends flat up to (w, h).
template <class D>
typename D::Scalar bilinear_sample(const Eigen::MatrixBase<D>& grid, double u, double v) {
  using Scalar = typename D::Scalar;
  const auto c = detail::bilinear_cell(grid.rows(), grid.cols(), u, v);
  const Scalar top = static_cast<Scalar>((1.0 - c.fx)) * grid(c.y0, c.x0) +
                     static_cast<Scalar>(c.fx) * grid(c.y0, c.x1);
  const Scalar bot = static_cast<Scalar>((1.0 - c.fx)) * grid(c.y1, c.x0) +
                     static_cast<Scalar>(c.fx) * grid(c.y1, c.x1);
  return static_cast<Scalar>((1.0 - c.fy)) * top + static_cast<Scalar>(c.fy) * bot;
}

// Same blend for a multi-channel grid stored as one row per pixel
// (row-major over pixels: row r*w + c), producing a C-vector.
template <class Scalar>
VecX<Scalar> bilinear_sample_rows(const MatX<Scalar>& pixel_rows, Index h, Index w,
                                  double u, double v) {
  if (pixel_rows.rows() != h * w)
    throw std::invalid_argument("bilinear_sample_rows: pixel count does not match h*w");
  const auto c = detail::bilinear_cell(h, w, u, v);
  VecX<Scalar> top = static_cast<Scalar>(1.0 - c.fx) * pixel_rows.row(c.y0 * w + c.x0) +
                     static_cast<Scalar>(c.fx) * pixel_rows.row(c.y0 * w + c.x1);
  VecX<Scalar> bot = static_cast<Scalar>(1.0 - c.fx) * pixel_rows.row(c.y1 * w + c.x0) +
                     static_cast<Scalar>(c.fx) * pixel_rows.row(c.y1 * w + c.x1);
  return static_cast<Scalar>(1.0 - c.fy) * top + static_cast<Scalar>(c.fy) * bot;
}

// Two affine layers with tanh between them. Construction is fully seeded:
// the same seed and dims always yield bit-identical parameters.
template <class Scalar>
class Perceptron {
 public:
  Perceptron() = default;

  static Perceptron seeded(Index input_dim, Index hidden_dim, Index output_dim,
                           uint64_t seed) {
    Perceptron p(input_dim, hidden_dim, output_dim);
    Rng rng(seed);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    auto fill = [&rng](MatX<Scalar>& m, double s) {
      for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c)
          m(r, c) = static_cast<Scalar>(rng.uniform(-s, s));
    };
    auto fill_vec = [&rng](VecX<Scalar>& v, double s) {
      for (Index r = 0; r < v.size(); ++r) v(r) = static_cast<Scalar>(rng.uniform(-s, s));
    };
    fill(p.w1_, s1);
    fill_vec(p.b1_, s1);
    fill(p.w2_, s2);
    fill_vec(p.b2_, s2);
    return p;
  }

  static Perceptron zero(Index input_dim, Index hidden_dim, Index output_dim) {
    return Perceptron(input_dim, hidden_dim, output_dim);
  }

  // Square pass-through: identity weights, zero biases, nonlinearity bypassed.
  static Perceptron identity(Index dims) {
    Perceptron p(dims, dims, dims);
    p.w1_.setIdentity();
    p.w2_.setIdentity();
    p.linear_bypass_ = true;
    return p;
  }

  Index input_dim() const { return w1_.rows(); }
  Index hidden_dim() const { return w1_.cols(); }
  Index output_dim() const { return w2_.cols(); }
  bool is_zero() const { return w1_.isZero(0) && w2_.isZero(0) && b1_.isZero(0) && b2_.isZero(0); }

  MatX<Scalar> forward(const MatX<Scalar>& x) const {
    if (x.cols() != input_dim()) {
      std::ostringstream msg;
      msg << "Perceptron::forward: input has " << x.cols() << " columns, expected "
          << input_dim();
      throw std::invalid_argument(msg.str());
    }
    MatX<Scalar> h = (x * w1_).rowwise() + b1_.transpose();
    if (!linear_bypass_) h = h.array().tanh().matrix();
    return (h * w2_).rowwise() + b2_.transpose();
  }

 private:
  Perceptron(Index input_dim, Index hidden_dim, Index output_dim)
      : w1_(MatX<Scalar>::Zero(input_dim, hidden_dim)),
        b1_(VecX<Scalar>::Zero(hidden_dim)),
        w2_(MatX<Scalar>::Zero(hidden_dim, output_dim)),
        b2_(VecX<Scalar>::Zero(output_dim)) {}

  MatX<Scalar> w1_;
  VecX<Scalar> b1_;
  MatX<Scalar> w2_;
  VecX<Scalar> b2_;
  bool linear_bypass_ = false;
};

using Perceptrond = Perceptron<double>;

}  // namespace mvseg
