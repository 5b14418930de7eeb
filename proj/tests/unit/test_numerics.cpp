#include "mvseg/numerics.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace mvseg;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("masked_softmax matches hand values") {
  Matrixd logits(3, 2);
  logits << 0.0, 0.0, 0.0, 0.0, std::log(2.0), 0.0;
  Matrixd mask(3, 2);
  mask << 0.0, 0.0, 0.0, -kInf, 0.0, 0.0;
  const Matrixd out = masked_softmax(logits, mask);
  CHECK(out(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out(1, 1) == 0.0);  // masked entries are exact zeros
  CHECK(out(2, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(out(2, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("masked_softmax shape mismatch throws") {
  CHECK_THROWS_AS(masked_softmax(Matrixd::Zero(2, 3), Matrixd::Zero(3, 2)),
                  std::invalid_argument);
}

TEST_CASE("masked_softmax fully blocked rows fall back to raw logits") {
  Matrixd logits(1, 3);
  logits << 1.0, 2.0, 3.0;
  const Matrixd mask = Matrixd::Constant(1, 3, -kInf);
  const Matrixd out = masked_softmax(logits, mask);
  const Matrixd plain = masked_softmax(logits, Matrixd::Zero(1, 3));
  CHECK((out - plain).cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("masked_softmax fuzz: convex rows, exact zeros, no NaN") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng.uniform_int(6));
    const Index cols = 1 + static_cast<Index>(rng.uniform_int(8));
    Matrixd logits(rows, cols), mask(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) {
        logits(i, j) = rng.uniform(-40.0, 40.0);
        mask(i, j) = rng.uniform() < 0.35 ? -kInf : 0.0;
      }
    // Sprinkle fully blocked rows.
    if (rows > 1) mask.row(0).setConstant(-kInf);
    const Matrixd out = masked_softmax(logits, mask);
    for (Index i = 0; i < rows; ++i) {
      CHECK(out.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
      for (Index j = 0; j < cols; ++j) {
        CHECK(std::isfinite(out(i, j)));
        CHECK(out(i, j) >= 0.0);
        const bool row_open = (mask.row(i).array() > -kInf).any();
        if (row_open && mask(i, j) == -kInf) CHECK(out(i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("sinusoidal_pe closed form") {
  PEConfig cfg;  // dims 128, temperature 20

  SUBCASE("x = 0 alternates 0, 1") {
    const Vectord pe = sinusoidal_pe(0.0, cfg);
    for (Index i = 0; i < cfg.dims_per_axis / 2; ++i) {
      CHECK(pe(2 * i) == 0.0);
      CHECK(pe(2 * i + 1) == 1.0);
    }
  }

  SUBCASE("self-dot equals dims/2 for random inputs") {
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
      const double x = rng.uniform();
      const Vectord pe = sinusoidal_pe(x, cfg);
      CHECK(pe.dot(pe) == doctest::Approx(64.0).epsilon(1e-12));
    }
  }

  SUBCASE("first pair at x = 0.5 is sin/cos of 0.5") {
    const Vectord pe = sinusoidal_pe(0.5, cfg);
    CHECK(pe(0) == doctest::Approx(std::sin(0.5)).epsilon(1e-15));
    CHECK(pe(1) == doctest::Approx(std::cos(0.5)).epsilon(1e-15));
    CHECK(pe(0) == doctest::Approx(0.4794).epsilon(1e-4));
    CHECK(pe(1) == doctest::Approx(0.8776).epsilon(1e-4));
  }

  SUBCASE("invalid configs throw") {
    PEConfig odd;
    odd.dims_per_axis = 7;
    CHECK_THROWS_AS(sinusoidal_pe(0.0, odd), std::invalid_argument);
    PEConfig bad_temp;
    bad_temp.temperature = 0.0;
    CHECK_THROWS_AS(sinusoidal_pe(0.0, bad_temp), std::invalid_argument);
  }
}

TEST_CASE("bilinear_sample basics") {
  Matrixd grid(2, 2);
  // (u,v): value 0 at (0,0), 1 at (1,0), 2 at (0,1), 3 at (1,1)
  grid << 0.0, 1.0, 2.0, 3.0;

  CHECK(bilinear_sample(grid, 0.5, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(bilinear_sample(grid, 1.0, 0.0) == 1.0);
  CHECK(bilinear_sample(grid, 0.0, 1.0) == 2.0);
  CHECK_THROWS_AS(bilinear_sample(grid, -0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(bilinear_sample(grid, 0.0, 2.0), std::invalid_argument);
}

TEST_CASE("bilinear_sample agrees with an independent interpolation") {
  // Oracle: evaluate the blend from explicit corner weights.
  const auto oracle = [](const Matrixd& g, double u, double v) {
    const Index x0 = std::min<Index>(static_cast<Index>(std::floor(u)), g.cols() - 1);
    const Index y0 = std::min<Index>(static_cast<Index>(std::floor(v)), g.rows() - 1);
    const Index x1 = std::min<Index>(x0 + 1, g.cols() - 1);
    const Index y1 = std::min<Index>(y0 + 1, g.rows() - 1);
    const double a = u - static_cast<double>(x0);
    const double b = v - static_cast<double>(y0);
    const double w00 = (1 - a) * (1 - b), w10 = a * (1 - b), w01 = (1 - a) * b, w11 = a * b;
    return w00 * g(y0, x0) + w10 * g(y0, x1) + w01 * g(y1, x0) + w11 * g(y1, x1);
  };
  Rng rng(99);
  Matrixd grid(4, 4);
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 4; ++c) grid(r, c) = rng.uniform(-5.0, 5.0);
  for (int t = 0; t < 20; ++t) {
    const double u = rng.uniform(0.0, 4.0 - 1e-9);
    const double v = rng.uniform(0.0, 4.0 - 1e-9);
    CHECK(std::abs(bilinear_sample(grid, u, v) - oracle(grid, u, v)) < 1e-12);
  }
}

TEST_CASE("bilinear_sample is linear in the grid values") {
  Rng rng(4242);
  Matrixd a(3, 5), b(3, 5);
  for (Index r = 0; r < 3; ++r)
    for (Index c = 0; c < 5; ++c) {
      a(r, c) = rng.uniform(-2.0, 2.0);
      b(r, c) = rng.uniform(-2.0, 2.0);
    }
  for (int t = 0; t < 50; ++t) {
    const double alpha = rng.uniform(-3.0, 3.0);
    const double beta = rng.uniform(-3.0, 3.0);
    const double u = rng.uniform(0.0, 5.0 - 1e-9);
    const double v = rng.uniform(0.0, 3.0 - 1e-9);
    const Matrixd mix = alpha * a + beta * b;
    const double lhs = bilinear_sample(mix, u, v);
    const double rhs = alpha * bilinear_sample(a, u, v) + beta * bilinear_sample(b, u, v);
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("bilinear_sample_rows blends channel rows") {
  Matrixd pixels(4, 2);  // 2x2 grid, 2 channels
  pixels << 0.0, 10.0, 1.0, 20.0, 2.0, 30.0, 3.0, 40.0;
  const Vectord mid = bilinear_sample_rows(pixels, 2, 2, 0.5, 0.5);
  CHECK(mid(0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(mid(1) == doctest::Approx(25.0).epsilon(1e-15));
}

TEST_CASE("perceptron zero and identity configurations") {
  const Matrixd x = (Matrixd(2, 3) << 1.0, -2.0, 3.0, 0.5, 0.0, -1.0).finished();

  const auto zero = Perceptrond::zero(3, 4, 2);
  const Matrixd y0 = zero.forward(x);
  CHECK(y0.rows() == 2);
  CHECK(y0.cols() == 2);
  CHECK(y0.isZero(0.0));

  const auto id = Perceptrond::identity(3);
  CHECK((id.forward(x) - x).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(zero.forward(Matrixd::Zero(2, 4)), std::invalid_argument);
}

TEST_CASE("perceptron seeded construction is deterministic") {
  const auto a = Perceptrond::seeded(5, 7, 3, 42);
  const auto b = Perceptrond::seeded(5, 7, 3, 42);
  Rng rng(1);
  Matrixd x(4, 5);
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 5; ++c) x(r, c) = rng.uniform(-1.0, 1.0);
  const Matrixd ya = a.forward(x);
  const Matrixd yb = b.forward(x);
  CHECK((ya - yb).cwiseAbs().maxCoeff() == 0.0);

  const auto other = Perceptrond::seeded(5, 7, 3, 43);
  CHECK((ya - other.forward(x)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("numerics templates instantiate for float") {
  MatX<float> logits = MatX<float>::Zero(2, 2);
  MatX<float> mask = MatX<float>::Zero(2, 2);
  const MatX<float> out = masked_softmax(logits, mask);
  CHECK(out(0, 0) == doctest::Approx(0.5f));
  PEConfig cfg;
  cfg.dims_per_axis = 8;
  const VecX<float> pe = sinusoidal_pe(0.25f, cfg);
  CHECK(pe.dot(pe) == doctest::Approx(4.0f).epsilon(1e-5));
}
