#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace mvseg {

using Index = Eigen::Index;

// Row-major dense storage so arrays map 1:1 onto the on-disk blob layout.
template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrixd = MatX<double>;
using MatrixXb = MatX<bool>;
using Vectord = VecX<double>;
using Vectori = VecX<int>;
using Vectorb = VecX<bool>;
using Vector3d = Eigen::Vector3d;
using Vector6d = Eigen::Matrix<double, 6, 1>;

// Malformed or inconsistent external data (bundles, configs, prediction
// files). The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A detection whose mask contains no backprojectable pixel.
class NoGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scene layout could not be satisfied within the retry budget.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Decorrelates the per-stage RNG streams that hang off one master seed.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 1));
}

// Deterministic uniform source. std::mt19937_64 is bit-stable across
// platforms; the standard distributions are not, so they are hand-rolled.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

  // Standard normal via Box-Muller; uses a cached second value.
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * EIGEN_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  // First k entries of a seeded permutation of [0, n), in draw order.
  std::vector<Index> sample_without_replacement(Index n, Index k) {
    std::vector<Index> pool(static_cast<size_t>(n));
    for (Index i = 0; i < n; ++i) pool[static_cast<size_t>(i)] = i;
    if (k > n) k = n;
    for (Index i = 0; i < k; ++i) {
      const Index j = i + static_cast<Index>(uniform_int(static_cast<uint64_t>(n - i)));
      std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    }
    pool.resize(static_cast<size_t>(k));
    return pool;
  }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// Quantizes through binary32 so generated arrays survive the 32-bit
// on-disk format bit-exactly.
inline double float32_round(double v) { return static_cast<double>(static_cast<float>(v)); }

// Runs fn over contiguous chunks of [0, n). Chunks write disjoint outputs,
// so results are identical for any thread count.
inline void parallel_for(Index n, int threads,
                         const std::function<void(Index, Index)>& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n < 2 * threads) {
    fn(0, n);
    return;
  }
  const Index chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (Index begin = 0; begin < n; begin += chunk) {
    const Index end = std::min(n, begin + chunk);
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mvseg
