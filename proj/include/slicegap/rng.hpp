#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace slicegap {

// 64-bit Mersenne Twister behind a narrow interface. Streams are reproducible
// for a fixed build; bit-exactness across standard libraries is not promised
// because the distribution adaptors are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return unit_(engine_); }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() { return normal_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

  // Uniform direction on the unit sphere in R^d (normalized Gaussian vector).
  Eigen::VectorXd unit_vector(int d);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finalizer; derives independent sub-seeds from one master seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace slicegap
