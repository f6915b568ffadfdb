#include "slicegap/rng.hpp"

#include <cmath>

namespace slicegap {

Eigen::VectorXd Rng::unit_vector(int d) {
  Eigen::VectorXd v(d);
  double n2 = 0.0;
  do {
    for (int i = 0; i < d; ++i) v[i] = normal();
    n2 = v.squaredNorm();
  } while (n2 == 0.0);
  return v / std::sqrt(n2);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace slicegap
