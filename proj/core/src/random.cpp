#include "picarz/random.hpp"

#include <cmath>

#include "picarz/error.hpp"

namespace picarz {

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Eigen::VectorXd Rng::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
  return v;
}

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw InputError("gamma: shape and rate must be positive");
  return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
}

long Rng::poisson(double mean) {
  if (!(mean >= 0.0)) throw InputError("poisson: mean must be non-negative");
  if (mean == 0.0) return 0;
  return std::poisson_distribution<long>(mean)(engine_);
}

long Rng::zero_truncated_poisson(double mean) {
  if (!(mean > 0.0)) throw InputError("zero_truncated_poisson: mean must be positive");
  if (mean > 1.0) {
    // Acceptance probability 1 - e^{-mean} > 0.63.
    for (;;) {
      const long k = std::poisson_distribution<long>(mean)(engine_);
      if (k > 0) return k;
    }
  }
  // Inverse CDF on the truncated law: P(K = k) = mean^k e^{-mean} / (k! (1 - e^{-mean})).
  const double norm = -std::expm1(-mean);
  double u = uniform() * norm;
  double pk = mean * std::exp(-mean);
  long k = 1;
  while (u > pk && k < 1000) {
    u -= pk;
    ++k;
    pk *= mean / static_cast<double>(k);
  }
  return k;
}

}  // namespace picarz
