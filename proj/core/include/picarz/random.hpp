#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace picarz {

/// SplitMix64 finalizer. Used to derive independent stream seeds from one
/// root seed so that any (root, stream) pair is reproducible in isolation.
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream);

/// Seeded generator. All randomness in the library flows through this type.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// Child generator for stream `stream`; does not advance this generator.
  Rng split(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return normal_(engine_); }
  Eigen::VectorXd normal_vector(Eigen::Index n);
  bool bernoulli(double p) { return uniform() < p; }
  /// Gamma with shape/rate parameterization.
  double gamma(double shape, double rate);
  long poisson(double mean);
  /// Poisson conditioned on being positive.
  long zero_truncated_poisson(double mean);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace picarz
