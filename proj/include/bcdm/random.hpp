#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace bcdm {

/// Per-chain random stream. Streams for different chains are derived from
/// (seed, stream index) through std::seed_seq, so chains never share state.
class Random {
 public:
  explicit Random(std::uint64_t seed, std::uint64_t stream = 0);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma with shape and rate (mean shape / rate).
  double gamma(double shape, double rate);
  double beta(double a, double b);
  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  /// Beta(a, b) restricted to [lo, hi], drawn by inverting the CDF.
  double truncated_beta(double a, double b, double lo, double hi);
  /// N(mean, sd^2) restricted to [lo, hi] (infinite bounds allowed), by CDF inversion.
  double truncated_normal(double mean, double sd, double lo, double hi);
  std::vector<double> dirichlet(std::span<const double> alpha);

  /// Draws an index with probability proportional to exp(log_weights).
  /// Weights are normalised once and the cumulative sum is inverted with a
  /// single uniform.
  std::size_t categorical_log(std::span<const double> log_weights);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bcdm
