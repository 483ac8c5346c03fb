#include "bcdm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

namespace bcdm {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9U};
  return std::mt19937_64(seq);
}

}  // namespace

Random::Random(std::uint64_t seed, std::uint64_t stream) : engine_(seeded_engine(seed, stream)) {}

double Random::uniform() {
  // 53 random bits mapped to the centre of each of 2^53 cells: never 0 or 1.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Random::normal() { return normal_(engine_); }

double Random::gamma(double shape, double rate) {
  if (!(shape > 0.0 && rate > 0.0)) throw std::invalid_argument("gamma needs shape, rate > 0");
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(engine_);
}

double Random::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  if (x + y == 0.0) return uniform() < a / (a + b) ? 1.0 : 0.0;
  return x / (x + y);
}

double Random::truncated_beta(double a, double b, double lo, double hi) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("beta needs a, b > 0");
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0);
  if (!(lo < hi)) throw std::invalid_argument("empty truncation region for beta draw");
  namespace bm = boost::math;
  const double u = uniform();
  // Work on whichever tail keeps the region's CDF mass well conditioned.
  const double f_lo = lo > 0.0 ? bm::ibeta(a, b, lo) : 0.0;
  double x;
  if (f_lo < 0.5) {
    const double f_hi = hi < 1.0 ? bm::ibeta(a, b, hi) : 1.0;
    const double target = f_lo + u * (f_hi - f_lo);
    x = f_hi - f_lo > 0.0 ? bm::ibeta_inv(a, b, target) : lo + u * (hi - lo);
  } else {
    const double q_lo = bm::ibetac(a, b, lo);
    const double q_hi = hi < 1.0 ? bm::ibetac(a, b, hi) : 0.0;
    const double target = q_lo - u * (q_lo - q_hi);
    x = q_lo - q_hi > 0.0 ? bm::ibetac_inv(a, b, target) : lo + u * (hi - lo);
  }
  return std::clamp(x, lo, hi);
}

double Random::truncated_normal(double mean, double sd, double lo, double hi) {
  if (!(sd > 0.0)) throw std::invalid_argument("normal needs sd > 0");
  if (!(lo < hi)) throw std::invalid_argument("empty truncation region for normal draw");
  namespace bm = boost::math;
  const bm::normal_distribution<double> std_normal(0.0, 1.0);
  const double a = (lo - mean) / sd, b = (hi - mean) / sd;
  const double u = uniform();
  double z;
  if (a > 0.0) {
    // Entirely in the upper tail: invert the survival function.
    const double q_a = bm::cdf(bm::complement(std_normal, a));
    const double q_b = std::isinf(b) ? 0.0 : bm::cdf(bm::complement(std_normal, b));
    const double target = q_a - u * (q_a - q_b);
    z = target > 0.0 ? bm::quantile(bm::complement(std_normal, target)) : a;
  } else {
    const double f_a = std::isinf(a) ? 0.0 : bm::cdf(std_normal, a);
    const double f_b = std::isinf(b) ? 1.0 : bm::cdf(std_normal, b);
    const double target = f_a + u * (f_b - f_a);
    z = target > 0.0 && target < 1.0 ? bm::quantile(std_normal, target) : (std::isinf(b) ? a : b);
  }
  return std::clamp(mean + sd * z, lo, hi);
}

std::vector<double> Random::dirichlet(std::span<const double> alpha) {
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t c = 0; c < alpha.size(); ++c) {
    out[c] = gamma(alpha[c], 1.0);
    total += out[c];
  }
  if (total <= 0.0) {
    // Every component underflowed; fall back to the largest shape.
    const auto best = std::max_element(alpha.begin(), alpha.end()) - alpha.begin();
    std::fill(out.begin(), out.end(), 0.0);
    out[static_cast<std::size_t>(best)] = 1.0;
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

std::size_t Random::categorical_log(std::span<const double> log_weights) {
  if (log_weights.empty()) throw std::invalid_argument("categorical draw over no categories");
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(top)) throw std::domain_error("all categorical weights are zero");
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - top);
  const double target = uniform() * total;
  double running = 0.0;
  for (std::size_t c = 0; c < log_weights.size(); ++c) {
    running += std::exp(log_weights[c] - top);
    if (target < running) return c;
  }
  // Rounding left the target past the last partial sum: take the last
  // category with positive weight.
  for (std::size_t c = log_weights.size(); c-- > 0;) {
    if (std::isfinite(log_weights[c])) return c;
  }
  return log_weights.size() - 1;
}

}  // namespace bcdm
