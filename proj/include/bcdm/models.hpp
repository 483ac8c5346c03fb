#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "bcdm/core.hpp"

namespace bcdm {

enum class ModelKind { Dina, Rdina, Dino, Llm, Rrum, Lcdm, RpaDina, HoDina, TestletDina, LongDina };

std::string_view to_string(ModelKind kind);
/// Accepts the names used in run configurations: dina, rdina, dino, llm,
/// rrum, lcdm, rpa-dina, ho-dina, testlet-dina, long-dina.
ModelKind parse_model_kind(std::string_view name);

enum class CondensationRule { Conjunctive, Disjunctive, Polytomous, Additive };
CondensationRule condensation_rule(ModelKind kind);

/// Bit k set means attribute k (0-based) belongs to the set. Limits K to 32.
using AttributeSet = std::uint32_t;

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

/// log(logistic(x)) without overflow or cancellation.
inline double log_logistic(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// ---------------------------------------------------------------------------
// Item parameter sets. Constructors reject values that violate the model's
// monotonicity or range constraints.

struct DinaParams {
  std::vector<double> slip;
  std::vector<double> guess;

  DinaParams(std::vector<double> slip, std::vector<double> guess);
  std::size_t n_items() const { return slip.size(); }
};

struct RdinaParams {
  std::vector<double> intercept;
  std::vector<double> kway;

  RdinaParams(std::vector<double> intercept, std::vector<double> kway);
  std::size_t n_items() const { return intercept.size(); }
};

/// Main effects are I x K; entries where q_ik = 0 are ignored.
struct LlmParams {
  std::vector<double> intercept;
  Eigen::MatrixXd main;

  LlmParams(std::vector<double> intercept, Eigen::MatrixXd main);
  std::size_t n_items() const { return intercept.size(); }
};

/// Penalties are I x K; entries where q_ik = 0 are stored but inert.
struct RrumParams {
  std::vector<double> baseline;
  Eigen::MatrixXd penalty;

  RrumParams(std::vector<double> baseline, Eigen::MatrixXd penalty);
  std::size_t n_items() const { return baseline.size(); }
};

/// Effects keyed by attribute subset; singletons are main effects.
struct LcdmParams {
  std::vector<double> intercept;
  std::vector<std::map<AttributeSet, double>> effects;

  LcdmParams(std::vector<double> intercept, std::vector<std::map<AttributeSet, double>> effects);
  std::size_t n_items() const { return intercept.size(); }
};

/// Testlet index used for items outside every testlet.
inline constexpr int kStandalone = -1;

struct TestletParams {
  RdinaParams rdina;
  Eigen::MatrixXd gamma;             // persons x testlets
  std::vector<double> sigma2_gamma;  // per testlet
  std::vector<int> testlet_ids;      // per item: 0-based testlet or kStandalone

  TestletParams(RdinaParams rdina, Eigen::MatrixXd gamma, std::vector<double> sigma2_gamma,
                std::vector<int> testlet_ids);
  std::size_t n_testlets() const { return sigma2_gamma.size(); }
};

/// Converts 1-based testlet labels d(i) to 0-based testlet indices. Labels
/// above n_testlets (the conventional M+1 slot) mark standalone items.
std::vector<int> testlet_indices_from_labels(std::span<const int> labels, int n_testlets);

// ---------------------------------------------------------------------------
// Response probability kernels.

double prob_dina(int eta, const DinaParams& p, std::size_t item);
double prob_rdina(int eta, const RdinaParams& p, std::size_t item);

struct GuessSlip {
  double guess;
  double slip;
};
GuessSlip rdina_to_sg(const RdinaParams& p, std::size_t item);

double prob_llm(std::span<const int> alpha, std::span<const int> q_row, const LlmParams& p,
                std::size_t item);
double prob_rrum(std::span<const int> alpha, std::span<const int> q_row, const RrumParams& p,
                 std::size_t item);
double prob_lcdm(std::span<const int> alpha, std::span<const int> q_row, const LcdmParams& p,
                 std::size_t item);
double prob_rpa_dina(std::span<const int> alpha, std::span<const int> q_row, const DinaParams& p,
                     std::size_t item);
double prob_testlet_rdina(int eta, const TestletParams& p, std::size_t person, std::size_t item);

using ModelParams =
    std::variant<DinaParams, RdinaParams, LlmParams, RrumParams, LcdmParams, TestletParams>;

/// Probability of a correct response of `person` to `item` given the
/// person's attribute vector on the item's occasion.
double response_probability(ModelKind kind, const ModelParams& params, std::span<const int> alpha,
                            std::span<const int> q_row, std::size_t person, std::size_t item);

/// Bernoulli log-likelihood of Y. `alpha` holds one row per person with K
/// columns per occasion; `item_occasion` (0-based, empty = all 0) selects the
/// block used for each item. Returns -inf when a response has probability 0;
/// throws std::domain_error if a probability is NaN.
double log_likelihood(ModelKind kind, const ModelParams& params, const IntMatrix& alpha,
                      const ResponseMatrix& y, const QMatrix& q,
                      std::span<const int> item_occasion = {});

}  // namespace bcdm
