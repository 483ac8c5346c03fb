#include "bcdm/models.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace bcdm {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Dina: return "dina";
    case ModelKind::Rdina: return "rdina";
    case ModelKind::Dino: return "dino";
    case ModelKind::Llm: return "llm";
    case ModelKind::Rrum: return "rrum";
    case ModelKind::Lcdm: return "lcdm";
    case ModelKind::RpaDina: return "rpa-dina";
    case ModelKind::HoDina: return "ho-dina";
    case ModelKind::TestletDina: return "testlet-dina";
    case ModelKind::LongDina: return "long-dina";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto kind : {ModelKind::Dina, ModelKind::Rdina, ModelKind::Dino, ModelKind::Llm,
                    ModelKind::Rrum, ModelKind::Lcdm, ModelKind::RpaDina, ModelKind::HoDina,
                    ModelKind::TestletDina, ModelKind::LongDina}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

CondensationRule condensation_rule(ModelKind kind) {
  switch (kind) {
    case ModelKind::Dino: return CondensationRule::Disjunctive;
    case ModelKind::RpaDina: return CondensationRule::Polytomous;
    case ModelKind::Llm:
    case ModelKind::Rrum:
    case ModelKind::Lcdm: return CondensationRule::Additive;
    default: return CondensationRule::Conjunctive;
  }
}

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

void require_item(std::size_t item, std::size_t n) {
  if (item >= n) throw std::out_of_range("item index out of range");
}

}  // namespace

DinaParams::DinaParams(std::vector<double> s, std::vector<double> g)
    : slip(std::move(s)), guess(std::move(g)) {
  require_same_size(slip.size(), guess.size(), "DinaParams");
  for (std::size_t i = 0; i < slip.size(); ++i) {
    const double s_i = slip[i], g_i = guess[i];
    if (!(s_i >= 0.0 && g_i >= 0.0 && s_i <= 1.0 && g_i < 1.0 - s_i)) {
      throw std::invalid_argument("item " + std::to_string(i + 1) +
                                  " violates 0 <= g < 1 - s <= 1");
    }
  }
}

RdinaParams::RdinaParams(std::vector<double> l0, std::vector<double> lk)
    : intercept(std::move(l0)), kway(std::move(lk)) {
  require_same_size(intercept.size(), kway.size(), "RdinaParams");
  for (std::size_t i = 0; i < kway.size(); ++i) {
    if (!(kway[i] >= 0.0) || !std::isfinite(intercept[i])) {
      throw std::invalid_argument("item " + std::to_string(i + 1) +
                                  " needs a finite intercept and a non-negative K-way effect");
    }
  }
}

LlmParams::LlmParams(std::vector<double> l0, Eigen::MatrixXd m)
    : intercept(std::move(l0)), main(std::move(m)) {
  require_same_size(intercept.size(), static_cast<std::size_t>(main.rows()), "LlmParams");
  if (!(main.array() >= 0.0).all()) {
    throw std::invalid_argument("LLM main effects must be non-negative");
  }
}

RrumParams::RrumParams(std::vector<double> base, Eigen::MatrixXd pen)
    : baseline(std::move(base)), penalty(std::move(pen)) {
  require_same_size(baseline.size(), static_cast<std::size_t>(penalty.rows()), "RrumParams");
  for (double b : baseline) {
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("rRUM baseline outside [0, 1]");
  }
  if (!((penalty.array() >= 0.0) && (penalty.array() <= 1.0)).all()) {
    throw std::invalid_argument("rRUM penalty outside [0, 1]");
  }
}

LcdmParams::LcdmParams(std::vector<double> l0, std::vector<std::map<AttributeSet, double>> eff)
    : intercept(std::move(l0)), effects(std::move(eff)) {
  require_same_size(intercept.size(), effects.size(), "LcdmParams");
  for (std::size_t i = 0; i < effects.size(); ++i) {
    for (const auto& [set, value] : effects[i]) {
      if (set == 0) throw std::invalid_argument("LCDM effect on the empty attribute set");
      if ((set & (set - 1)) == 0 && !(value >= 0.0)) {
        throw std::invalid_argument("LCDM main effect of item " + std::to_string(i + 1) +
                                    " is negative");
      }
    }
  }
}

TestletParams::TestletParams(RdinaParams r, Eigen::MatrixXd g, std::vector<double> s2,
                             std::vector<int> ids)
    : rdina(std::move(r)), gamma(std::move(g)), sigma2_gamma(std::move(s2)),
      testlet_ids(std::move(ids)) {
  require_same_size(testlet_ids.size(), rdina.n_items(), "TestletParams testlet ids");
  require_same_size(static_cast<std::size_t>(gamma.cols()), sigma2_gamma.size(),
                    "TestletParams gamma columns");
  for (double v : sigma2_gamma) {
    if (!(v > 0.0)) throw std::invalid_argument("testlet variance must be positive");
  }
  for (int d : testlet_ids) {
    if (d != kStandalone && (d < 0 || d >= static_cast<int>(sigma2_gamma.size()))) {
      throw std::invalid_argument("unknown testlet index " + std::to_string(d));
    }
  }
}

std::vector<int> testlet_indices_from_labels(std::span<const int> labels, int n_testlets) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (int d : labels) {
    if (d < 1) throw std::invalid_argument("testlet labels start at 1");
    out.push_back(d > n_testlets ? kStandalone : d - 1);
  }
  return out;
}

double prob_dina(int eta, const DinaParams& p, std::size_t item) {
  require_item(item, p.n_items());
  return p.guess[item] + (1.0 - p.slip[item] - p.guess[item]) * eta;
}

double prob_rdina(int eta, const RdinaParams& p, std::size_t item) {
  require_item(item, p.n_items());
  return logistic(p.intercept[item] + p.kway[item] * eta);
}

GuessSlip rdina_to_sg(const RdinaParams& p, std::size_t item) {
  require_item(item, p.n_items());
  return {logistic(p.intercept[item]), 1.0 - logistic(p.intercept[item] + p.kway[item])};
}

double prob_llm(std::span<const int> alpha, std::span<const int> q_row, const LlmParams& p,
                std::size_t item) {
  require_item(item, p.n_items());
  double lp = p.intercept[item];
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    lp += p.main(static_cast<Eigen::Index>(item), static_cast<Eigen::Index>(k)) * alpha[k] *
          q_row[k];
  }
  return logistic(lp);
}

double prob_rrum(std::span<const int> alpha, std::span<const int> q_row, const RrumParams& p,
                 std::size_t item) {
  require_item(item, p.n_items());
  double prob = p.baseline[item];
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (q_row[k] > 0 && alpha[k] == 0) {
      prob *= p.penalty(static_cast<Eigen::Index>(item), static_cast<Eigen::Index>(k));
    }
  }
  return prob;
}

double prob_lcdm(std::span<const int> alpha, std::span<const int> q_row, const LcdmParams& p,
                 std::size_t item) {
  require_item(item, p.n_items());
  AttributeSet required = 0, mastered = 0;
  for (std::size_t k = 0; k < q_row.size(); ++k) {
    if (q_row[k] > 0) required |= AttributeSet{1} << k;
    if (alpha[k] > 0) mastered |= AttributeSet{1} << k;
  }
  double lp = p.intercept[item];
  for (const auto& [set, value] : p.effects[item]) {
    if ((set & ~required) != 0) {
      throw std::invalid_argument("LCDM effect involves an attribute the item does not require");
    }
    if ((set & mastered) == set) lp += value;
  }
  return logistic(lp);
}

double prob_rpa_dina(std::span<const int> alpha, std::span<const int> q_row, const DinaParams& p,
                     std::size_t item) {
  return prob_dina(ideal_polytomous(alpha, q_row), p, item);
}

double prob_testlet_rdina(int eta, const TestletParams& p, std::size_t person, std::size_t item) {
  require_item(item, p.rdina.n_items());
  const int d = p.testlet_ids[item];
  double lp = p.rdina.intercept[item] + p.rdina.kway[item] * eta;
  if (d != kStandalone) {
    if (person >= static_cast<std::size_t>(p.gamma.rows())) {
      throw std::out_of_range("person index out of range");
    }
    lp += p.gamma(static_cast<Eigen::Index>(person), d);
  }
  return logistic(lp);
}

namespace {

template <class T>
const T& params_as(const ModelParams& params, ModelKind kind) {
  if (const T* p = std::get_if<T>(&params)) return *p;
  throw std::invalid_argument("parameter set does not match model '" +
                              std::string(to_string(kind)) + "'");
}

}  // namespace

double response_probability(ModelKind kind, const ModelParams& params, std::span<const int> alpha,
                            std::span<const int> q_row, std::size_t person, std::size_t item) {
  switch (kind) {
    case ModelKind::Dina:
    case ModelKind::HoDina:
      return prob_dina(ideal_conjunctive(alpha, q_row), params_as<DinaParams>(params, kind), item);
    case ModelKind::Dino:
      return prob_dina(ideal_disjunctive(alpha, q_row), params_as<DinaParams>(params, kind), item);
    case ModelKind::RpaDina:
      return prob_rpa_dina(alpha, q_row, params_as<DinaParams>(params, kind), item);
    case ModelKind::Rdina:
      return prob_rdina(ideal_conjunctive(alpha, q_row), params_as<RdinaParams>(params, kind),
                        item);
    case ModelKind::Llm: return prob_llm(alpha, q_row, params_as<LlmParams>(params, kind), item);
    case ModelKind::Rrum: return prob_rrum(alpha, q_row, params_as<RrumParams>(params, kind), item);
    case ModelKind::Lcdm: return prob_lcdm(alpha, q_row, params_as<LcdmParams>(params, kind), item);
    case ModelKind::TestletDina:
    case ModelKind::LongDina:
      return prob_testlet_rdina(ideal_conjunctive(alpha, q_row),
                                params_as<TestletParams>(params, kind), person, item);
  }
  throw std::invalid_argument("unsupported model");
}

double log_likelihood(ModelKind kind, const ModelParams& params, const IntMatrix& alpha,
                      const ResponseMatrix& y, const QMatrix& q,
                      std::span<const int> item_occasion) {
  const std::size_t N = y.n_persons(), I = y.n_items(), K = q.n_attributes();
  if (q.n_items() != I) throw std::invalid_argument("Q rows must match response columns");
  if (!item_occasion.empty() && item_occasion.size() != I) {
    throw std::invalid_argument("occasion map must have one entry per item");
  }
  if (static_cast<std::size_t>(alpha.rows()) != N || alpha.cols() % static_cast<Eigen::Index>(K)) {
    throw std::invalid_argument("attribute matrix has wrong shape");
  }
  const auto n_occasions = static_cast<std::size_t>(alpha.cols()) / K;
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const int* row = alpha.data() + n * static_cast<std::size_t>(alpha.cols());
    for (std::size_t i = 0; i < I; ++i) {
      const std::size_t t = item_occasion.empty() ? 0 : static_cast<std::size_t>(item_occasion[i]);
      if (t >= n_occasions) throw std::invalid_argument("occasion index out of range");
      const double p =
          response_probability(kind, params, {row + t * K, K}, q.row(i), n, i);
      if (std::isnan(p)) throw std::domain_error("response probability is NaN");
      const int obs = y(n, i);
      if ((obs == 1 && p <= 0.0) || (obs == 0 && p >= 1.0)) {
        return -std::numeric_limits<double>::infinity();
      }
      if (obs == 1) {
        total += std::log(p);
      } else {
        total += std::log1p(-p);
      }
    }
  }
  return total;
}

}  // namespace bcdm
