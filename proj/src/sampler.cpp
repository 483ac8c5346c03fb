#include "bcdm/sampler.hpp"

#include <algorithm>
#include <bit>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <Eigen/LU>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "bcdm/error.hpp"

namespace bcdm {

namespace {

double normal_log(double v, const NormalPrior& p) {
  const double d = v - p.mean;
  return -0.5 * p.precision * d * d;
}

double pearson_term(int y, double p, double q) {
  // (y - p)^2 / (p q) written so that a certain outcome costs nothing.
  return y ? q / p : p / q;
}

bool in_family(const std::string& family, std::initializer_list<const char*> options) {
  for (const char* o : options) {
    if (family == o) return true;
  }
  return false;
}

std::string idx(std::size_t a) { return "[" + std::to_string(a + 1) + "]"; }
std::string idx(std::size_t a, std::size_t b) {
  return "[" + std::to_string(a + 1) + "," + std::to_string(b + 1) + "]";
}

}  // namespace

void McmcConfig::validate() const {
  if (n_chains < 1) throw std::invalid_argument("at least one chain is required");
  if (n_iter < 1) throw std::invalid_argument("n_iter must be positive");
  if (burnin() < 0 || burnin() >= n_iter) {
    throw std::invalid_argument("burn-in must be non-negative and shorter than n_iter");
  }
  if (thin < 1) throw std::invalid_argument("thin must be at least 1");
  if (adapt() < 0 || adapt() > burnin()) {
    throw std::invalid_argument("adaptation must end within the burn-in");
  }
  for (const auto& [family, sd] : proposal_sd) {
    if (!(sd > 0.0)) throw std::invalid_argument("proposal scale for " + family + " must be positive");
  }
}

std::size_t Dataset::n_occasions() const {
  if (item_occasion.empty()) return 1;
  return static_cast<std::size_t>(*std::max_element(item_occasion.begin(), item_occasion.end())) + 1;
}

bool Dataset::has_testlets() const {
  return std::any_of(testlet.begin(), testlet.end(), [](int m) { return m >= 0; });
}

void Dataset::validate() const {
  const std::size_t I = q.n_items();
  if (I == 0) throw DimensionError("Q-matrix has no items");
  if (y.n_persons() == 0) throw DimensionError("response matrix has no persons");
  if (y.n_items() != I) {
    throw DimensionError("response matrix has " + std::to_string(y.n_items()) +
                         " columns but the Q-matrix has " + std::to_string(I) + " items");
  }
  if (!item_occasion.empty()) {
    if (item_occasion.size() != I) throw DimensionError("occasion map must cover every item");
    std::vector<bool> seen(n_occasions(), false);
    for (int t : item_occasion) {
      if (t < 0) throw DimensionError("occasion indices must be non-negative");
      seen[static_cast<std::size_t>(t)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw DimensionError("every occasion needs at least one item");
    }
  }
  if (!testlet.empty()) {
    if (testlet.size() != I) throw DimensionError("testlet vector must have one entry per item");
    for (int m : testlet) {
      if (m < -1 || m >= n_testlets) throw DimensionError("testlet index out of range");
    }
  }
  if (!item_slot.empty() && item_slot.size() != I) {
    throw DimensionError("parameter-sharing map must cover every item");
  }
}

std::vector<std::string> default_monitor(ModelKind kind, Structure structure, bool has_testlets,
                                         const PriorSpec& prior) {
  std::vector<std::string> out;
  const ParamFamily fam = param_family(kind);
  switch (fam) {
    case ParamFamily::SlipGuess: out = {"s", "g"}; break;
    case ParamFamily::Rdina: out = {"lamda0", "lamdaK"}; break;
    case ParamFamily::Llm:
    case ParamFamily::Lcdm: out = {"lamda0", "lamda"}; break;
    case ParamFamily::Rrum: out = {"pai_star", "r_star"}; break;
  }
  switch (structure) {
    case Structure::Unstructured: out.push_back("pai"); break;
    case Structure::HigherOrder: out.insert(out.end(), {"xi", "beta"}); break;
    case Structure::Longitudinal:
      out.insert(out.end(), {"xi", "beta", "mu_theta", "Sigma_theta", "Corr_theta"});
      break;
  }
  if (has_testlets) out.push_back("Sigma_gamma");
  if (prior.hyper_beta && fam == ParamFamily::SlipGuess) {
    out.insert(out.end(), {"a.s", "b.s", "a.g", "b.g"});
  }
  if (prior.hyper_lamda0 && fam != ParamFamily::SlipGuess && fam != ParamFamily::Rrum) {
    out.insert(out.end(), {"mean.lamda0", "pr.lamda0"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// SamplerSetup

SamplerSetup::SamplerSetup(ModelSpec spec_in, Dataset data_in)
    : spec(std::move(spec_in)), structure(spec.resolved_structure()), data(std::move(data_in)) {
  data.validate();
  spec.prior.validate();
  n_persons = data.y.n_persons();
  n_items = data.q.n_items();
  n_attributes = data.q.n_attributes();
  n_occasions = data.n_occasions();

  if (structure == Structure::Unstructured && n_occasions != 1) {
    throw std::invalid_argument("the unstructured latent model covers a single occasion");
  }
  if (structure == Structure::HigherOrder && n_occasions != 1) {
    throw std::invalid_argument("the higher-order latent model covers a single occasion");
  }
  if (structure == Structure::Longitudinal && n_occasions < 2) {
    throw std::invalid_argument("the longitudinal model needs at least two occasions");
  }

  bank = ItemBank(spec.kind, data.q, data.item_slot);
  patterns = enumerate_patterns(data.q);
  n_classes = patterns.n_patterns();
  if (structure != Structure::Unstructured) {
    for (std::size_t k = 0; k < n_attributes; ++k) {
      if (patterns.level_sets()[k] != std::vector<int>{0, 1}) {
        throw std::invalid_argument("attribute " + std::to_string(k + 1) +
                                    " must be binary and measured by some item");
      }
    }
  }

  person_offsets = data.has_testlets();
  if (person_offsets && !bank.logit_link()) {
    throw std::invalid_argument("testlet effects need a logit-link item model");
  }

  y.resize(n_persons * n_items);
  for (std::size_t n = 0; n < n_persons; ++n) {
    for (std::size_t i = 0; i < n_items; ++i) y[n * n_items + i] = static_cast<std::uint8_t>(data.y(n, i));
  }

  occasion_of_item.assign(n_items, 0);
  for (std::size_t i = 0; i < data.item_occasion.size(); ++i) {
    occasion_of_item[i] = static_cast<std::size_t>(data.item_occasion[i]);
  }
  items_of_occasion.assign(n_occasions, {});
  for (std::size_t i = 0; i < n_items; ++i) items_of_occasion[occasion_of_item[i]].push_back(i);

  testlet_of_item.assign(n_items, -1);
  if (!data.testlet.empty()) testlet_of_item = data.testlet;
  items_of_testlet.assign(static_cast<std::size_t>(data.n_testlets), {});
  for (std::size_t i = 0; i < n_items; ++i) {
    if (testlet_of_item[i] >= 0) items_of_testlet[static_cast<std::size_t>(testlet_of_item[i])].push_back(i);
  }

  items_on_attribute.assign(n_occasions * n_attributes, {});
  for (std::size_t i = 0; i < n_items; ++i) {
    for (std::size_t k = 0; k < n_attributes; ++k) {
      if (data.q(i, k) > 0) items_on_attribute[occasion_of_item[i] * n_attributes + k].push_back(i);
    }
  }

  feature_offset.resize(n_items);
  std::size_t total = 0;
  for (std::size_t i = 0; i < n_items; ++i) {
    feature_offset[i] = total;
    total += n_classes * bank.n_values(bank.slot_of(i));
  }
  features.resize(total);
  for (std::size_t i = 0; i < n_items; ++i) {
    const std::size_t v = bank.n_values(bank.slot_of(i));
    for (std::size_t c = 0; c < n_classes; ++c) {
      bank.features(i, patterns.pattern(c), {features.data() + feature_offset[i] + c * v, v});
    }
  }

  delta = spec.dirichlet_scale.empty() ? std::vector<double>(n_classes, 1.0) : spec.dirichlet_scale;
  if (delta.size() != n_classes) {
    throw DimensionError("Dirichlet scale needs " + std::to_string(n_classes) + " entries");
  }
  for (double d : delta) {
    if (!(d > 0.0)) throw std::invalid_argument("Dirichlet scale entries must be positive");
  }

  if (spec.monitor.empty()) {
    spec.monitor = default_monitor(spec.kind, structure, person_offsets, spec.prior);
  }
}

std::size_t SamplerSetup::n_parameters() const {
  std::size_t np = bank.n_free_parameters();
  const std::size_t K = n_attributes, T = n_occasions;
  switch (structure) {
    case Structure::Unstructured: np += n_classes - 1; break;
    case Structure::HigherOrder: np += 2 * K; break;
    case Structure::Longitudinal: np += 2 * K + (T - 1) + T * (T + 1) / 2 - 1; break;
  }
  if (person_offsets) np += static_cast<std::size_t>(data.n_testlets);
  if (spec.prior.hyper_beta && bank.family() == ParamFamily::SlipGuess) np += 4;
  if (spec.prior.hyper_lamda0 && bank.logit_link()) np += 2;
  return np;
}

// ---------------------------------------------------------------------------
// RandomWalk

void RandomWalk::record(bool was_accepted, bool adapting) {
  ++proposed;
  if (was_accepted) ++accepted;
  if (!adapting) return;
  ++batch_proposed;
  if (was_accepted) ++batch_accepted;
  if (batch_proposed == 50) {
    ++batches;
    const double rate = batch_accepted / 50.0;
    const double step = std::min(0.1, 1.0 / std::sqrt(static_cast<double>(batches)));
    scale *= std::exp(rate > 0.44 ? step : -step);
    batch_proposed = 0;
    batch_accepted = 0;
  }
}

// ---------------------------------------------------------------------------
// Chain

Chain::Chain(std::shared_ptr<const SamplerSetup> setup, std::uint64_t seed, std::uint64_t stream,
             const McmcConfig& config)
    : setup_(std::move(setup)), rng_(seed, stream) {
  const auto& S = *setup_;
  auto scale = [&](const std::string& family, double fallback) {
    auto it = config.proposal_sd.find(family);
    return it == config.proposal_sd.end() ? fallback : it->second;
  };
  value_offset_.assign(S.bank.n_slots() + 1, 0);
  for (std::size_t s = 0; s < S.bank.n_slots(); ++s) {
    value_offset_[s + 1] = value_offset_[s] + S.bank.n_values(s);
    for (std::size_t j = 0; j < S.bank.n_values(s); ++j) {
      const std::string fam = S.bank.value_family(s, j);
      RandomWalk w;
      w.scale = scale(fam, S.bank.is_probability(s, j) ? 0.05 : 0.3);
      item_walk_.push_back(w);
    }
  }
  theta_walk_.scale = scale("theta", 1.0);
  gamma_walk_.scale = scale("gamma", 0.8);
  xi_walk_.assign(S.n_attributes, RandomWalk{scale("xi", 0.2)});
  beta_walk_.assign(S.n_attributes, RandomWalk{scale("beta", 0.2)});
  mu_walk_.assign(S.n_occasions, RandomWalk{scale("mu_theta", 0.1)});
  chol_walk_.assign(S.n_occasions * S.n_occasions, RandomWalk{scale("L_theta", 0.05)});
  hyper_walk_.assign(4, RandomWalk{scale("hyper", 0.3)});
  trait_scale_walk_.scale = scale("trait_scale", 0.05);
  occasion_shift_walk_.assign(S.n_occasions, RandomWalk{scale("occasion_shift", 0.05)});
  occasion_scale_walk_.assign(S.n_occasions, RandomWalk{scale("occasion_scale", 0.05)});
  occasion_shear_walk_.assign(S.n_occasions * S.n_occasions, RandomWalk{scale("occasion_shear", 0.05)});
  testlet_scale_walk_.assign(static_cast<std::size_t>(S.data.n_testlets), RandomWalk{scale("testlet_scale", 0.1)});
  initialize(stream);
}

void Chain::initialize(std::uint64_t stream) {
  const auto& S = *setup_;
  const auto& prior = S.spec.prior;
  auto& st = state_;
  st.items = S.bank;
  auto jitter = [&](const NormalPrior& p) {
    return p.mean + (2.0 * rng_.uniform() - 1.0) / std::sqrt(p.precision);
  };
  const NormalPrior lamdaK = prior.resolved_lamdaK(S.spec.kind);
  for (std::size_t s = 0; s < st.items.n_slots(); ++s) {
    auto v = st.items.values(s);
    const auto sets = st.items.effect_sets(s);
    switch (st.items.family()) {
      case ParamFamily::SlipGuess:
        v[0] = 0.05 + 0.25 * rng_.uniform();
        v[1] = 0.05 + 0.25 * rng_.uniform();
        break;
      case ParamFamily::Rdina:
        v[0] = jitter(prior.lamda0);
        v[1] = std::abs(jitter(lamdaK));
        break;
      case ParamFamily::Llm:
      case ParamFamily::Lcdm:
        v[0] = jitter(prior.lamda0);
        for (std::size_t j = 1; j < v.size(); ++j) {
          v[j] = std::has_single_bit(sets[j - 1]) ? std::abs(jitter(prior.main_effect))
                                                   : jitter(prior.interaction);
        }
        break;
      case ParamFamily::Rrum:
        v[0] = 0.7 + 0.25 * rng_.uniform();
        for (std::size_t j = 1; j < v.size(); ++j) v[j] = 0.2 + 0.5 * rng_.uniform();
        break;
    }
  }

  const std::size_t N = S.n_persons, T = S.n_occasions, K = S.n_attributes, C = S.n_classes;
  st.membership.resize(N * T);
  for (auto& c : st.membership) {
    c = static_cast<int>(std::min<std::size_t>(C - 1, static_cast<std::size_t>(rng_.uniform() * C)));
  }
  st.mixing.assign(C, 1.0 / static_cast<double>(C));
  if (S.structure != Structure::Unstructured) {
    st.theta.resize(N * T);
    for (auto& t : st.theta) t = rng_.normal();
    st.slope.resize(K);
    st.intercept.resize(K);
    // With the slope truncation switched off, odd chains start in the
    // reflected mode so that a sign ambiguity shows up in the diagnostics.
    const double sign = prior.xi_truncated || stream % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < K; ++k) {
      st.slope[k] = sign * (0.5 + rng_.uniform());
      st.intercept[k] = 2.0 * rng_.uniform() - 1.0;
    }
  }
  st.mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(T));
  st.cholesky = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(T));
  const auto M = static_cast<std::size_t>(S.data.n_testlets);
  st.gamma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(M));
  st.testlet_variance.resize(M);
  for (auto& v : st.testlet_variance) v = 0.5 + 0.5 * rng_.uniform();
  auto clamp_hyper = [&](double v) { return std::clamp(v, prior.hyper_lo, prior.hyper_hi); };
  st.a_s = clamp_hyper(prior.a_s);
  st.b_s = clamp_hyper(prior.b_s);
  st.a_g = clamp_hyper(prior.a_g);
  st.b_g = clamp_hyper(prior.b_g);
  if (!prior.hyper_beta) {
    st.a_s = prior.a_s;
    st.b_s = prior.b_s;
    st.a_g = prior.a_g;
    st.b_g = prior.b_g;
  }
  st.lamda0_mean = prior.lamda0.mean;
  st.lamda0_precision = prior.lamda0.precision;
  st.iteration = 0;
  refresh();
}

void Chain::refresh() {
  const auto& S = *setup_;
  const std::size_t IC = S.n_items * S.n_classes;
  lin_.resize(IC);
  logp_.resize(IC);
  log1mp_.resize(IC);
  prob_.resize(IC);
  comp_.resize(IC);
  for (std::size_t i = 0; i < S.n_items; ++i) refresh_item(i);
  refresh_precision();
  tally_counts();
}

void Chain::refresh_item(std::size_t i) {
  const auto& S = *setup_;
  const auto& bank = state_.items;
  const auto v = bank.values(bank.slot_of(i));
  const std::size_t C = S.n_classes;
  for (std::size_t c = 0; c < C; ++c) {
    const auto x = S.feature(i, c);
    const std::size_t at = i * C + c;
    if (bank.logit_link()) {
      const double lp = bank.combine_linear(v, x);
      lin_[at] = lp;
      prob_[at] = logistic(lp);
      comp_[at] = logistic(-lp);
      logp_[at] = log_logistic(lp);
      log1mp_[at] = log_logistic(-lp);
    } else {
      const double p = bank.combine(v, x);
      const double q = bank.family() == ParamFamily::SlipGuess ? (x[0] > 0.0 ? v[0] : 1.0 - v[1])
                                                               : 1.0 - p;
      lin_[at] = 0.0;
      prob_[at] = p;
      comp_[at] = q;
      logp_[at] = std::log(p);
      log1mp_[at] = std::log(q);
    }
  }
}

void Chain::refresh_slot(std::size_t slot) {
  for (std::size_t i : state_.items.items_in_slot(slot)) refresh_item(i);
}

void Chain::refresh_precision() {
  const auto& L = state_.cholesky;
  const Eigen::MatrixXd sigma = L * L.transpose();
  precision_ = sigma.inverse();
  logdet_chol_ = 0.0;
  for (Eigen::Index t = 0; t < L.rows(); ++t) logdet_chol_ += std::log(L(t, t));
}

void Chain::tally_counts() {
  const auto& S = *setup_;
  const std::size_t C = S.n_classes, T = S.n_occasions;
  n1_.assign(S.n_items * C, 0.0);
  n0_.assign(S.n_items * C, 0.0);
  for (std::size_t n = 0; n < S.n_persons; ++n) {
    const std::uint8_t* yn = S.y.data() + n * S.n_items;
    for (std::size_t i = 0; i < S.n_items; ++i) {
      const auto c = static_cast<std::size_t>(state_.membership[n * T + S.occasion_of_item[i]]);
      (yn[i] ? n1_ : n0_)[i * C + c] += 1.0;
    }
  }
}

double Chain::cell_loglik(std::size_t n, std::size_t i, std::size_t c) const {
  const auto& S = *setup_;
  const bool y = S.y[n * S.n_items + i] != 0;
  const int m = S.testlet_of_item[i];
  const std::size_t at = i * S.n_classes + c;
  if (m >= 0) {
    const double lp = lin_[at] + state_.gamma(static_cast<Eigen::Index>(n), m);
    return y ? log_logistic(lp) : log_logistic(-lp);
  }
  return y ? logp_[at] : log1mp_[at];
}

double Chain::cell_probability(std::size_t n, std::size_t i, std::size_t c,
                               double* complement) const {
  const auto& S = *setup_;
  const int m = S.testlet_of_item[i];
  const std::size_t at = i * S.n_classes + c;
  if (m >= 0) {
    const double lp = lin_[at] + state_.gamma(static_cast<Eigen::Index>(n), m);
    *complement = logistic(-lp);
    return logistic(lp);
  }
  *complement = comp_[at];
  return prob_[at];
}

// ---------------------------------------------------------------------------
// Latent memberships and attributes

int Chain::gibbs_class_membership(std::size_t n) {
  const auto& S = *setup_;
  if (S.structure != Structure::Unstructured) {
    throw std::logic_error("class-membership update needs the unstructured latent model");
  }
  const std::size_t C = S.n_classes;
  thread_local std::vector<double> logw;
  logw.resize(C);
  for (std::size_t c = 0; c < C; ++c) logw[c] = std::log(state_.mixing[c]);
  const std::uint8_t* yn = S.y.data() + n * S.n_items;
  for (std::size_t i = 0; i < S.n_items; ++i) {
    if (S.testlet_of_item[i] >= 0) {
      for (std::size_t c = 0; c < C; ++c) logw[c] += cell_loglik(n, i, c);
    } else {
      const double* table = (yn[i] ? logp_.data() : log1mp_.data()) + i * C;
      for (std::size_t c = 0; c < C; ++c) logw[c] += table[c];
    }
  }
  const auto c = static_cast<int>(rng_.categorical_log(logw));
  state_.membership[n] = c;
  return c;
}

std::vector<double> Chain::gibbs_mixing_proportions() {
  const auto& S = *setup_;
  std::vector<double> shape = S.delta;
  for (int c : state_.membership) shape[static_cast<std::size_t>(c)] += 1.0;
  state_.mixing = rng_.dirichlet(shape);
  return state_.mixing;
}

int Chain::gibbs_bernoulli_attribute(std::size_t n, std::size_t k, std::size_t t) {
  const auto& S = *setup_;
  if (S.structure == Structure::Unstructured) {
    throw std::logic_error("attribute update needs a higher-order or longitudinal structure");
  }
  const std::size_t T = S.n_occasions;
  const auto c = static_cast<std::size_t>(state_.membership[n * T + t]);
  const std::size_t stride = S.patterns.stride(k);
  const std::size_t c0 = S.patterns.pattern(c)[k] ? c - stride : c;
  const std::size_t c1 = c0 + stride;
  const double eta = state_.slope[k] * state_.theta[n * T + t] - state_.intercept[k];
  double lw1 = log_logistic(eta), lw0 = log_logistic(-eta);
  for (std::size_t i : S.items_on_attribute[t * S.n_attributes + k]) {
    lw1 += cell_loglik(n, i, c1);
    lw0 += cell_loglik(n, i, c0);
  }
  int a;
  if (lw1 == -std::numeric_limits<double>::infinity()) {
    a = 0;
  } else if (lw0 == -std::numeric_limits<double>::infinity()) {
    a = 1;
  } else {
    a = rng_.uniform() < logistic(lw1 - lw0) ? 1 : 0;
  }
  state_.membership[n * T + t] = static_cast<int>(a ? c1 : c0);
  return a;
}

void Chain::update_memberships() {
  for (std::size_t n = 0; n < setup_->n_persons; ++n) gibbs_class_membership(n);
}

void Chain::update_attributes() {
  const auto& S = *setup_;
  for (std::size_t n = 0; n < S.n_persons; ++n) {
    for (std::size_t t = 0; t < S.n_occasions; ++t) {
      for (std::size_t k = 0; k < S.n_attributes; ++k) gibbs_bernoulli_attribute(n, k, t);
    }
  }
}

double Chain::attribute_loglik(std::size_t n, std::size_t t, std::size_t k, double theta) const {
  const auto& S = *setup_;
  const auto c = static_cast<std::size_t>(state_.membership[n * S.n_occasions + t]);
  const double eta = state_.slope[k] * theta - state_.intercept[k];
  return S.patterns.pattern(c)[k] ? log_logistic(eta) : log_logistic(-eta);
}

double Chain::trait_log_prior(std::size_t n, std::size_t t, double value) const {
  const std::size_t T = setup_->n_occasions;
  if (T == 1) return -0.5 * value * value;
  const double dt = value - state_.mu(static_cast<Eigen::Index>(t));
  double cross = 0.0;
  for (std::size_t s = 0; s < T; ++s) {
    if (s == t) continue;
    const double ds = state_.theta[n * T + s] - state_.mu(static_cast<Eigen::Index>(s));
    cross += precision_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) * ds;
  }
  const double ptt = precision_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t));
  return -0.5 * (ptt * dt * dt + 2.0 * dt * cross);
}

void Chain::update_traits(bool adapting) {
  const auto& S = *setup_;
  const std::size_t T = S.n_occasions, K = S.n_attributes;
  for (std::size_t n = 0; n < S.n_persons; ++n) {
    for (std::size_t t = 0; t < T; ++t) {
      auto target = [&](double v) {
        double lp = trait_log_prior(n, t, v);
        for (std::size_t k = 0; k < K; ++k) lp += attribute_loglik(n, t, k, v);
        return lp;
      };
      double& theta = state_.theta[n * T + t];
      theta = mh_update(rng_, theta, target(theta), theta_walk_, adapting, target).value;
    }
  }
}

// ---------------------------------------------------------------------------
// Item parameters

double Chain::item_prior(std::size_t slot, std::size_t j, double v) const {
  const auto& S = *setup_;
  const auto& prior = S.spec.prior;
  switch (state_.items.family()) {
    case ParamFamily::SlipGuess: return 0.0;
    case ParamFamily::Rrum: {
      const double a = j == 0 ? prior.a_pai_star : prior.a_xr_star;
      const double b = j == 0 ? prior.b_pai_star : prior.b_xr_star;
      return (a - 1.0) * std::log(v) + (b - 1.0) * std::log1p(-v);
    }
    default: break;
  }
  if (j == 0) {
    if (prior.hyper_lamda0) return normal_log(v, {state_.lamda0_mean, state_.lamda0_precision});
    return normal_log(v, prior.lamda0);
  }
  switch (state_.items.family()) {
    case ParamFamily::Rdina: return normal_log(v, prior.resolved_lamdaK(S.spec.kind));
    case ParamFamily::Llm: return normal_log(v, prior.main_effect);
    default:
      return normal_log(v, std::has_single_bit(state_.items.effect_sets(slot)[j - 1])
                               ? prior.main_effect
                               : prior.interaction);
  }
}

double Chain::slot_loglik(std::size_t slot, std::span<const double> v) const {
  const auto& S = *setup_;
  const auto& bank = state_.items;
  const std::size_t C = S.n_classes, T = S.n_occasions;
  double total = 0.0;
  thread_local std::vector<double> base;
  for (std::size_t i : bank.items_in_slot(slot)) {
    const int m = S.testlet_of_item[i];
    if (m >= 0) {
      base.resize(C);
      for (std::size_t c = 0; c < C; ++c) base[c] = bank.combine_linear(v, S.feature(i, c));
      const std::size_t t = S.occasion_of_item[i];
      for (std::size_t n = 0; n < S.n_persons; ++n) {
        const auto c = static_cast<std::size_t>(state_.membership[n * T + t]);
        const double lp = base[c] + state_.gamma(static_cast<Eigen::Index>(n), m);
        total += S.y[n * S.n_items + i] ? log_logistic(lp) : log_logistic(-lp);
      }
      continue;
    }
    for (std::size_t c = 0; c < C; ++c) {
      const double a = n1_[i * C + c], b = n0_[i * C + c];
      if (a == 0.0 && b == 0.0) continue;
      const auto x = S.feature(i, c);
      if (bank.logit_link()) {
        const double lp = bank.combine_linear(v, x);
        if (a > 0.0) total += a * log_logistic(lp);
        if (b > 0.0) total += b * log_logistic(-lp);
      } else {
        const double p = bank.combine(v, x);
        if (a > 0.0) total += a * std::log(p);
        if (b > 0.0) total += b * std::log1p(-p);
      }
    }
  }
  return total;
}

std::pair<double, double> Chain::gibbs_slip_guess(std::size_t slot) {
  const auto& S = *setup_;
  auto& bank = state_.items;
  if (bank.family() != ParamFamily::SlipGuess) {
    throw std::logic_error("slip/guess update needs a slip-guess item model");
  }
  const std::size_t C = S.n_classes;
  double slip_wrong = 0, slip_right = 0, guess_right = 0, guess_wrong = 0;
  for (std::size_t i : bank.items_in_slot(slot)) {
    for (std::size_t c = 0; c < C; ++c) {
      if (S.feature(i, c)[0] > 0.0) {
        slip_wrong += n0_[i * C + c];
        slip_right += n1_[i * C + c];
      } else {
        guess_right += n1_[i * C + c];
        guess_wrong += n0_[i * C + c];
      }
    }
  }
  auto v = bank.values(slot);
  const double s = rng_.truncated_beta(state_.a_s + slip_wrong, state_.b_s + slip_right, 0.0,
                                       1.0 - v[1]);
  double g = rng_.truncated_beta(state_.a_g + guess_right, state_.b_g + guess_wrong, 0.0, 1.0 - s);
  if (g >= 1.0 - s) g = std::nextafter(1.0 - s, 0.0);
  v[0] = s;
  v[1] = g;
  refresh_slot(slot);
  return {s, g};
}

void Chain::update_items(bool adapting) {
  tally_counts();
  auto& bank = state_.items;
  std::vector<double> candidate;
  for (std::size_t slot = 0; slot < bank.n_slots(); ++slot) {
    if (bank.family() == ParamFamily::SlipGuess) {
      gibbs_slip_guess(slot);
      continue;
    }
    auto v = bank.values(slot);
    candidate.assign(v.begin(), v.end());
    double current = slot_loglik(slot, candidate);
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double lo = bank.is_probability(slot, j) || bank.is_nonnegative(slot, j)
                            ? 0.0
                            : -std::numeric_limits<double>::infinity();
      const double hi = bank.is_probability(slot, j) ? 1.0 : std::numeric_limits<double>::infinity();
      double loglik_new = 0.0;
      auto target = [&](double x) {
        candidate[j] = x;
        loglik_new = slot_loglik(slot, candidate);
        return item_prior(slot, j, x) + loglik_new;
      };
      const double now = item_prior(slot, j, v[j]) + current;
      const auto r = mh_update(rng_, v[j], now, item_walk_[value_offset_[slot] + j], adapting,
                               target, lo, hi);
      candidate[j] = r.value;
      if (r.accepted) {
        v[j] = r.value;
        current = loglik_new;
      }
    }
    refresh_slot(slot);
  }
}

// ---------------------------------------------------------------------------
// Testlets

double Chain::testlet_block_loglik(std::size_t n, std::size_t m, double g) const {
  const auto& S = *setup_;
  const std::size_t C = S.n_classes, T = S.n_occasions;
  double total = 0.0;
  for (std::size_t i : S.items_of_testlet[m]) {
    const auto c = static_cast<std::size_t>(state_.membership[n * T + S.occasion_of_item[i]]);
    const double lp = lin_[i * C + c] + g;
    total += S.y[n * S.n_items + i] ? log_logistic(lp) : log_logistic(-lp);
  }
  return total;
}

double Chain::gibbs_testlet_precision(std::size_t m) {
  const auto& S = *setup_;
  const auto& prior = S.spec.prior;
  const double ss = state_.gamma.col(static_cast<Eigen::Index>(m)).squaredNorm();
  const double precision = rng_.gamma(prior.testlet_shape + 0.5 * static_cast<double>(S.n_persons),
                                      prior.testlet_rate + 0.5 * ss);
  state_.testlet_variance[m] = 1.0 / precision;
  return state_.testlet_variance[m];
}

void Chain::update_testlets(bool adapting) {
  const auto& S = *setup_;
  if (!S.person_offsets) return;
  const auto M = static_cast<std::size_t>(S.data.n_testlets);
  for (std::size_t m = 0; m < M; ++m) {
    if (S.items_of_testlet[m].empty()) continue;
    const double var = state_.testlet_variance[m];
    for (std::size_t n = 0; n < S.n_persons; ++n) {
      auto target = [&](double g) { return -0.5 * g * g / var + testlet_block_loglik(n, m, g); };
      double& g = state_.gamma(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
      g = mh_update(rng_, g, target(g), gamma_walk_, adapting, target).value;
    }
  }
  for (std::size_t m = 0; m < M; ++m) {
    if (S.items_of_testlet[m].empty()) continue;
    rescale_testlet(m, adapting);
  }
  for (std::size_t m = 0; m < M; ++m) gibbs_testlet_precision(m);
}

// gamma_m -> c gamma_m with precision -> precision / c^2: the effects' own
// density cancels against the Jacobian, leaving the likelihood, the
// precision prior and a factor c^-2.
void Chain::rescale_testlet(std::size_t m, bool adapting) {
  const auto& S = *setup_;
  const auto& prior = S.spec.prior;
  const double log_c = testlet_scale_walk_[m].scale * rng_.normal();
  const double c = std::exp(log_c);
  const auto col = static_cast<Eigen::Index>(m);
  double lr = 0.0;
  for (std::size_t n = 0; n < S.n_persons; ++n) {
    const double g = state_.gamma(static_cast<Eigen::Index>(n), col);
    lr += testlet_block_loglik(n, m, c * g) - testlet_block_loglik(n, m, g);
  }
  const double tau = 1.0 / state_.testlet_variance[m];
  const double tau_new = tau / (c * c);
  lr += (prior.testlet_shape - 1.0) * (std::log(tau_new) - std::log(tau)) -
        prior.testlet_rate * (tau_new - tau) - 2.0 * log_c;
  const bool accept = std::log(rng_.uniform()) < lr;
  if (accept) {
    state_.gamma.col(col) *= c;
    state_.testlet_variance[m] = 1.0 / tau_new;
  }
  testlet_scale_walk_[m].record(accept, adapting);
}

// ---------------------------------------------------------------------------
// Structural parameters

double Chain::structural_loglik(std::size_t k, double xi, double beta) const {
  const auto& S = *setup_;
  double total = 0.0;
  for (std::size_t u = 0; u < state_.membership.size(); ++u) {
    const double eta = xi * state_.theta[u] - beta;
    const auto c = static_cast<std::size_t>(state_.membership[u]);
    total += S.patterns.pattern(c)[k] ? log_logistic(eta) : log_logistic(-eta);
  }
  return total;
}

double Chain::mvn_quad() const {
  const auto& S = *setup_;
  const std::size_t T = S.n_occasions;
  const auto& L = state_.cholesky;
  double quad = 0.0;
  std::vector<double> z(T);
  for (std::size_t n = 0; n < S.n_persons; ++n) {
    for (std::size_t t = 0; t < T; ++t) {
      const auto et = static_cast<Eigen::Index>(t);
      double r = state_.theta[n * T + t] - state_.mu(et);
      for (std::size_t s = 0; s < t; ++s) r -= L(et, static_cast<Eigen::Index>(s)) * z[s];
      z[t] = r / L(et, et);
      quad += z[t] * z[t];
    }
  }
  return quad;
}

double Chain::mvn_loglik() const {
  const auto& L = state_.cholesky;
  double logdet = 0.0;
  for (Eigen::Index t = 0; t < L.rows(); ++t) logdet += std::log(L(t, t));
  return -static_cast<double>(setup_->n_persons) * logdet - 0.5 * mvn_quad();
}

double Chain::chol_row_prior(std::size_t t) const {
  const auto& prior = setup_->spec.prior;
  const auto et = static_cast<Eigen::Index>(t);
  double lp = 0.0;
  for (std::size_t s = 0; s < t; ++s) {
    lp += normal_log(state_.cholesky(et, static_cast<Eigen::Index>(s)), prior.cholesky_offdiag);
  }
  const double d = state_.cholesky(et, et);
  return lp + (prior.cholesky_diag_shape - 1.0) * std::log(d) - prior.cholesky_diag_rate * d;
}

// theta -> c theta, mu -> c mu, xi -> xi / c leaves every attribute
// probability unchanged; only the trait density, the priors and the
// Jacobian c^(N T + (T - 1) - K) enter the acceptance ratio.
void Chain::rescale_traits(bool adapting) {
  const auto& S = *setup_;
  const auto& prior = S.spec.prior;
  const std::size_t N = S.n_persons, T = S.n_occasions, K = S.n_attributes;
  const double log_c = trait_scale_walk_.scale * rng_.normal();
  const double c = std::exp(log_c);
  double log_ratio = 0.0;
  if (T == 1) {
    double ss = 0.0;
    for (double v : state_.theta) ss += v * v;
    log_ratio -= 0.5 * (c * c - 1.0) * ss;
  } else {
    log_ratio -= 0.5 * (c * c - 1.0) * mvn_quad();
    for (std::size_t t = 1; t < T; ++t) {
      const double m = state_.mu(static_cast<Eigen::Index>(t));
      log_ratio += -0.5 * prior.mu_theta_precision * (c * c - 1.0) * m * m;
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    log_ratio += normal_log(state_.slope[k] / c, prior.xi) - normal_log(state_.slope[k], prior.xi);
  }
  log_ratio += log_c * (static_cast<double>(N * T + (T - 1)) - static_cast<double>(K));
  const bool accept = std::log(rng_.uniform()) < log_ratio;
  if (accept) {
    for (double& v : state_.theta) v *= c;
    for (std::size_t t = 1; t < T; ++t) state_.mu(static_cast<Eigen::Index>(t)) *= c;
    for (double& xi : state_.slope) xi /= c;
  }
  trait_scale_walk_.record(accept, adapting);
}

// Moves occasion t's traits together with its distribution: a shift
// (theta_t + a, mu_t + a) and a scale about mu_t (theta_t - mu_t and row t of
// Delta times b). The trait density is unchanged up to Jacobians, so only the
// attribute likelihood of occasion t and the priors enter.
void Chain::move_occasion(std::size_t t, bool adapting) {
  const auto& S = *setup_;
  const auto& prior = S.spec.prior;
  const std::size_t N = S.n_persons, T = S.n_occasions, K = S.n_attributes;
  const auto et = static_cast<Eigen::Index>(t);
  auto occasion_loglik = [&](auto&& value_of) {
    double total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const double v = value_of(state_.theta[n * T + t]);
      for (std::size_t k = 0; k < K; ++k) total += attribute_loglik(n, t, k, v);
    }
    return total;
  };
  const double base = occasion_loglik([](double v) { return v; });

  const double a = occasion_shift_walk_[t].scale * rng_.normal();
  const double mu_t = state_.mu(et);
  double lr = occasion_loglik([a](double v) { return v + a; }) - base +
              -0.5 * prior.mu_theta_precision * ((mu_t + a) * (mu_t + a) - mu_t * mu_t);
  bool accept = std::log(rng_.uniform()) < lr;
  double current = base;
  if (accept) {
    for (std::size_t n = 0; n < N; ++n) state_.theta[n * T + t] += a;
    state_.mu(et) += a;
    current = base + (lr + 0.5 * prior.mu_theta_precision * ((mu_t + a) * (mu_t + a) - mu_t * mu_t));
  }
  occasion_shift_walk_[t].record(accept, adapting);

  const double log_b = occasion_scale_walk_[t].scale * rng_.normal();
  const double b = std::exp(log_b);
  const double m = state_.mu(et);
  const double prior_before = chol_row_prior(t);
  state_.cholesky.row(et).head(et + 1) *= b;
  const double prior_after = chol_row_prior(t);
  state_.cholesky.row(et).head(et + 1) /= b;
  lr = occasion_loglik([m, b](double v) { return m + b * (v - m); }) - current + prior_after -
       prior_before + log_b * static_cast<double>(t + 1);
  accept = std::isfinite(lr) && std::log(rng_.uniform()) < lr;
  if (accept) {
    for (std::size_t n = 0; n < N; ++n) {
      double& v = state_.theta[n * T + t];
      v = m + b * (v - m);
    }
    state_.cholesky.row(et).head(et + 1) *= b;
    current = occasion_loglik([](double v) { return v; });
  }
  occasion_scale_walk_[t].record(accept, adapting);

  // Shear: theta_t + d z_s with Delta(t, s) + d keeps every standardized
  // innovation z fixed, so again only occasion t's attributes and the prior
  // on Delta(t, s) change.
  for (std::size_t s = 0; s < t; ++s) {
    std::vector<double> z(N);
    for (std::size_t n = 0; n < N; ++n) {
      std::vector<double> zn(s + 1);
      for (std::size_t r = 0; r <= s; ++r) {
        const auto er = static_cast<Eigen::Index>(r);
        double v = state_.theta[n * T + r] - state_.mu(er);
        for (std::size_t q = 0; q < r; ++q) v -= state_.cholesky(er, static_cast<Eigen::Index>(q)) * zn[q];
        zn[r] = v / state_.cholesky(er, er);
      }
      z[n] = zn[s];
    }
    const double d = occasion_shear_walk_[t * T + s].scale * rng_.normal();
    double proposed = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const double v = state_.theta[n * T + t] + d * z[n];
      for (std::size_t k = 0; k < K; ++k) proposed += attribute_loglik(n, t, k, v);
    }
    const auto es = static_cast<Eigen::Index>(s);
    const double l = state_.cholesky(et, es);
    lr = proposed - current + normal_log(l + d, prior.cholesky_offdiag) -
         normal_log(l, prior.cholesky_offdiag);
    accept = std::log(rng_.uniform()) < lr;
    if (accept) {
      for (std::size_t n = 0; n < N; ++n) state_.theta[n * T + t] += d * z[n];
      state_.cholesky(et, es) = l + d;
      current = proposed;
    }
    occasion_shear_walk_[t * T + s].record(accept, adapting);
  }
}

void Chain::update_structure(bool adapting) {
  const auto& S = *setup_;
  if (S.structure == Structure::Unstructured) return;
  const auto& prior = S.spec.prior;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < S.n_attributes; ++k) {
    {
      auto target = [&](double xi) {
        return normal_log(xi, prior.xi) + structural_loglik(k, xi, state_.intercept[k]);
      };
      double& xi = state_.slope[k];
      xi = mh_update(rng_, xi, target(xi), xi_walk_[k], adapting, target,
                     prior.xi_truncated ? 0.0 : -inf)
               .value;
    }
    {
      auto target = [&](double beta) {
        return normal_log(beta, prior.beta) + structural_loglik(k, state_.slope[k], beta);
      };
      double& beta = state_.intercept[k];
      beta = mh_update(rng_, beta, target(beta), beta_walk_[k], adapting, target).value;
    }
  }
  rescale_traits(adapting);
  if (S.structure != Structure::Longitudinal) return;

  const std::size_t T = S.n_occasions;
  for (std::size_t t = 1; t < T; ++t) move_occasion(t, adapting);
  for (std::size_t t = 1; t < T; ++t) {
    const auto e = static_cast<Eigen::Index>(t);
    auto target = [&](double v) {
      const double old = state_.mu(e);
      state_.mu(e) = v;
      const double lp = -0.5 * prior.mu_theta_precision * v * v + mvn_loglik();
      state_.mu(e) = old;
      return lp;
    };
    state_.mu(e) = mh_update(rng_, state_.mu(e), target(state_.mu(e)), mu_walk_[t], adapting, target).value;
  }
  for (std::size_t r = 0; r < T; ++r) {
    for (std::size_t c = 0; c <= r; ++c) {
      if (r == 0) continue;  // Delta(1,1) is fixed at 1
      const auto er = static_cast<Eigen::Index>(r), ec = static_cast<Eigen::Index>(c);
      const bool diagonal = r == c;
      auto target = [&](double v) {
        const double old = state_.cholesky(er, ec);
        state_.cholesky(er, ec) = v;
        double lp = mvn_loglik();
        state_.cholesky(er, ec) = old;
        if (diagonal) {
          lp += (prior.cholesky_diag_shape - 1.0) * std::log(v) - prior.cholesky_diag_rate * v;
        } else {
          lp += normal_log(v, prior.cholesky_offdiag);
        }
        return lp;
      };
      double& v = state_.cholesky(er, ec);
      v = mh_update(rng_, v, target(v), chol_walk_[r * T + c], adapting, target,
                    diagonal ? std::numeric_limits<double>::min() : -inf)
              .value;
    }
  }
  refresh_precision();
}

// ---------------------------------------------------------------------------
// Hyperpriors

double Chain::hyper_beta_logpost(double as, double bs, double ag, double bg) const {
  namespace bm = boost::math;
  const auto& bank = state_.items;
  double total = 0.0;
  for (std::size_t slot = 0; slot < bank.n_slots(); ++slot) {
    const auto v = bank.values(slot);
    total += (as - 1.0) * std::log(v[0]) + (bs - 1.0) * std::log1p(-v[0]) +
             (ag - 1.0) * std::log(v[1]) + (bg - 1.0) * std::log1p(-v[1]);
  }
  // Normalizer of the jointly truncated prior: P(S + G < 1) for independent
  // S ~ Beta(as, bs), G ~ Beta(ag, bg), times the two Beta functions.
  bm::quadrature::tanh_sinh<double> integrator;
  const double z = integrator.integrate(
      [&](double s) { return bm::ibeta_derivative(as, bs, s) * bm::ibeta(ag, bg, 1.0 - s); }, 0.0,
      1.0);
  const double log_norm = std::log(bm::beta(as, bs)) + std::log(bm::beta(ag, bg)) + std::log(z);
  return total - static_cast<double>(bank.n_slots()) * log_norm;
}

void Chain::update_hyper(bool adapting) {
  const auto& S = *setup_;
  const auto& prior = S.spec.prior;
  auto& st = state_;
  if (prior.hyper_beta && st.items.family() == ParamFamily::SlipGuess) {
    double* params[4] = {&st.a_s, &st.b_s, &st.a_g, &st.b_g};
    for (int h = 0; h < 4; ++h) {
      auto target = [&](double v) {
        const double old = *params[h];
        *params[h] = v;
        const double lp = hyper_beta_logpost(st.a_s, st.b_s, st.a_g, st.b_g);
        *params[h] = old;
        return lp;
      };
      *params[h] = mh_update(rng_, *params[h], target(*params[h]), hyper_walk_[static_cast<std::size_t>(h)],
                             adapting, target, prior.hyper_lo, prior.hyper_hi)
                       .value;
    }
  }
  if (prior.hyper_lamda0 && st.items.logit_link()) {
    const std::size_t n_slots = st.items.n_slots();
    double sum = 0.0;
    for (std::size_t s = 0; s < n_slots; ++s) sum += st.items.values(s)[0];
    const auto& h = prior.hyper_lamda0_mean;
    const double post_prec = h.precision + static_cast<double>(n_slots) * st.lamda0_precision;
    const double post_mean = (h.precision * h.mean + st.lamda0_precision * sum) / post_prec;
    st.lamda0_mean = rng_.normal(post_mean, 1.0 / std::sqrt(post_prec));
    double ss = 0.0;
    for (std::size_t s = 0; s < n_slots; ++s) {
      const double d = st.items.values(s)[0] - st.lamda0_mean;
      ss += d * d;
    }
    st.lamda0_precision = rng_.gamma(prior.hyper_lamda0_shape + 0.5 * static_cast<double>(n_slots),
                                     prior.hyper_lamda0_rate + 0.5 * ss);
  }
}

// ---------------------------------------------------------------------------

void Chain::sweep_persons(bool adapting) {
  if (setup_->structure == Structure::Unstructured) {
    update_memberships();
  } else {
    update_attributes();
    update_traits(adapting);
  }
}

void Chain::sweep(bool adapting) {
  sweep_persons(adapting);
  if (setup_->structure == Structure::Unstructured) gibbs_mixing_proportions();
  update_items(adapting);
  update_testlets(adapting);
  update_structure(adapting);
  update_hyper(adapting);
  ++state_.iteration;
}

double Chain::deviance() const {
  const auto& S = *setup_;
  const std::size_t T = S.n_occasions;
  double ll = 0.0;
  for (std::size_t n = 0; n < S.n_persons; ++n) {
    for (std::size_t i = 0; i < S.n_items; ++i) {
      const auto c = static_cast<std::size_t>(state_.membership[n * T + S.occasion_of_item[i]]);
      ll += cell_loglik(n, i, c);
    }
  }
  return -2.0 * ll;
}

std::pair<double, double> Chain::discrepancies() {
  const auto& S = *setup_;
  const std::size_t T = S.n_occasions;
  double realized = 0.0, replicated = 0.0;
  for (std::size_t n = 0; n < S.n_persons; ++n) {
    for (std::size_t i = 0; i < S.n_items; ++i) {
      const auto c = static_cast<std::size_t>(state_.membership[n * T + S.occasion_of_item[i]]);
      double q;
      const double p = cell_probability(n, i, c, &q);
      realized += pearson_term(S.y[n * S.n_items + i], p, q);
      replicated += pearson_term(rng_.uniform() < p ? 1 : 0, p, q);
    }
  }
  return {realized, replicated};
}

double Chain::acceptance_rate() const {
  long proposed = 0, accepted = 0;
  auto add = [&](const RandomWalk& w) {
    proposed += w.proposed;
    accepted += w.accepted;
  };
  for (const auto& w : item_walk_) add(w);
  add(theta_walk_);
  add(gamma_walk_);
  for (const auto* group : {&xi_walk_, &beta_walk_, &mu_walk_, &chol_walk_, &hyper_walk_}) {
    for (const auto& w : *group) add(w);
  }
  return proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 1.0;
}

bool Chain::satisfies_constraints() const {
  const auto& S = *setup_;
  if (!state_.items.satisfies_constraints()) return false;
  if (S.structure == Structure::Unstructured) {
    double total = 0.0;
    for (double p : state_.mixing) {
      if (!(p >= 0.0)) return false;
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) return false;
  }
  for (double v : state_.testlet_variance) {
    if (!(v > 0.0)) return false;
  }
  if (S.spec.prior.xi_truncated) {
    for (double xi : state_.slope) {
      if (xi < 0.0) return false;
    }
  }
  for (Eigen::Index t = 0; t < state_.cholesky.rows(); ++t) {
    if (!(state_.cholesky(t, t) > 0.0)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Monitored quantities. Names and values come from one traversal so that
// their order can never disagree.

namespace {

template <class Emit>
void visit_monitored(const SamplerSetup& S, const ChainState& st, Emit&& emit) {
  const std::size_t N = S.n_persons, T = S.n_occasions, K = S.n_attributes, C = S.n_classes;
  const auto& bank = st.items;
  for (const std::string& fam : S.spec.monitor) {
    if (in_family(fam, {"s", "g", "lamda0", "lamdaK", "lamda", "pai_star", "r_star"})) {
      for (std::size_t slot = 0; slot < bank.n_slots(); ++slot) {
        for (std::size_t j = 0; j < bank.n_values(slot); ++j) {
          if (bank.value_family(slot, j) != fam) continue;
          emit([&] { return bank.value_name(slot, j); }, bank.values(slot)[j], false);
        }
      }
    } else if (fam == "pai") {
      for (std::size_t c = 0; c < st.mixing.size() && S.structure == Structure::Unstructured; ++c) {
        emit([&] { return "pai" + idx(c); }, st.mixing[c], false);
      }
    } else if (fam == "c") {
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t t = 0; t < T; ++t) {
          emit([&] { return "c" + (T == 1 ? idx(n) : idx(n, t)); }, st.membership[n * T + t] + 1.0, true);
        }
      }
    } else if (fam == "theta") {
      for (std::size_t u = 0; u < st.theta.size(); ++u) {
        emit([&] { return "theta" + (T == 1 ? idx(u) : idx(u / T, u % T)); }, st.theta[u], false);
      }
    } else if (fam == "xi" || fam == "beta") {
      const auto& v = fam == "xi" ? st.slope : st.intercept;
      for (std::size_t k = 0; k < v.size(); ++k) emit([&] { return fam + idx(k); }, v[k], false);
    } else if (fam == "gamma") {
      for (Eigen::Index n = 0; n < st.gamma.rows(); ++n) {
        for (Eigen::Index m = 0; m < st.gamma.cols(); ++m) {
          emit([&] { return "gamma" + idx(static_cast<std::size_t>(n), static_cast<std::size_t>(m)); },
               st.gamma(n, m), false);
        }
      }
    } else if (fam == "Sigma_gamma") {
      for (std::size_t m = 0; m < st.testlet_variance.size(); ++m) {
        emit([&] { return "Sigma_gamma" + idx(m); }, st.testlet_variance[m], false);
      }
    } else if (fam == "mu_theta") {
      for (std::size_t t = 1; t < T && S.structure == Structure::Longitudinal; ++t) {
        emit([&] { return "mu_theta" + idx(t); }, st.mu(static_cast<Eigen::Index>(t)), false);
      }
    } else if (fam == "Sigma_theta" || fam == "L_theta" || fam == "Corr_theta") {
      if (S.structure != Structure::Longitudinal) continue;
      const Eigen::MatrixXd sigma = st.cholesky * st.cholesky.transpose();
      for (std::size_t r = 0; r < T; ++r) {
        for (std::size_t c = 0; c <= r; ++c) {
          const auto er = static_cast<Eigen::Index>(r), ec = static_cast<Eigen::Index>(c);
          if (fam == "Sigma_theta") {
            emit([&] { return fam + idx(r, c); }, sigma(er, ec), false);
          } else if (fam == "L_theta" && r > 0) {
            emit([&] { return fam + idx(r, c); }, st.cholesky(er, ec), false);
          } else if (fam == "Corr_theta" && r > c) {
            emit([&] { return fam + idx(r, c); }, sigma(er, ec) / std::sqrt(sigma(er, er) * sigma(ec, ec)),
                 false);
          }
        }
      }
    } else if (fam == "a.s") {
      emit([&] { return fam; }, st.a_s, false);
    } else if (fam == "b.s") {
      emit([&] { return fam; }, st.b_s, false);
    } else if (fam == "a.g") {
      emit([&] { return fam; }, st.a_g, false);
    } else if (fam == "b.g") {
      emit([&] { return fam; }, st.b_g, false);
    } else if (fam == "mean.lamda0") {
      emit([&] { return fam; }, st.lamda0_mean, false);
    } else if (fam == "pr.lamda0") {
      emit([&] { return fam; }, st.lamda0_precision, false);
    } else {
      throw std::invalid_argument("unknown monitored parameter '" + fam + "'");
    }
  }
  (void)K;
  (void)C;
}

}  // namespace

std::vector<std::string> Chain::monitored_names() const {
  std::vector<std::string> out;
  visit_monitored(*setup_, state_, [&](auto&& name, double, bool) { out.push_back(name()); });
  return out;
}

std::vector<bool> Chain::monitored_categorical() const {
  std::vector<bool> out;
  visit_monitored(*setup_, state_, [&](auto&&, double, bool cat) { out.push_back(cat); });
  return out;
}

void Chain::monitored_values(std::vector<double>& out) const {
  out.clear();
  visit_monitored(*setup_, state_, [&](auto&&, double v, bool) { out.push_back(v); });
}

// ---------------------------------------------------------------------------
// Sampler

Sampler::Sampler(ModelSpec spec, Dataset data, McmcConfig config)
    : setup_(std::make_shared<const SamplerSetup>(std::move(spec), std::move(data))),
      config_(std::move(config)) {
  config_.validate();
  // Fail on a bad monitor list before any sampling happens.
  Chain probe(setup_, config_.seed, 0, config_);
  (void)probe.monitored_names();
}

TraceStore Sampler::run(const ProgressHook& hook) {
  chains_.clear();
  for (int c = 0; c < config_.n_chains; ++c) {
    const auto stream = config_.identical_chains ? 0U : static_cast<std::uint64_t>(c);
    chains_.push_back(std::make_unique<Chain>(setup_, config_.seed, stream, config_));
  }
  iterations_done_ = 0;
  return advance(config_.n_iter, config_.burnin(), config_.adapt(), hook);
}

TraceStore Sampler::extend(int n_iter, const ProgressHook& hook) {
  if (chains_.empty()) throw std::logic_error("extend() called before run()");
  if (n_iter < 1) throw std::invalid_argument("extension length must be positive");
  return advance(n_iter, 0, 0, hook);
}

TraceStore Sampler::advance(int n_iter, int n_discard, int n_adapt, const ProgressHook& hook) {
  const auto& S = *setup_;
  TraceStore trace(chains_.front()->monitored_names(), chains_.front()->monitored_categorical(),
                   chains_.size());
  trace.set_class_layout(S.n_persons, S.n_occasions, S.n_classes);
  const long total = iterations_done_ + n_iter;
  std::mutex hook_mutex;
  std::vector<std::exception_ptr> errors(chains_.size());

  auto work = [&](std::size_t id) {
    try {
      Chain& chain = *chains_[id];
      const int thin = config_.thin;
      trace.reserve(id, static_cast<std::size_t>((n_iter - n_discard) / thin + 1));
      std::vector<double> row;
      for (int it = 1; it <= n_iter; ++it) {
        chain.sweep(it <= n_adapt);
        if (it > n_discard && (it - n_discard) % thin == 0) {
          chain.monitored_values(row);
          const double dev = chain.deviance();
          const auto [realized, replicated] = chain.discrepancies();
          if (!std::isfinite(dev)) throw std::runtime_error("deviance is not finite");
          trace.append(id, row, dev, realized, replicated);
          trace.tally(id, chain.state().membership);
        }
        if (hook && config_.progress_every > 0 && it % config_.progress_every == 0) {
          std::lock_guard<std::mutex> lock(hook_mutex);
          hook({static_cast<int>(id), iterations_done_ + it, total, chain.acceptance_rate()});
        }
      }
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };

  if (chains_.size() == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t id = 0; id < chains_.size(); ++id) threads.emplace_back(work, id);
    for (auto& t : threads) t.join();
  }
  for (std::size_t id = 0; id < errors.size(); ++id) {
    if (!errors[id]) continue;
    try {
      std::rethrow_exception(errors[id]);
    } catch (const std::exception& e) {
      throw SamplerError(static_cast<int>(id), e.what());
    }
  }
  iterations_done_ = total;
  return trace;
}

TraceStore run_chains(const ModelSpec& spec, const Dataset& data, const McmcConfig& config,
                      const ProgressHook& hook) {
  Sampler sampler(spec, data, config);
  return sampler.run(hook);
}

}  // namespace bcdm
