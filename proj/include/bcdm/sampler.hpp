#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bcdm/core.hpp"
#include "bcdm/item_bank.hpp"
#include "bcdm/latent.hpp"
#include "bcdm/models.hpp"
#include "bcdm/random.hpp"
#include "bcdm/trace.hpp"

namespace bcdm {

struct McmcConfig {
  int n_chains = 2;
  int n_iter = 10000;
  std::optional<int> n_burnin;  // default n_iter / 2
  int thin = 1;
  std::uint64_t seed = 12345;
  /// Initial random-walk scales keyed by parameter family ("lamda0", "lamdaK",
  /// "lamda", "pai_star", "r_star", "theta", "xi", "beta", "gamma",
  /// "mu_theta", "L_theta", "hyper"). Missing families use built-in values.
  std::map<std::string, double> proposal_sd;
  std::optional<int> adapt_iters;  // default: the burn-in length
  /// Give every chain the same stream (degenerate diagnostics check).
  bool identical_chains = false;
  /// Progress callback period in iterations (0 disables).
  int progress_every = 1000;

  int burnin() const { return n_burnin ? *n_burnin : n_iter / 2; }
  int adapt() const { return adapt_iters ? *adapt_iters : burnin(); }
  void validate() const;
};

/// Observed data plus the bookkeeping that ties items to occasions,
/// testlets and shared parameters. Items are stacked across occasions.
struct Dataset {
  QMatrix q;
  ResponseMatrix y;
  std::vector<int> item_occasion;  // 0-based; empty means a single occasion
  std::vector<int> testlet;        // 0-based testlet per item or -1; empty means none
  int n_testlets = 0;
  std::vector<int> item_slot;      // parameter tying; empty means one slot per item

  std::size_t n_occasions() const;
  bool has_testlets() const;
  /// Throws DimensionError when the pieces disagree.
  void validate() const;
};

struct ModelSpec {
  ModelKind kind = ModelKind::Dina;
  std::optional<Structure> structure;  // default_structure(kind) when unset
  PriorSpec prior;
  std::vector<double> dirichlet_scale;  // delta; empty means all ones
  /// Monitored parameter families; empty selects the model's defaults.
  std::vector<std::string> monitor;

  Structure resolved_structure() const {
    return structure ? *structure : default_structure(kind);
  }
};

/// Default monitored families for a model/structure combination.
std::vector<std::string> default_monitor(ModelKind kind, Structure structure, bool has_testlets,
                                         const PriorSpec& prior);

/// Read-only tables shared by every chain of a run.
struct SamplerSetup {
  SamplerSetup(ModelSpec spec, Dataset data);

  ModelSpec spec;
  Structure structure;
  Dataset data;
  PatternSpace patterns;  // over the K attributes of one occasion
  ItemBank bank;          // layout only; values live in each chain
  std::size_t n_persons, n_items, n_attributes, n_classes, n_occasions;
  std::vector<std::uint8_t> y;  // persons x items, row-major
  std::vector<std::size_t> occasion_of_item;
  std::vector<std::vector<std::size_t>> items_of_occasion;
  std::vector<int> testlet_of_item;  // -1 when standalone
  std::vector<std::vector<std::size_t>> items_of_testlet;
  /// Items of occasion t whose Q row involves attribute k: [t * K + k].
  std::vector<std::vector<std::size_t>> items_on_attribute;
  /// Feature vectors x(item, class), see ItemBank.
  std::vector<std::size_t> feature_offset;
  std::vector<double> features;
  std::vector<double> delta;
  bool person_offsets;  // testlet effects enter the linear predictor

  std::span<const double> feature(std::size_t item, std::size_t c) const {
    const std::size_t v = bank.n_values(bank.slot_of(item));
    return {features.data() + feature_offset[item] + c * v, v};
  }
  /// Counted parameters: sampled item values, free mixing proportions and
  /// structural parameters (testlet effects themselves are not counted).
  std::size_t n_parameters() const;
};

/// Random-walk proposal scale with acceptance bookkeeping. During adaptation
/// the scale moves by exp(+-min(0.1, 1/sqrt(batch))) after every batch of 50
/// proposals, toward 44% acceptance.
struct RandomWalk {
  double scale = 1.0;
  long proposed = 0, accepted = 0;
  int batch_proposed = 0, batch_accepted = 0, batches = 0;

  void record(bool was_accepted, bool adapting);
  double acceptance_rate() const {
    return proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  }
};

struct MhResult {
  double value;
  double log_density;
  bool accepted;
};

/// One random-walk Metropolis step on a scalar. Proposals outside [lo, hi] or
/// with a non-finite log density are rejected.
template <class LogDensity>
MhResult mh_update(Random& rng, double current, double current_log_density, RandomWalk& walk,
                   bool adapting, LogDensity&& log_density,
                   double lo = -std::numeric_limits<double>::infinity(),
                   double hi = std::numeric_limits<double>::infinity()) {
  const double proposal = current + walk.scale * rng.normal();
  MhResult out{current, current_log_density, false};
  if (proposal >= lo && proposal <= hi) {
    const double lp = log_density(proposal);
    if (std::isfinite(lp)) {
      const double log_ratio = lp - current_log_density;
      if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) out = {proposal, lp, true};
    }
  }
  walk.record(out.accepted, adapting);
  return out;
}

/// Complete state of one chain.
struct ChainState {
  ItemBank items;
  std::vector<int> membership;  // class per person and occasion: [n * T + t]
  std::vector<double> mixing;   // unstructured
  std::vector<double> theta;    // [n * T + t]
  std::vector<double> slope, intercept;  // xi, beta
  Eigen::VectorXd mu;
  Eigen::MatrixXd cholesky;
  Eigen::MatrixXd gamma;  // persons x testlets
  std::vector<double> testlet_variance;
  double a_s = 1, b_s = 1, a_g = 1, b_g = 1;
  double lamda0_mean = 0, lamda0_precision = 1;
  long iteration = 0;
};

struct Progress {
  int chain;
  long iteration;
  long total;
  double acceptance;  // mean random-walk acceptance so far
};
using ProgressHook = std::function<void(const Progress&)>;

class Chain {
 public:
  /// Initializes a dispersed state from the chain's own stream.
  Chain(std::shared_ptr<const SamplerSetup> setup, std::uint64_t seed, std::uint64_t stream,
        const McmcConfig& config = {});

  const SamplerSetup& setup() const { return *setup_; }
  const ChainState& state() const { return state_; }
  /// Mutable access for tests; call refresh() after editing.
  ChainState& mutable_state() { return state_; }
  void refresh();
  Random& rng() { return rng_; }

  /// One full sweep in the documented order.
  void sweep(bool adapting);
  /// Person-level block only (memberships, or attributes and traits), with
  /// every other parameter held fixed.
  void sweep_persons(bool adapting);

  int gibbs_class_membership(std::size_t person);
  std::vector<double> gibbs_mixing_proportions();
  std::pair<double, double> gibbs_slip_guess(std::size_t slot);
  int gibbs_bernoulli_attribute(std::size_t person, std::size_t attribute,
                                std::size_t occasion = 0);
  double gibbs_testlet_precision(std::size_t testlet);

  /// -2 log p(Y | memberships, parameters).
  double deviance() const;
  /// Realized and replicated squared-Pearson discrepancies; draws Y_rep.
  std::pair<double, double> discrepancies();

  std::vector<std::string> monitored_names() const;
  std::vector<bool> monitored_categorical() const;
  void monitored_values(std::vector<double>& out) const;

  double acceptance_rate() const;
  bool satisfies_constraints() const;

 private:
  double cell_loglik(std::size_t n, std::size_t i, std::size_t c) const;
  double cell_probability(std::size_t n, std::size_t i, std::size_t c, double* complement) const;
  void refresh_item(std::size_t item);
  void refresh_slot(std::size_t slot);
  void refresh_precision();
  void tally_counts();
  double slot_loglik(std::size_t slot, std::span<const double> values) const;
  double item_prior(std::size_t slot, std::size_t j, double v) const;
  double attribute_loglik(std::size_t n, std::size_t t, std::size_t k, double theta) const;
  double trait_log_prior(std::size_t n, std::size_t t, double value) const;
  double structural_loglik(std::size_t k, double xi, double beta) const;
  double mvn_loglik() const;
  double mvn_quad() const;
  double chol_row_prior(std::size_t t) const;
  double testlet_block_loglik(std::size_t n, std::size_t m, double gamma) const;
  double hyper_beta_logpost(double as, double bs, double ag, double bg) const;

  void update_memberships();
  void update_attributes();
  void update_traits(bool adapting);
  void update_items(bool adapting);
  void update_testlets(bool adapting);
  void update_structure(bool adapting);
  void update_hyper(bool adapting);
  void rescale_testlet(std::size_t m, bool adapting);
  void rescale_traits(bool adapting);
  void move_occasion(std::size_t t, bool adapting);
  void initialize(std::uint64_t stream);

  std::shared_ptr<const SamplerSetup> setup_;
  Random rng_;
  ChainState state_;
  std::vector<double> lin_, logp_, log1mp_, prob_, comp_;  // per (item, class)
  std::vector<double> n1_, n0_;                            // response tallies per (item, class)
  Eigen::MatrixXd precision_;                              // Sigma_theta^{-1}
  double logdet_chol_ = 0.0;
  std::vector<RandomWalk> item_walk_;  // per item value
  RandomWalk theta_walk_, gamma_walk_;
  std::vector<RandomWalk> xi_walk_, beta_walk_, mu_walk_, chol_walk_, hyper_walk_;
  // Joint moves along weakly identified directions (scale of the traits,
  // location/scale of one occasion, scale of a testlet's effects).
  RandomWalk trait_scale_walk_;
  std::vector<RandomWalk> occasion_shift_walk_, occasion_scale_walk_,
      occasion_shear_walk_, testlet_scale_walk_;
  std::vector<std::size_t> value_offset_;
};

class Sampler {
 public:
  Sampler(ModelSpec spec, Dataset data, McmcConfig config);

  /// Burn-in plus sampling from freshly initialized chains.
  TraceStore run(const ProgressHook& hook = {});
  /// Continues every chain for n_iter more iterations (no adaptation); all
  /// iterations are kept subject to thinning.
  TraceStore extend(int n_iter, const ProgressHook& hook = {});

  const SamplerSetup& setup() const { return *setup_; }
  const McmcConfig& config() const { return config_; }
  const Chain& chain(std::size_t c) const { return *chains_.at(c); }
  long iterations_done() const { return iterations_done_; }

 private:
  TraceStore advance(int n_iter, int n_discard, int n_adapt, const ProgressHook& hook);

  std::shared_ptr<const SamplerSetup> setup_;
  McmcConfig config_;
  std::vector<std::unique_ptr<Chain>> chains_;
  long iterations_done_ = 0;
};

TraceStore run_chains(const ModelSpec& spec, const Dataset& data, const McmcConfig& config,
                      const ProgressHook& hook = {});

}  // namespace bcdm
