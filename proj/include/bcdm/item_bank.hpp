#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bcdm/core.hpp"
#include "bcdm/models.hpp"

namespace bcdm {

/// How an item's parameter vector turns into a response probability.
enum class ParamFamily {
  SlipGuess,  // [s, g]
  Rdina,      // [lamda0, lamdaK], logit link
  Llm,        // [lamda0, main_k ...], logit link
  Rrum,       // [pai_star, r_star_k ...]
  Lcdm,       // [lamda0, effect_S ...], logit link
};

ParamFamily param_family(ModelKind kind);

/// Flat storage of item parameters used by the sampler. Items may share a
/// parameter slot (anchor items across occasions); all items of a slot must
/// have identical Q rows.
///
/// Every probability is computed from a feature vector x (one entry per
/// slot value) so that hot loops can cache x per (item, pattern):
///   SlipGuess  p = (1 - s)^x0 * g^x1          x = (eta, 1 - eta)
///   logit      p = logistic(sum_j v_j x_j)    x = (1, eta) or (1, prod_{k in S_j} alpha_k ...)
///   Rrum       p = prod_j v_j^x_j             x = (1, 1 - alpha_k ...)
class ItemBank {
 public:
  ItemBank() = default;
  ItemBank(ModelKind kind, QMatrix q, std::vector<int> slot_of_item = {});

  ModelKind kind() const { return kind_; }
  ParamFamily family() const { return family_; }
  bool logit_link() const;
  const QMatrix& q() const { return q_; }

  std::size_t n_items() const { return q_.n_items(); }
  std::size_t n_slots() const { return items_in_slot_.size(); }
  std::size_t slot_of(std::size_t item) const { return slot_of_item_[item]; }
  const std::vector<std::size_t>& items_in_slot(std::size_t slot) const {
    return items_in_slot_[slot];
  }

  std::size_t n_values(std::size_t slot) const { return offsets_[slot + 1] - offsets_[slot]; }
  std::span<double> values(std::size_t slot) {
    return {values_.data() + offsets_[slot], n_values(slot)};
  }
  std::span<const double> values(std::size_t slot) const {
    return {values_.data() + offsets_[slot], n_values(slot)};
  }
  /// Attribute subsets attached to values 1..n-1 of a slot (empty for SlipGuess / Rdina).
  std::span<const AttributeSet> effect_sets(std::size_t slot) const {
    return effect_sets_[slot];
  }
  /// Whether value j of a slot must be non-negative (rather than unrestricted or in [0, 1]).
  bool is_nonnegative(std::size_t slot, std::size_t j) const;
  /// Whether value j of a slot lives on [0, 1].
  bool is_probability(std::size_t slot, std::size_t j) const;

  void features(std::size_t item, std::span<const int> alpha, std::span<double> out) const;
  double combine(std::span<const double> values, std::span<const double> x) const;
  /// Logit families only.
  double combine_linear(std::span<const double> values, std::span<const double> x) const;

  double probability(std::size_t item, std::span<const int> alpha) const;

  /// True when every slot satisfies its family's constraints.
  bool satisfies_constraints() const;
  bool slot_satisfies_constraints(std::size_t slot, std::span<const double> values) const;

  /// Monitored name of value j in a slot, e.g. "s[3]", "r_star[2,4]", "lamda[5,1:2]".
  std::string value_name(std::size_t slot, std::size_t j) const;
  /// Parameter family label of value j ("s", "g", "lamda0", ...).
  std::string value_family(std::size_t slot, std::size_t j) const;

  std::size_t n_free_parameters() const { return values_.size(); }

  /// Expands slots into per-item typed parameters (RdinaParams for testlet kinds).
  ModelParams to_params() const;

 private:
  ModelKind kind_ = ModelKind::Dina;
  ParamFamily family_ = ParamFamily::SlipGuess;
  CondensationRule rule_ = CondensationRule::Conjunctive;
  QMatrix q_;
  std::vector<std::size_t> slot_of_item_;
  std::vector<std::vector<std::size_t>> items_in_slot_;
  std::vector<std::vector<AttributeSet>> effect_sets_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

}  // namespace bcdm
