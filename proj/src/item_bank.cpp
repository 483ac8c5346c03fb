#include "bcdm/item_bank.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace bcdm {

ParamFamily param_family(ModelKind kind) {
  switch (kind) {
    case ModelKind::Dina:
    case ModelKind::Dino:
    case ModelKind::RpaDina:
    case ModelKind::HoDina: return ParamFamily::SlipGuess;
    case ModelKind::Rdina:
    case ModelKind::TestletDina:
    case ModelKind::LongDina: return ParamFamily::Rdina;
    case ModelKind::Llm: return ParamFamily::Llm;
    case ModelKind::Rrum: return ParamFamily::Rrum;
    case ModelKind::Lcdm: return ParamFamily::Lcdm;
  }
  throw std::invalid_argument("unsupported model");
}

namespace {

// Non-empty subsets of `required`, by size and then lexicographically.
std::vector<AttributeSet> all_subsets(const std::vector<int>& required) {
  std::vector<AttributeSet> out;
  const std::size_t r = required.size();
  for (std::size_t size = 1; size <= r; ++size) {
    std::vector<std::size_t> idx(size);
    for (std::size_t j = 0; j < size; ++j) idx[j] = j;
    while (true) {
      AttributeSet set = 0;
      for (auto j : idx) set |= AttributeSet{1} << required[j];
      out.push_back(set);
      std::size_t pos = size;
      while (pos > 0 && idx[pos - 1] == r - size + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t j = pos; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return out;
}

std::string set_label(AttributeSet set) {
  std::string s;
  for (int k = 0; k < 32; ++k) {
    if (set & (AttributeSet{1} << k)) {
      if (!s.empty()) s += '_';
      s += std::to_string(k + 1);
    }
  }
  return s;
}

}  // namespace

ItemBank::ItemBank(ModelKind kind, QMatrix q, std::vector<int> slot_of_item)
    : kind_(kind), family_(param_family(kind)), rule_(condensation_rule(kind)), q_(std::move(q)) {
  const std::size_t I = q_.n_items(), K = q_.n_attributes();
  if (K > 32) throw std::invalid_argument("at most 32 attributes are supported");
  if (kind_ != ModelKind::RpaDina && !q_.is_binary()) {
    throw std::invalid_argument("model '" + std::string(to_string(kind_)) +
                                "' requires a binary Q-matrix");
  }
  if (slot_of_item.empty()) {
    slot_of_item.resize(I);
    for (std::size_t i = 0; i < I; ++i) slot_of_item[i] = static_cast<int>(i);
  }
  if (slot_of_item.size() != I) throw std::invalid_argument("slot map must cover every item");

  // Renumber slots in order of first appearance.
  std::vector<int> remap;
  slot_of_item_.resize(I);
  for (std::size_t i = 0; i < I; ++i) {
    const int label = slot_of_item[i];
    auto it = std::find(remap.begin(), remap.end(), label);
    std::size_t s = static_cast<std::size_t>(it - remap.begin());
    if (it == remap.end()) {
      remap.push_back(label);
      items_in_slot_.emplace_back();
    }
    slot_of_item_[i] = s;
    items_in_slot_[s].push_back(i);
  }

  offsets_.assign(1, 0);
  for (const auto& items : items_in_slot_) {
    const std::size_t first = items.front();
    for (std::size_t other : items) {
      for (std::size_t k = 0; k < K; ++k) {
        if (q_(other, k) != q_(first, k)) {
          throw std::invalid_argument("items sharing parameters must have identical Q rows");
        }
      }
    }
    std::vector<int> required;
    for (std::size_t k = 0; k < K; ++k) {
      if (q_(first, k) > 0) required.push_back(static_cast<int>(k));
    }
    std::vector<AttributeSet> sets;
    switch (family_) {
      case ParamFamily::SlipGuess:
      case ParamFamily::Rdina: break;
      case ParamFamily::Llm:
      case ParamFamily::Rrum:
        for (int k : required) sets.push_back(AttributeSet{1} << k);
        break;
      case ParamFamily::Lcdm: sets = all_subsets(required); break;
    }
    const std::size_t n = (family_ == ParamFamily::SlipGuess || family_ == ParamFamily::Rdina)
                              ? 2
                              : 1 + sets.size();
    effect_sets_.push_back(std::move(sets));
    offsets_.push_back(offsets_.back() + n);
  }
  values_.assign(offsets_.back(), 0.0);
}

bool ItemBank::logit_link() const {
  return family_ == ParamFamily::Rdina || family_ == ParamFamily::Llm ||
         family_ == ParamFamily::Lcdm;
}

bool ItemBank::is_nonnegative(std::size_t slot, std::size_t j) const {
  switch (family_) {
    case ParamFamily::Rdina: return j == 1;
    case ParamFamily::Llm: return j >= 1;
    case ParamFamily::Lcdm: return j >= 1 && std::has_single_bit(effect_sets_[slot][j - 1]);
    default: return false;
  }
}

bool ItemBank::is_probability(std::size_t, std::size_t) const {
  return family_ == ParamFamily::SlipGuess || family_ == ParamFamily::Rrum;
}

void ItemBank::features(std::size_t item, std::span<const int> alpha,
                        std::span<double> out) const {
  const std::size_t slot = slot_of_item_[item];
  const auto q_row = q_.row(item);
  auto eta = [&] {
    switch (rule_) {
      case CondensationRule::Disjunctive: return ideal_disjunctive(alpha, q_row);
      case CondensationRule::Polytomous: return ideal_polytomous(alpha, q_row);
      default: return ideal_conjunctive(alpha, q_row);
    }
  };
  switch (family_) {
    case ParamFamily::SlipGuess: {
      const int e = eta();
      out[0] = e;
      out[1] = 1 - e;
      break;
    }
    case ParamFamily::Rdina:
      out[0] = 1.0;
      out[1] = eta();
      break;
    case ParamFamily::Llm:
    case ParamFamily::Lcdm: {
      out[0] = 1.0;
      const auto sets = effect_sets_[slot];
      for (std::size_t j = 0; j < sets.size(); ++j) {
        bool all = true;
        for (std::size_t k = 0; k < alpha.size(); ++k) {
          if ((sets[j] >> k) & 1U) all = all && alpha[k] > 0;
        }
        out[j + 1] = all ? 1.0 : 0.0;
      }
      break;
    }
    case ParamFamily::Rrum: {
      out[0] = 1.0;
      const auto sets = effect_sets_[slot];
      for (std::size_t j = 0; j < sets.size(); ++j) {
        const auto k = static_cast<std::size_t>(std::countr_zero(sets[j]));
        out[j + 1] = alpha[k] > 0 ? 0.0 : 1.0;
      }
      break;
    }
  }
}

double ItemBank::combine_linear(std::span<const double> v, std::span<const double> x) const {
  double lp = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) lp += v[j] * x[j];
  return lp;
}

double ItemBank::combine(std::span<const double> v, std::span<const double> x) const {
  switch (family_) {
    case ParamFamily::SlipGuess: return x[0] > 0.0 ? 1.0 - v[0] : v[1];
    case ParamFamily::Rrum: {
      double p = 1.0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (x[j] > 0.0) p *= v[j];
      }
      return p;
    }
    default: return logistic(combine_linear(v, x));
  }
}

double ItemBank::probability(std::size_t item, std::span<const int> alpha) const {
  const std::size_t slot = slot_of_item_[item];
  std::vector<double> x(n_values(slot));
  features(item, alpha, x);
  return combine(values(slot), x);
}

bool ItemBank::slot_satisfies_constraints(std::size_t slot, std::span<const double> v) const {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  if (family_ == ParamFamily::SlipGuess) {
    return v[0] >= 0.0 && v[0] <= 1.0 && v[1] >= 0.0 && v[1] < 1.0 - v[0];
  }
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (is_probability(slot, j) && !(v[j] >= 0.0 && v[j] <= 1.0)) return false;
    if (is_nonnegative(slot, j) && v[j] < 0.0) return false;
  }
  return true;
}

bool ItemBank::satisfies_constraints() const {
  for (std::size_t s = 0; s < n_slots(); ++s) {
    if (!slot_satisfies_constraints(s, values(s))) return false;
  }
  return true;
}

std::string ItemBank::value_family(std::size_t slot, std::size_t j) const {
  switch (family_) {
    case ParamFamily::SlipGuess: return j == 0 ? "s" : "g";
    case ParamFamily::Rdina: return j == 0 ? "lamda0" : "lamdaK";
    case ParamFamily::Llm:
    case ParamFamily::Lcdm: return j == 0 ? "lamda0" : "lamda";
    case ParamFamily::Rrum: return j == 0 ? "pai_star" : "r_star";
  }
  (void)slot;
  return {};
}

std::string ItemBank::value_name(std::size_t slot, std::size_t j) const {
  const std::string item = std::to_string(items_in_slot_[slot].front() + 1);
  const std::string fam = value_family(slot, j);
  if (family_ == ParamFamily::SlipGuess || family_ == ParamFamily::Rdina || j == 0) {
    return fam + "[" + item + "]";
  }
  return fam + "[" + item + "," + set_label(effect_sets_[slot][j - 1]) + "]";
}

ModelParams ItemBank::to_params() const {
  const std::size_t I = n_items(), K = q_.n_attributes();
  std::vector<double> first(I), second(I);
  for (std::size_t i = 0; i < I; ++i) {
    const auto v = values(slot_of_item_[i]);
    first[i] = v[0];
    second[i] = v.size() > 1 ? v[1] : 0.0;
  }
  switch (family_) {
    case ParamFamily::SlipGuess: return DinaParams(first, second);
    case ParamFamily::Rdina: return RdinaParams(first, second);
    case ParamFamily::Llm:
    case ParamFamily::Rrum: {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(I),
                                                static_cast<Eigen::Index>(K));
      for (std::size_t i = 0; i < I; ++i) {
        const std::size_t s = slot_of_item_[i];
        const auto sets = effect_sets_[s];
        for (std::size_t j = 0; j < sets.size(); ++j) {
          m(static_cast<Eigen::Index>(i), std::countr_zero(sets[j])) = values(s)[j + 1];
        }
      }
      if (family_ == ParamFamily::Llm) return LlmParams(first, m);
      return RrumParams(first, m);
    }
    case ParamFamily::Lcdm: {
      std::vector<std::map<AttributeSet, double>> effects(I);
      for (std::size_t i = 0; i < I; ++i) {
        const std::size_t s = slot_of_item_[i];
        const auto sets = effect_sets_[s];
        for (std::size_t j = 0; j < sets.size(); ++j) effects[i][sets[j]] = values(s)[j + 1];
      }
      return LcdmParams(first, std::move(effects));
    }
  }
  throw std::invalid_argument("unsupported model");
}

}  // namespace bcdm
