#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace bcdm {

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Item-by-attribute requirement matrix. Entries are required attribute
/// levels: 0/1 for binary attributes, 0..L-1 for ordered-category ones.
class QMatrix {
 public:
  QMatrix() = default;
  explicit QMatrix(IntMatrix entries);

  std::size_t n_items() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t n_attributes() const { return static_cast<std::size_t>(entries_.cols()); }

  int operator()(std::size_t item, std::size_t attribute) const {
    return entries_(static_cast<Eigen::Index>(item), static_cast<Eigen::Index>(attribute));
  }
  std::span<const int> row(std::size_t item) const {
    return {entries_.data() + item * n_attributes(), n_attributes()};
  }
  const IntMatrix& entries() const { return entries_; }

  bool is_binary() const;
  /// q*_ik = 1 iff q_ik > 0.
  QMatrix binary_view() const;

 private:
  IntMatrix entries_;
};

/// Every admissible attribute pattern, one per row. Row order is an
/// odometer with attribute 1 varying fastest; class indices everywhere in
/// the library refer to this order.
class PatternSpace {
 public:
  PatternSpace() = default;
  explicit PatternSpace(std::vector<std::vector<int>> level_sets);

  std::size_t n_patterns() const { return static_cast<std::size_t>(patterns_.rows()); }
  std::size_t n_attributes() const { return level_sets_.size(); }
  const IntMatrix& patterns() const { return patterns_; }
  std::span<const int> pattern(std::size_t c) const {
    return {patterns_.data() + c * n_attributes(), n_attributes()};
  }
  const std::vector<std::vector<int>>& level_sets() const { return level_sets_; }

  /// Class index of an attribute vector; throws if a level is not admissible.
  std::size_t index_of(std::span<const int> alpha) const;
  /// Distance between class indices that differ by one level step on attribute k.
  std::size_t stride(std::size_t attribute) const { return strides_[attribute]; }
  bool is_binary() const;

 private:
  std::vector<std::vector<int>> level_sets_;
  std::vector<std::size_t> strides_;
  IntMatrix patterns_;
};

PatternSpace enumerate_patterns(const QMatrix& q);

/// Binary persons-by-items response matrix.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;
  explicit ResponseMatrix(IntMatrix entries);

  std::size_t n_persons() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t n_items() const { return static_cast<std::size_t>(entries_.cols()); }
  int operator()(std::size_t person, std::size_t item) const {
    return entries_(static_cast<Eigen::Index>(person), static_cast<Eigen::Index>(item));
  }
  std::span<const int> row(std::size_t person) const {
    return {entries_.data() + person * n_items(), n_items()};
  }
  const IntMatrix& entries() const { return entries_; }

 private:
  IntMatrix entries_;
};

// Ideal responses (condensation rules). 0^0 is taken as 1.

/// prod_k alpha_k^q_k: 1 iff every required attribute is mastered.
int ideal_conjunctive(std::span<const int> alpha, std::span<const int> q_row);
/// 1 - prod_k (1 - alpha_k)^q_k: 1 iff at least one required attribute is mastered.
int ideal_disjunctive(std::span<const int> alpha, std::span<const int> q_row);
/// prod_k I{alpha_k >= q_k}^I{q_k > 0} for ordered-category attributes.
int ideal_polytomous(std::span<const int> alpha, std::span<const int> q_row);

}  // namespace bcdm
