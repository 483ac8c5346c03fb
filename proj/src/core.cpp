#include "bcdm/core.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

namespace bcdm {

QMatrix::QMatrix(IntMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.cols() == 0) {
    throw std::invalid_argument("Q-matrix must have at least one item and one attribute");
  }
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    bool any = false;
    for (Eigen::Index k = 0; k < entries_.cols(); ++k) {
      if (entries_(i, k) < 0) {
        throw std::invalid_argument("Q-matrix entry (" + std::to_string(i + 1) + ", " +
                                    std::to_string(k + 1) + ") is negative");
      }
      any = any || entries_(i, k) > 0;
    }
    if (!any) {
      throw std::invalid_argument("Q-matrix row " + std::to_string(i + 1) +
                                  " requires no attribute");
    }
  }
}

bool QMatrix::is_binary() const {
  return (entries_.array() <= 1).all();
}

QMatrix QMatrix::binary_view() const {
  IntMatrix b = (entries_.array() > 0).cast<int>();
  return QMatrix(std::move(b));
}

PatternSpace::PatternSpace(std::vector<std::vector<int>> level_sets)
    : level_sets_(std::move(level_sets)) {
  const std::size_t K = level_sets_.size();
  std::size_t C = 1;
  strides_.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& levels = level_sets_[k];
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    if (levels.empty() || levels.front() != 0) {
      throw std::invalid_argument("attribute level set must contain 0");
    }
    strides_[k] = C;
    C *= levels.size();
  }
  patterns_.resize(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(K));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t pos = (c / strides_[k]) % level_sets_[k].size();
      patterns_(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = level_sets_[k][pos];
    }
  }
}

std::size_t PatternSpace::index_of(std::span<const int> alpha) const {
  if (alpha.size() != n_attributes()) {
    throw std::invalid_argument("attribute vector has wrong length");
  }
  std::size_t c = 0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const auto& levels = level_sets_[k];
    auto it = std::lower_bound(levels.begin(), levels.end(), alpha[k]);
    if (it == levels.end() || *it != alpha[k]) {
      throw std::invalid_argument("attribute level " + std::to_string(alpha[k]) +
                                  " is not admissible for attribute " + std::to_string(k + 1));
    }
    c += static_cast<std::size_t>(it - levels.begin()) * strides_[k];
  }
  return c;
}

bool PatternSpace::is_binary() const {
  return std::all_of(level_sets_.begin(), level_sets_.end(),
                     [](const auto& l) { return l.size() == 2 && l[1] == 1; });
}

PatternSpace enumerate_patterns(const QMatrix& q) {
  std::vector<std::vector<int>> level_sets(q.n_attributes());
  for (std::size_t k = 0; k < q.n_attributes(); ++k) {
    std::set<int> levels{0};
    for (std::size_t i = 0; i < q.n_items(); ++i) levels.insert(q(i, k));
    level_sets[k].assign(levels.begin(), levels.end());
  }
  return PatternSpace(std::move(level_sets));
}

ResponseMatrix::ResponseMatrix(IntMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.cols() == 0) {
    throw std::invalid_argument("response matrix is empty");
  }
  if (!((entries_.array() == 0) || (entries_.array() == 1)).all()) {
    throw std::invalid_argument("responses must be 0 or 1");
  }
}

namespace {

void check_binary_pair(std::span<const int> alpha, std::span<const int> q_row) {
  if (alpha.size() != q_row.size()) {
    throw std::invalid_argument("attribute vector and Q row differ in length");
  }
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if ((alpha[k] != 0 && alpha[k] != 1) || (q_row[k] != 0 && q_row[k] != 1)) {
      throw std::invalid_argument("condensation rule requires binary inputs");
    }
  }
}

}  // namespace

int ideal_conjunctive(std::span<const int> alpha, std::span<const int> q_row) {
  check_binary_pair(alpha, q_row);
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (q_row[k] == 1 && alpha[k] == 0) return 0;
  }
  return 1;
}

int ideal_disjunctive(std::span<const int> alpha, std::span<const int> q_row) {
  check_binary_pair(alpha, q_row);
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (q_row[k] == 1 && alpha[k] == 1) return 1;
  }
  return 0;
}

int ideal_polytomous(std::span<const int> alpha, std::span<const int> q_row) {
  if (alpha.size() != q_row.size()) {
    throw std::invalid_argument("attribute vector and Q row differ in length");
  }
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (alpha[k] < 0 || q_row[k] < 0) {
      throw std::invalid_argument("attribute levels must be non-negative");
    }
  }
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (q_row[k] > 0 && alpha[k] < q_row[k]) return 0;
  }
  return 1;
}

}  // namespace bcdm
