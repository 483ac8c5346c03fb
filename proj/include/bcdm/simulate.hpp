#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bcdm/core.hpp"
#include "bcdm/item_bank.hpp"
#include "bcdm/latent.hpp"
#include "bcdm/random.hpp"
#include "bcdm/sampler.hpp"

namespace bcdm {

/// Generating model for a simulated data set. Item layout (Q, occasions,
/// testlets, shared slots) follows the same conventions as Dataset.
struct SimDesign {
  Structure structure = Structure::Unstructured;
  ItemBank items;  // true item parameters
  std::vector<int> item_occasion;
  std::vector<int> testlet;
  int n_testlets = 0;
  std::vector<double> testlet_variance;
  std::vector<double> mixing;            // unstructured; empty means uniform
  std::vector<double> slope, intercept;  // higher-order and longitudinal
  Eigen::VectorXd mu;                    // longitudinal
  Eigen::MatrixXd cholesky;              // longitudinal
  std::size_t n_persons = 0;
  std::uint64_t seed = 1;

  ModelKind kind() const { return items.kind(); }
  std::size_t n_occasions() const;
  void validate() const;
};

struct SimResult {
  ResponseMatrix y;
  IntMatrix alpha;              // persons x (K * T), occasion blocks side by side
  std::vector<int> membership;  // 0-based class per person and occasion: [n * T + t]
  Eigen::MatrixXd theta;        // persons x T; empty for the unstructured model
  Eigen::MatrixXd gamma;        // persons x testlets
  Eigen::MatrixXd probability;  // persons x items
};

/// Draws attributes from the latent structure, then every response from its
/// Bernoulli probability. Deterministic given the design's seed.
SimResult simulate_responses(const SimDesign& design);

/// The observed part of a simulation, ready for the sampler.
Dataset make_dataset(const SimDesign& design, const SimResult& result);

/// Closed ranges for drawing true item parameters uniformly.
struct ItemRanges {
  std::pair<double, double> slip{0.1, 0.2}, guess{0.1, 0.2};
  std::pair<double, double> lamda0{-2.5, -1.5}, lamdaK{2.5, 4.0};
  std::pair<double, double> main_effect{1.0, 2.5}, interaction{0.5, 1.5};
  std::pair<double, double> pai_star{0.8, 0.95}, r_star{0.1, 0.6};
};

void randomize_items(ItemBank& items, const ItemRanges& ranges, Random& rng);

/// Y.csv, alpha.csv and truth.txt ("name value" rows for item and structural
/// parameters) in `dir`.
void write_simulation(const std::filesystem::path& dir, const SimDesign& design,
                      const SimResult& result);

}  // namespace bcdm
