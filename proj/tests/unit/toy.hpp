#pragma once

#include <vector>

#include "bcdm/simulate.hpp"

namespace toy {

inline bcdm::QMatrix q_matrix(std::initializer_list<std::initializer_list<int>> rows) {
  bcdm::IntMatrix m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (int v : row) m(r, c++) = v;
    ++r;
  }
  return bcdm::QMatrix(m);
}

// Six items on two attributes; longitudinal designs repeat them on a second
// occasion with items 7 and 8 anchored to items 1 and 2.
inline bcdm::SimDesign design(bcdm::ModelKind kind, std::size_t n_persons, std::uint64_t seed) {
  using namespace bcdm;
  SimDesign d;
  d.structure = default_structure(kind);
  d.n_persons = n_persons;
  d.seed = seed;
  if (kind == ModelKind::RpaDina) {
    d.items = ItemBank(kind, q_matrix({{1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}, {0, 1}}));
  } else if (kind == ModelKind::LongDina) {
    const auto q = q_matrix({{1, 0}, {0, 1}, {1, 1}, {1, 0}, {0, 1}, {1, 1},
                             {1, 0}, {0, 1}, {1, 1}, {1, 0}, {0, 1}, {1, 1}});
    d.items = ItemBank(kind, q, {0, 1, 2, 3, 4, 5, 0, 1, 8, 9, 10, 11});
    d.item_occasion = {0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
    d.mu = Eigen::Vector2d(0.0, 0.3);
    d.cholesky = (Eigen::MatrixXd(2, 2) << 1.0, 0.0, 0.7, 0.7).finished();
  } else {
    d.items = ItemBank(kind, q_matrix({{1, 0}, {0, 1}, {1, 1}, {1, 0}, {0, 1}, {1, 1}}));
  }
  if (kind == ModelKind::TestletDina) {
    d.testlet = {0, 0, 0, 1, 1, -1};
    d.n_testlets = 2;
    d.testlet_variance = {0.5, 0.5};
  }
  if (d.structure != Structure::Unstructured) {
    d.slope = {1.5, 1.0};
    d.intercept = {-0.2, 0.3};
  }
  Random rng(seed, 7);
  randomize_items(d.items, ItemRanges{}, rng);
  return d;
}

inline bcdm::Dataset dataset(bcdm::ModelKind kind, std::size_t n_persons, std::uint64_t seed) {
  const auto d = design(kind, n_persons, seed);
  return bcdm::make_dataset(d, bcdm::simulate_responses(d));
}

inline const std::vector<bcdm::ModelKind>& all_kinds() {
  using bcdm::ModelKind;
  static const std::vector<ModelKind> kinds{
      ModelKind::Dina,    ModelKind::Rdina,  ModelKind::Dino,        ModelKind::Llm,
      ModelKind::Rrum,    ModelKind::Lcdm,   ModelKind::RpaDina,     ModelKind::HoDina,
      ModelKind::TestletDina, ModelKind::LongDina};
  return kinds;
}

}  // namespace toy
