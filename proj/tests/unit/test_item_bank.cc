#include <gtest/gtest.h>

#include <vector>

#include "bcdm/item_bank.hpp"
#include "bcdm/random.hpp"
#include "bcdm/simulate.hpp"

using namespace bcdm;

namespace {

QMatrix binary_q() {
  IntMatrix m(5, 3);
  m << 1, 0, 0, 0, 1, 0, 1, 1, 0, 0, 1, 1, 1, 1, 1;
  return QMatrix(m);
}

}  // namespace

class ItemBankModels : public ::testing::TestWithParam<ModelKind> {};

TEST_P(ItemBankModels, FeatureFormMatchesModelKernels) {
  const ModelKind kind = GetParam();
  ItemBank bank(kind, binary_q());
  Random rng(17, 0);
  randomize_items(bank, ItemRanges{}, rng);
  ASSERT_TRUE(bank.satisfies_constraints());
  const ModelParams params = bank.to_params();
  const auto patterns = enumerate_patterns(bank.q());
  for (std::size_t i = 0; i < bank.n_items(); ++i) {
    for (std::size_t c = 0; c < patterns.n_patterns(); ++c) {
      const auto alpha = patterns.pattern(c);
      double expected;
      if (kind == ModelKind::TestletDina || kind == ModelKind::LongDina) {
        expected = prob_rdina(ideal_conjunctive(alpha, bank.q().row(i)),
                              std::get<RdinaParams>(params), i);
      } else {
        expected = response_probability(kind, params, alpha, bank.q().row(i), 0, i);
      }
      EXPECT_NEAR(bank.probability(i, alpha), expected, 1e-12) << "item " << i << " class " << c;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllBinary, ItemBankModels,
                         ::testing::Values(ModelKind::Dina, ModelKind::Rdina, ModelKind::Dino,
                                           ModelKind::Llm, ModelKind::Rrum, ModelKind::Lcdm,
                                           ModelKind::RpaDina, ModelKind::HoDina,
                                           ModelKind::TestletDina, ModelKind::LongDina));

TEST(ItemBank, ValueCountsFollowTheQRows) {
  const ItemBank dina(ModelKind::Dina, binary_q());
  EXPECT_EQ(dina.n_free_parameters(), 10u);
  const ItemBank llm(ModelKind::Llm, binary_q());
  EXPECT_EQ(llm.n_free_parameters(), 5u + 1 + 1 + 2 + 2 + 3);
  const ItemBank rrum(ModelKind::Rrum, binary_q());
  EXPECT_EQ(rrum.n_free_parameters(), llm.n_free_parameters());
  // Every non-empty subset of the required attributes: 1, 1, 3, 3, 7.
  const ItemBank lcdm(ModelKind::Lcdm, binary_q());
  EXPECT_EQ(lcdm.n_free_parameters(), 5u + 1 + 1 + 3 + 3 + 7);
}

TEST(ItemBank, NamesAndFamilies) {
  const ItemBank dina(ModelKind::Dina, binary_q());
  EXPECT_EQ(dina.value_name(2, 0), "s[3]");
  EXPECT_EQ(dina.value_name(2, 1), "g[3]");
  const ItemBank rrum(ModelKind::Rrum, binary_q());
  EXPECT_EQ(rrum.value_name(3, 0), "pai_star[4]");
  EXPECT_EQ(rrum.value_family(3, 2), "r_star");
  const ItemBank rdina(ModelKind::Rdina, binary_q());
  EXPECT_EQ(rdina.value_name(0, 1), "lamdaK[1]");
}

TEST(ItemBank, SharedSlotsNeedIdenticalRows) {
  IntMatrix m(3, 2);
  m << 1, 0, 0, 1, 1, 0;
  EXPECT_NO_THROW(ItemBank(ModelKind::Dina, QMatrix(m), {0, 1, 0}));
  EXPECT_THROW(ItemBank(ModelKind::Dina, QMatrix(m), {0, 0, 2}), std::invalid_argument);
  const ItemBank shared(ModelKind::Dina, QMatrix(m), {0, 1, 0});
  EXPECT_EQ(shared.n_slots(), 2u);
  EXPECT_EQ(shared.slot_of(2), 0u);
}

TEST(ItemBank, ConstraintChecks) {
  ItemBank bank(ModelKind::Dina, binary_q());
  auto v = bank.values(0);
  v[0] = 0.7;
  v[1] = 0.4;
  EXPECT_FALSE(bank.slot_satisfies_constraints(0, bank.values(0)));
  ItemBank polytomous_ok(ModelKind::RpaDina, QMatrix((IntMatrix(1, 1) << 2).finished()));
  EXPECT_EQ(polytomous_ok.n_items(), 1u);
  EXPECT_THROW(ItemBank(ModelKind::Dina, QMatrix((IntMatrix(1, 1) << 2).finished())),
               std::invalid_argument);
}
