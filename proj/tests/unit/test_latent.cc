#include <gtest/gtest.h>

#include <cmath>

#include "bcdm/latent.hpp"

using namespace bcdm;

TEST(Latent, SigmaFromCholesky) {
  Eigen::MatrixXd d(2, 2);
  d << 1.0, 0.0, 0.8, 0.6;
  const Eigen::MatrixXd s = build_sigma_from_cholesky(d);
  EXPECT_DOUBLE_EQ(s(0, 0), 1.0);
  EXPECT_NEAR(s(1, 0), 0.8, 1e-15);
  EXPECT_NEAR(s(1, 1), 1.0, 1e-15);
  d(0, 0) = 2.0;
  EXPECT_THROW(build_sigma_from_cholesky(d), std::invalid_argument);
  d(0, 0) = 1.0;
  d(0, 1) = 0.1;
  EXPECT_THROW(build_sigma_from_cholesky(d), std::invalid_argument);
}

TEST(Latent, HigherOrderMasteryProbability) {
  HigherOrderLatent h{{1.5, 0.0}, {0.5, -1.0}, {}};
  EXPECT_NEAR(attribute_prob_higher_order(1.0, 0, h), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(attribute_prob_higher_order(-3.0, 1, h), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_THROW(attribute_prob_higher_order(0.0, 2, h), std::out_of_range);
}

TEST(Latent, UnstructuredValidation) {
  auto u = UnstructuredLatent::uniform(4);
  EXPECT_NO_THROW(u.validate());
  EXPECT_DOUBLE_EQ(pattern_prior_unstructured(3, u), 0.25);
  u.mixing[0] = 0.5;
  EXPECT_THROW(u.validate(), std::invalid_argument);
  EXPECT_THROW(pattern_prior_unstructured(4, UnstructuredLatent::uniform(4)), std::out_of_range);
}

TEST(Latent, LongitudinalCovariance) {
  LongitudinalLatent l;
  l.mean = Eigen::Vector2d(0.0, 0.5);
  l.cholesky = (Eigen::MatrixXd(2, 2) << 1.0, 0.0, 0.3, 0.9).finished();
  l.traits = Eigen::MatrixXd::Zero(3, 2);
  EXPECT_NO_THROW(l.validate());
  EXPECT_NEAR(l.covariance()(1, 1), 0.09 + 0.81, 1e-15);
  l.mean(0) = 0.1;
  EXPECT_THROW(l.validate(), std::invalid_argument);
}

TEST(Latent, PriorDefaults) {
  const PriorSpec p;
  EXPECT_DOUBLE_EQ(p.resolved_lamdaK(ModelKind::Rdina).mean, 2.192);
  EXPECT_DOUBLE_EQ(p.resolved_lamdaK(ModelKind::TestletDina).mean, 0.0);
  EXPECT_DOUBLE_EQ(PriorSpec::good_items().b_s, 3.0);
  EXPECT_DOUBLE_EQ(PriorSpec::rrum_informative().a_pai_star, 3.0);
  PriorSpec bad;
  bad.xi.precision = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_EQ(default_structure(ModelKind::HoDina), Structure::HigherOrder);
  EXPECT_EQ(default_structure(ModelKind::LongDina), Structure::Longitudinal);
  EXPECT_EQ(parse_structure("higher-order"), Structure::HigherOrder);
}
